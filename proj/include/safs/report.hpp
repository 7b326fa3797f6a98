#pragma once

#include <json.hpp>

#include "safs/binning.hpp"
#include "safs/inference.hpp"
#include "safs/scan.hpp"
#include "safs/selection.hpp"

namespace safs {

using json = nlohmann::ordered_json;

/// {feature: [value labels]} keyed by feature name.
inline json description_to_json(const dataset& data, const subgroup_description& d) {
    json out = json::object();
    for (const auto& [f, values] : d.clauses()) {
        json labels = json::array();
        for (auto v : values) labels.push_back(data.feature(f).values[v]);
        out[data.feature(f).name] = std::move(labels);
    }
    return out;
}

/// Inverse of description_to_json; unknown names or labels are data errors.
inline subgroup_description description_from_json(const dataset& data, const json& doc) {
    subgroup_description d;
    for (const auto& [name, labels] : doc.items()) {
        const auto f = data.find_feature(name);
        if (!f) throw data_error("description references unknown feature " + name);
        std::vector<code_t> values;
        for (const auto& l : labels) {
            const auto code = data.feature(*f).code_of(l.get<std::string>());
            if (!code) throw data_error("description references unknown value " + l.get<std::string>() + " of " + name);
            values.push_back(*code);
        }
        d.set_clause(*f, std::move(values), &data);
    }
    return d;
}

inline json ranking_to_json(const dataset& data, const feature_ranking& ranking) {
    std::vector<std::size_t> position(ranking.order.size());
    for (std::size_t r = 0; r < ranking.order.size(); ++r) position[ranking.order[r]] = r;
    json rows = json::array();
    for (auto m : ranking.order) {
        const auto profile = feature_odds_profile(data, m);
        rows.push_back({{"feature", data.feature(m).name},
                        {"eta", ranking.scores[m]},
                        {"rank", position[m] + 1},
                        {"ratios", profile.ratios},
                        {"strata_sizes", profile.strata_sizes}});
    }
    return rows;
}

inline json scan_to_json(const dataset& data, const scan_result& r) {
    return {{"score", r.score},
            {"q", std::isinf(r.q) ? json("inf") : json(r.q)},
            {"n", r.n},
            {"y_sum", r.y_sum},
            {"description", description_to_json(data, r.description)},
            {"restarts", r.restarts},
            {"seed", r.seed},
            {"direction", to_string(r.dir)},
            {"iterations", r.iterations}};
}

inline json odds_ratio_to_json(const odds_ratio_report& r) {
    return {{"n", r.n},
            {"or", r.odds_ratio},
            {"ci", {r.ci_low, r.ci_high}},
            {"p", r.p ? json(*r.p) : json(nullptr)},
            {"smoothed", r.smoothed}};
}

inline json significance_to_json(const significance_result& s) {
    return {{"actual", s.actual},
            {"p", s.p},
            {"sigma", s.sigma()},
            {"xi", s.xi},
            {"null_scores", s.null_scores}};
}

} // namespace safs
