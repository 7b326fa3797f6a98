#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "safs/error.hpp"
#include "safs/tabular.hpp"

namespace safs {

/// Quantile bins for one numeric feature. Bin k covers (cut[k-1], cut[k]];
/// the first bin is open below and the last open above.
struct binning_rule {
    std::string feature;
    std::vector<double> cut_points;
    std::vector<std::string> labels;
    /// Present when the training column had missing values; coded after the bins.
    std::optional<std::string> missing;
    /// Set when the column had fewer distinct values than requested bins allow.
    bool degenerate = false;

    std::size_t bin_count() const { return cut_points.size() + 1; }

    code_t apply(double value) const {
        if (std::isnan(value)) {
            if (!missing) throw data_error("feature " + feature + ": missing value but no missing bin was trained");
            return static_cast<code_t>(bin_count());
        }
        const auto it = std::lower_bound(cut_points.begin(), cut_points.end(), value);
        return static_cast<code_t>(it - cut_points.begin());
    }

    friend bool operator==(const binning_rule&, const binning_rule&) = default;
};

/// Linear-interpolation quantile of sorted data, q in [0, 1].
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

/// Fits equal-frequency bins over the non-missing values. Duplicate cut points
/// and cuts that would leave a bin empty are dropped, so every bin is populated.
inline binning_rule fit_quantile_bins(const std::string& name, std::span<const double> values, std::size_t bins) {
    if (bins < 2) throw usage_error("discretize: bins must be at least 2");
    std::vector<double> sorted;
    bool missing = false;
    for (double v : values) {
        if (std::isnan(v)) missing = true;
        else sorted.push_back(v);
    }
    std::sort(sorted.begin(), sorted.end());

    binning_rule rule{name, {}, {}, std::nullopt, false};
    if (!sorted.empty()) {
        std::vector<double> cuts;
        for (std::size_t k = 1; k < bins; ++k) {
            const double c = quantile_sorted(sorted, static_cast<double>(k) / static_cast<double>(bins));
            if (cuts.empty() || c > cuts.back()) cuts.push_back(c);
        }
        // keep a cut only if both neighbouring bins receive values
        std::vector<double> kept;
        double lower = -INFINITY;
        for (std::size_t k = 0; k < cuts.size(); ++k) {
            const double c = cuts[k];
            const bool below = std::upper_bound(sorted.begin(), sorted.end(), c) !=
                               std::upper_bound(sorted.begin(), sorted.end(), lower);
            const bool above = sorted.back() > c;
            if (below && above) {
                kept.push_back(c);
                lower = c;
            }
        }
        rule.cut_points = std::move(kept);
        rule.degenerate = rule.cut_points.size() + 1 < bins;
    } else {
        rule.degenerate = true;
    }

    const auto& cuts = rule.cut_points;
    if (cuts.empty()) {
        rule.labels.push_back(sorted.empty() ? "(-inf, inf)" : "[" + detail::format_number(sorted.front()) + ", " +
                                                                  detail::format_number(sorted.back()) + "]");
    } else {
        rule.labels.push_back("(-inf, " + detail::format_number(cuts.front()) + "]");
        for (std::size_t k = 1; k < cuts.size(); ++k)
            rule.labels.push_back("(" + detail::format_number(cuts[k - 1]) + ", " + detail::format_number(cuts[k]) + "]");
        rule.labels.push_back("(" + detail::format_number(cuts.back()) + ", inf)");
    }
    if (missing) rule.missing = std::string(missing_label);
    return rule;
}

struct discretized {
    dataset data;
    std::vector<binning_rule> rules;
};

/// Replaces every numeric column with quantile-bin codes; categorical columns pass through.
/// A column with only missing values keeps just the missing code.
inline discretized discretize(const dataset& data, std::size_t bins = 4) {
    if (bins < 2) throw usage_error("discretize: bins must be at least 2");
    std::vector<feature_spec> specs;
    std::vector<std::vector<code_t>> columns;
    std::vector<binning_rule> rules;
    for (std::size_t m = 0; m < data.num_features(); ++m) {
        const auto& spec = data.feature(m);
        const auto raw = data.raw_values(m);
        if (!spec.numeric || raw.empty()) {
            specs.push_back(feature_spec{spec.name, spec.values, false});
            columns.emplace_back(data.column(m).begin(), data.column(m).end());
            continue;
        }
        auto rule = fit_quantile_bins(spec.name, raw, bins);
        const bool all_missing = std::all_of(raw.begin(), raw.end(), [](double v) { return std::isnan(v); });
        std::vector<code_t> codes(raw.size());
        for (std::size_t i = 0; i < raw.size(); ++i) codes[i] = rule.apply(raw[i]);
        feature_spec out{spec.name, {}, false};
        if (all_missing) {
            // no bins are populated; collapse to the missing code alone
            out.values = {std::string(missing_label)};
            std::fill(codes.begin(), codes.end(), code_t{0});
            rule.labels.clear();
        } else {
            out.values = rule.labels;
            if (rule.missing) out.values.push_back(*rule.missing);
        }
        specs.push_back(std::move(out));
        columns.push_back(std::move(codes));
        rules.push_back(std::move(rule));
    }
    std::vector<std::uint8_t> outcome(data.outcome().begin(), data.outcome().end());
    return {dataset(std::move(specs), std::move(columns), std::move(outcome)), std::move(rules)};
}

inline nlohmann::ordered_json to_json(const std::vector<binning_rule>& rules) {
    auto doc = nlohmann::ordered_json::object();
    for (const auto& r : rules) {
        doc[r.feature] = {{"cut_points", r.cut_points},
                          {"labels", r.labels},
                          {"missing_label", r.missing ? nlohmann::ordered_json(*r.missing) : nlohmann::ordered_json(nullptr)},
                          {"degenerate", r.degenerate}};
    }
    return doc;
}

inline std::vector<binning_rule> rules_from_json(const nlohmann::ordered_json& doc) {
    std::vector<binning_rule> rules;
    for (const auto& [name, body] : doc.items()) {
        binning_rule r;
        r.feature = name;
        r.cut_points = body.at("cut_points").get<std::vector<double>>();
        r.labels = body.at("labels").get<std::vector<std::string>>();
        if (!body.at("missing_label").is_null()) r.missing = body.at("missing_label").get<std::string>();
        r.degenerate = body.value("degenerate", false);
        if (!std::is_sorted(r.cut_points.begin(), r.cut_points.end()) ||
            std::adjacent_find(r.cut_points.begin(), r.cut_points.end()) != r.cut_points.end())
            throw data_error("binning rule " + name + ": cut points must be strictly increasing");
        rules.push_back(std::move(r));
    }
    return rules;
}

} // namespace safs
