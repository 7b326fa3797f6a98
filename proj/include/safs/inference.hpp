#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "safs/error.hpp"
#include "safs/parallel.hpp"
#include "safs/rng.hpp"
#include "safs/scan.hpp"
#include "safs/selection.hpp"

namespace safs {

struct significance_result {
    double actual = 0.0;
    std::vector<double> null_scores; // trial order
    std::size_t xi = 0;               // null scores >= actual
    double p = 1.0;                   // (xi + 1) / (sigma + 1)
    scan_result actual_scan;
    std::vector<std::size_t> actual_features;
    std::vector<std::vector<std::size_t>> trial_features;

    std::size_t sigma() const { return null_scores.size(); }
};

inline std::size_t count_at_least(std::span<const double> scores, double actual) {
    std::size_t xi = 0;
    for (double s : scores)
        if (s >= actual) ++xi;
    return xi;
}

inline double empirical_p_value(std::size_t xi, std::size_t sigma) {
    return static_cast<double>(xi + 1) / static_cast<double>(sigma + 1);
}

/// K features drawn uniformly without replacement for trial t, sorted ascending.
inline std::vector<std::size_t> random_feature_draw(std::size_t m, std::size_t k, std::uint64_t seed, std::size_t trial) {
    rng r(derive_seed(seed, 0x7e57'0000'0000ULL + trial));
    std::vector<std::size_t> pool(m);
    for (std::size_t i = 0; i < m; ++i) pool[i] = i;
    for (std::size_t i = 0; i < k; ++i) std::swap(pool[i], pool[i + r.below(m - i)]);
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    return pool;
}

/// Randomization test: scans the top-K features of `method`, then scans sigma
/// random K-feature subsets with the same settings and seed. Trial t uses only
/// (seed, t), so scores do not depend on scheduling.
inline significance_result randomization_test(const dataset& data, ranking_method method, std::size_t k,
                                              const scan_settings& settings, std::size_t sigma) {
    if (sigma < 1) throw usage_error("randomization test: sigma must be at least 1");
    if (k < 1 || k > data.num_features()) throw usage_error("K must lie in [1, M]");
    significance_result out;
    out.actual_features = select_top_k(rank(data, method, settings.workers), k);
    out.actual_scan = scan_with_restarts(data, out.actual_features, settings);
    out.actual = out.actual_scan.score;

    out.null_scores.resize(sigma);
    out.trial_features.resize(sigma);
    auto inner = settings;
    inner.workers = 1;
    parallel_for(sigma, settings.workers, [&](std::size_t t) {
        out.trial_features[t] = random_feature_draw(data.num_features(), k, settings.seed, t);
        out.null_scores[t] = scan_with_restarts(data, out.trial_features[t], inner).score;
    });
    out.xi = count_at_least(out.null_scores, out.actual);
    out.p = empirical_p_value(out.xi, sigma);
    return out;
}

/// Size, odds ratio against the complement and Woolf 95% interval of a subgroup.
struct odds_ratio_report {
    std::uint64_t n = 0;
    double odds_ratio = 1.0;
    double ci_low = 1.0;
    double ci_high = 1.0;
    std::optional<double> p;
    bool smoothed = false;
};

/// 2x2 table a = subgroup positives, b = subgroup negatives, c = complement
/// positives, d = complement negatives. Adds 0.5 to every cell if any is zero.
inline odds_ratio_report odds_ratio_from_table(double a, double b, double c, double d, double z = 1.96) {
    odds_ratio_report r;
    if (a == 0 || b == 0 || c == 0 || d == 0) {
        a += 0.5;
        b += 0.5;
        c += 0.5;
        d += 0.5;
        r.smoothed = true;
    }
    r.odds_ratio = (a * d) / (b * c);
    const double se = std::sqrt(1.0 / a + 1.0 / b + 1.0 / c + 1.0 / d);
    const double log_or = std::log(r.odds_ratio);
    r.ci_low = std::exp(log_or - z * se);
    r.ci_high = std::exp(log_or + z * se);
    return r;
}

inline odds_ratio_report subgroup_odds_ratio(const dataset& data, const subgroup_description& description) {
    std::uint64_t n_s = 0, y_s = 0;
    for (std::size_t i = 0; i < data.rows(); ++i) {
        if (description.matches(data, i)) {
            ++n_s;
            y_s += data.outcome()[i];
        }
    }
    if (n_s == 0) throw data_error("odds ratio: subgroup is empty");
    if (n_s == data.rows()) throw data_error("odds ratio: subgroup complement is empty");
    const auto total = data.outcome_sum();
    const auto a = static_cast<double>(y_s);
    const auto b = static_cast<double>(n_s - y_s);
    const auto c = static_cast<double>(total - y_s);
    const auto d = static_cast<double>((data.rows() - n_s) - (total - y_s));
    auto r = odds_ratio_from_table(a, b, c, d);
    r.n = n_s;
    return r;
}

namespace detail {
inline std::string fixed2(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}
} // namespace detail

/// One report row: "2811, 3.00 (2.75, 3.26), <0.01". p is "-" when untested.
inline std::string format_table_row(const odds_ratio_report& r) {
    std::string p = "-";
    if (r.p) p = *r.p < 0.01 ? "<0.01" : detail::fixed2(*r.p);
    return std::to_string(r.n) + ", " + detail::fixed2(r.odds_ratio) + " (" + detail::fixed2(r.ci_low) + ", " +
           detail::fixed2(r.ci_high) + "), " + p;
}

} // namespace safs
