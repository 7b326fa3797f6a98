#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string_view>
#include <vector>

#include "safs/error.hpp"
#include "safs/parallel.hpp"
#include "safs/tabular.hpp"

namespace safs {

/// Odds of the outcome in a stratum relative to the global odds.
/// Both means must be strictly inside (0, 1); see stratum_mean for zero cells.
inline double value_odds_ratio(double stratum_mean, double global_mean) {
    if (!(global_mean > 0.0 && global_mean < 1.0)) throw data_error("degenerate outcome: global mean must lie in (0, 1)");
    if (stratum_mean < 0.0 || stratum_mean > 1.0) throw usage_error("stratum mean must lie in [0, 1]");
    return (stratum_mean / (1.0 - stratum_mean)) / (global_mean / (1.0 - global_mean));
}

/// Stratum outcome mean, with Haldane-Anscombe +0.5/+0.5 smoothing when the
/// stratum is all 0 or all 1 so the odds stay finite and nonzero.
inline double stratum_mean(std::uint64_t positives, std::uint64_t size) {
    if (size == 0) throw usage_error("empty stratum");
    if (positives == 0 || positives == size)
        return (static_cast<double>(positives) + 0.5) / (static_cast<double>(size) + 1.0);
    return static_cast<double>(positives) / static_cast<double>(size);
}

struct odds_profile {
    std::size_t feature = 0;
    std::vector<double> ratios;
    std::vector<std::uint64_t> strata_sizes;
    std::vector<std::uint64_t> strata_positives;
    /// Raw (unsmoothed) outcome mean of each stratum.
    std::vector<double> strata_means;
};

inline odds_profile feature_odds_profile(const dataset& data, std::size_t m) {
    if (m >= data.num_features()) throw usage_error("feature index out of range");
    const double mu = nondegenerate_mean(data);
    const auto c = data.feature(m).cardinality();
    odds_profile p{m, std::vector<double>(c), std::vector<std::uint64_t>(c, 0), std::vector<std::uint64_t>(c, 0),
                   std::vector<double>(c)};
    const auto col = data.column(m);
    const auto y = data.outcome();
    for (std::size_t i = 0; i < col.size(); ++i) {
        ++p.strata_sizes[col[i]];
        p.strata_positives[col[i]] += y[i];
    }
    for (std::size_t u = 0; u < c; ++u) {
        p.strata_means[u] = static_cast<double>(p.strata_positives[u]) / static_cast<double>(p.strata_sizes[u]);
        p.ratios[u] = value_odds_ratio(stratum_mean(p.strata_positives[u], p.strata_sizes[u]), mu);
    }
    return p;
}

/// Hoyer sparsity (sqrt(C) - L1/L2) / (sqrt(C) - 1) of a non-negative vector.
/// 1 for a single nonzero entry, 0 for a constant vector; 0 when C = 1 or all zeros.
inline double hoyer_sparsity(std::span<const double> v) {
    const std::size_t c = v.size();
    if (c <= 1) return 0.0;
    double l1 = 0.0;
    double l2sq = 0.0;
    double peak = 0.0;
    for (double x : v) {
        if (!(x >= 0.0) || !std::isfinite(x)) throw usage_error("hoyer_sparsity: entries must be finite and non-negative");
        peak = std::max(peak, x);
    }
    if (peak == 0.0) return 0.0;
    // scale by the peak so huge or tiny magnitudes neither overflow nor underflow
    for (double x : v) {
        const double s = x / peak;
        l1 += s;
        l2sq += s * s;
    }
    const double root_c = std::sqrt(static_cast<double>(c));
    // sqrt(L1^2 / L2^2) is exact for the uniform and one-hot extremes
    const double eta = (root_c - std::sqrt(l1 * l1 / l2sq)) / (root_c - 1.0);
    return std::clamp(eta, 0.0, 1.0);
}

enum class ranking_method { safs, mutual_information };

inline std::string_view to_string(ranking_method m) { return m == ranking_method::safs ? "safs" : "mi"; }

/// Per-feature scores and the feature order they induce (descending, ties by index).
struct feature_ranking {
    ranking_method method = ranking_method::safs;
    std::vector<double> scores;
    std::vector<std::size_t> order;
};

inline std::vector<std::size_t> descending_order(const std::vector<double>& scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return order;
}

/// SAFS ranking: Hoyer sparsity of each feature's per-value odds-ratio profile.
inline feature_ranking rank_features(const dataset& data, unsigned workers = 1) {
    nondegenerate_mean(data);
    feature_ranking r{ranking_method::safs, std::vector<double>(data.num_features()), {}};
    parallel_for(data.num_features(), workers, [&](std::size_t m) {
        r.scores[m] = hoyer_sparsity(feature_odds_profile(data, m).ratios);
    });
    r.order = descending_order(r.scores);
    return r;
}

/// Plug-in mutual information (nats) between one feature and the outcome.
inline double mutual_information(const dataset& data, std::size_t m) {
    const auto c = data.feature(m).cardinality();
    std::vector<std::uint64_t> joint(2 * c, 0);
    const auto col = data.column(m);
    const auto y = data.outcome();
    for (std::size_t i = 0; i < col.size(); ++i) ++joint[2 * col[i] + y[i]];
    const double n = static_cast<double>(data.rows());
    const double py1 = static_cast<double>(data.outcome_sum()) / n;
    const double py[2] = {1.0 - py1, py1};
    double mi = 0.0;
    for (std::size_t u = 0; u < c; ++u) {
        const double pu = static_cast<double>(joint[2 * u] + joint[2 * u + 1]) / n;
        for (int k = 0; k < 2; ++k) {
            if (joint[2 * u + k] == 0) continue;
            const double pj = static_cast<double>(joint[2 * u + k]) / n;
            mi += pj * std::log(pj / (pu * py[k]));
        }
    }
    return std::max(mi, 0.0);
}

/// Mutual-information filter baseline, same ordering rules as rank_features.
inline feature_ranking mutual_info_rank(const dataset& data, unsigned workers = 1) {
    nondegenerate_mean(data);
    feature_ranking r{ranking_method::mutual_information, std::vector<double>(data.num_features()), {}};
    parallel_for(data.num_features(), workers, [&](std::size_t m) { r.scores[m] = mutual_information(data, m); });
    r.order = descending_order(r.scores);
    return r;
}

inline feature_ranking rank(const dataset& data, ranking_method method, unsigned workers = 1) {
    return method == ranking_method::safs ? rank_features(data, workers) : mutual_info_rank(data, workers);
}

inline std::vector<std::size_t> select_top_k(const feature_ranking& ranking, std::size_t k) {
    if (k < 1 || k > ranking.order.size()) throw usage_error("K must lie in [1, M]");
    return {ranking.order.begin(), ranking.order.begin() + static_cast<std::ptrdiff_t>(k)};
}

/// The sweep grid round(l * M / 10) for l = 1..10, rounding half to even,
/// with zeros and repeats removed. For M = 41 this is 4, 8, 12, ..., 37, 41.
inline std::vector<std::size_t> top_k_grid(std::size_t m) {
    std::vector<std::size_t> grid;
    for (std::size_t l = 1; l <= 10; ++l) {
        const auto k = static_cast<std::size_t>(std::nearbyint(static_cast<double>(l * m) / 10.0));
        if (k >= 1 && (grid.empty() || k > grid.back())) grid.push_back(k);
    }
    return grid;
}

} // namespace safs
