#pragma once

#include <algorithm>
#include <chrono>
#include <vector>

#include "safs/scan.hpp"
#include "safs/selection.hpp"

namespace safs {

struct bench_row {
    std::size_t k = 0;
    double score = 0.0;
    std::uint64_t n = 0;
    double seconds_median = 0.0;
    std::vector<double> seconds; // every repetition
    scan_result scan;
};

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const auto mid = v.size() / 2;
    return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

/// Wall-clock of scan_with_restarts over the top-K features for each K in the
/// grid, repeated `repetitions` times. Only the timing varies between runs.
inline std::vector<bench_row> bench_top_k(const dataset& data, const feature_ranking& ranking,
                                          const std::vector<std::size_t>& grid, const scan_settings& settings,
                                          std::size_t repetitions = 3) {
    if (repetitions < 1) throw usage_error("bench: repetitions must be at least 1");
    std::vector<bench_row> rows;
    for (auto k : grid) {
        const auto features = select_top_k(ranking, k);
        bench_row row;
        row.k = k;
        for (std::size_t rep = 0; rep < repetitions; ++rep) {
            const auto start = std::chrono::steady_clock::now();
            row.scan = scan_with_restarts(data, features, settings);
            const auto stop = std::chrono::steady_clock::now();
            row.seconds.push_back(std::chrono::duration<double>(stop - start).count());
        }
        row.score = row.scan.score;
        row.n = row.scan.n;
        row.seconds_median = median(row.seconds);
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace safs
