#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "safs/description.hpp"
#include "safs/error.hpp"
#include "safs/parallel.hpp"
#include "safs/rng.hpp"
#include "safs/tabular.hpp"

namespace safs {

/// Which departure from the global rate is anomalous: more positives (q > 1) or fewer (q < 1).
enum class direction { over, under };

inline std::string_view to_string(direction d) { return d == direction::over ? "over" : "under"; }

/// Maximizer of log(q) Y - N log(1 - mu + q mu):  q = Y (1 - mu) / (mu (N - Y)).
/// Infinite when Y = N.
inline double q_mle(std::uint64_t y, std::uint64_t n, double mu) {
    if (n == 0) throw usage_error("q_mle: subset is empty");
    if (y > n) throw usage_error("q_mle: outcome sum exceeds subset size");
    if (!(mu > 0.0 && mu < 1.0)) throw data_error("degenerate outcome: global mean must lie in (0, 1)");
    if (y == n) return std::numeric_limits<double>::infinity();
    return static_cast<double>(y) * (1.0 - mu) / (mu * static_cast<double>(n - y));
}

/// The likelihood-ratio objective being maximized over q.
inline double scan_objective(double q, double y, double n, double mu) {
    return std::log(q) * y - n * std::log1p(mu * (q - 1.0));
}

/// Bernoulli scan statistic: the objective at the MLE of q, with q clamped to
/// [1, inf) for `over` and (0, 1] for `under`. Never negative.
inline double bernoulli_score(std::uint64_t y, std::uint64_t n, double mu, direction dir) {
    double q = q_mle(y, n, mu);
    q = dir == direction::over ? std::max(q, 1.0) : std::min(q, 1.0);
    if (q == 1.0) return 0.0;
    const double yd = static_cast<double>(y);
    const double nd = static_cast<double>(n);
    double score;
    if (std::isinf(q)) score = -nd * std::log(mu);            // Y = N limit
    else if (q == 0.0) score = -nd * std::log1p(-mu);         // Y = 0 limit
    else score = scan_objective(q, yd, nd, mu);
    return std::max(score, 0.0);
}

/// Outcome sum and size of one cell of a contingency split.
struct value_count {
    std::uint64_t y = 0;
    std::uint64_t n = 0;
};

struct prefix_choice {
    std::vector<code_t> values; // sorted; empty cells never included
    bool all_nonempty = false;  // the chosen prefix covers every non-empty value
    double score = 0.0;
    std::uint64_t y = 0;
    std::uint64_t n = 0;
};

/// Exact maximizer of the score over unions of values. Values are ordered by
/// observed rate Y_u / N_u (descending for `over`, ascending for `under`) and
/// every prefix of that order is scored; the best prefix is optimal among all
/// subsets. Ties go to the longer prefix.
inline prefix_choice best_value_prefix(std::span<const value_count> counts, double mu, direction dir) {
    std::vector<code_t> order;
    for (std::size_t u = 0; u < counts.size(); ++u)
        if (counts[u].n > 0) order.push_back(static_cast<code_t>(u));
    if (order.empty()) throw usage_error("optimize_value_subset: every value is empty under the current restriction");
    std::stable_sort(order.begin(), order.end(), [&](code_t a, code_t b) {
        // compare Y_a/N_a with Y_b/N_b exactly in integers
        const auto lhs = static_cast<unsigned __int128>(counts[a].y) * counts[b].n;
        const auto rhs = static_cast<unsigned __int128>(counts[b].y) * counts[a].n;
        return dir == direction::over ? lhs > rhs : lhs < rhs;
    });

    prefix_choice best;
    best.score = -1.0;
    std::size_t best_len = 0;
    std::uint64_t y = 0, n = 0;
    for (std::size_t j = 0; j < order.size(); ++j) {
        y += counts[order[j]].y;
        n += counts[order[j]].n;
        const double s = bernoulli_score(y, n, mu, dir);
        if (s >= best.score) {
            best.score = s;
            best.y = y;
            best.n = n;
            best_len = j + 1;
        }
    }
    best.values.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(best_len));
    std::sort(best.values.begin(), best.values.end());
    best.all_nonempty = best_len == order.size();
    return best;
}

/// Result of a scan: the best subgroup found and how it was found.
struct scan_result {
    subgroup_description description;
    double score = 0.0;
    double q = 1.0; // direction-clamped MLE multiplier
    std::uint64_t n = 0;
    std::uint64_t y_sum = 0;
    std::vector<std::size_t> members;
    std::size_t restarts = 0;
    std::vector<std::size_t> iterations; // sweeps used by each restart
    std::uint64_t seed = 0;
    direction dir = direction::over;
};

namespace detail {

inline double clamped_q(std::uint64_t y, std::uint64_t n, double mu, direction dir) {
    if (n == 0) return 1.0;
    const double q = q_mle(y, n, mu);
    return dir == direction::over ? std::max(q, 1.0) : std::min(q, 1.0);
}

inline double score_or_zero(std::uint64_t y, std::uint64_t n, double mu, direction dir) {
    return n == 0 ? 0.0 : bernoulli_score(y, n, mu, dir);
}

/// Fills the summary fields of `r` from its description. A zero-score result
/// is reported as the unconstrained description: nothing anomalous was found.
inline void finalize(scan_result& r, const dataset& data, double mu, std::vector<std::size_t> members) {
    r.members = std::move(members);
    r.n = r.members.size();
    r.y_sum = 0;
    for (auto i : r.members) r.y_sum += data.outcome()[i];
    r.score = score_or_zero(r.y_sum, r.n, mu, r.dir);
    if (r.score == 0.0 && !r.description.empty()) {
        r.description = subgroup_description{};
        std::vector<std::size_t> all(data.rows());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        finalize(r, data, mu, std::move(all));
        return;
    }
    r.q = clamped_q(r.y_sum, r.n, mu, r.dir);
}

inline void finalize(scan_result& r, const dataset& data, double mu) {
    finalize(r, data, mu, r.description.members(data));
}

/// Strict "a is preferred over b": higher score, then fewer members, then
/// lexicographically smaller description.
inline bool preferred(const scan_result& a, const scan_result& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.n != b.n) return a.n < b.n;
    return a.description < b.description;
}

inline void check_features(const dataset& data, std::span<const std::size_t> features) {
    if (features.empty()) throw usage_error("scan: at least one feature is required (K = 0)");
    std::vector<bool> seen(data.num_features(), false);
    for (auto f : features) {
        if (f >= data.num_features()) throw usage_error("scan: feature index out of range");
        if (seen[f]) throw usage_error("scan: duplicate feature in scan set");
        seen[f] = true;
    }
}

/// Per-row count of violated clauses, kept in sync as clauses change.
class match_state {
public:
    match_state(const dataset& data, const subgroup_description& start)
        : data_(data), allowed_(data.num_features()), misses_(data.rows(), 0) {
        for (const auto& [f, values] : start.clauses()) set(f, &values);
    }

    bool constrained(std::size_t f) const { return !allowed_[f].empty(); }

    bool fails(std::size_t f, std::size_t row) const {
        return constrained(f) && !allowed_[f][data_.column(f)[row]];
    }

    /// Per-value counts over rows that satisfy every clause except the one on f.
    std::vector<value_count> counts_without(std::size_t f) const {
        std::vector<value_count> counts(data_.feature(f).cardinality());
        const auto col = data_.column(f);
        const auto y = data_.outcome();
        std::vector<std::uint32_t> fail(counts.size(), 0);
        if (constrained(f))
            for (std::size_t u = 0; u < fail.size(); ++u) fail[u] = !allowed_[f][u];
        for (std::size_t i = 0; i < misses_.size(); ++i) {
            const code_t c = col[i];
            const std::uint64_t hit = misses_[i] == fail[c];
            counts[c].n += hit;
            counts[c].y += hit & y[i];
        }
        return counts;
    }

    /// Outcome sum and size of the rows satisfying every clause.
    value_count totals() const {
        value_count t;
        const auto y = data_.outcome();
        for (std::size_t i = 0; i < misses_.size(); ++i) {
            const std::uint64_t hit = misses_[i] == 0;
            t.n += hit;
            t.y += hit & y[i];
        }
        return t;
    }

    std::vector<std::size_t> members() const {
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < misses_.size(); ++i)
            if (misses_[i] == 0) rows.push_back(i);
        return rows;
    }

    /// Replaces the clause on f; nullptr removes it.
    void set(std::size_t f, const std::vector<code_t>* values) {
        std::vector<char> next;
        if (values) {
            next.assign(data_.feature(f).cardinality(), 0);
            for (auto v : *values) next[v] = 1;
        }
        const auto col = data_.column(f);
        const auto& prev = allowed_[f];
        if (prev == next) return;
        std::vector<std::uint32_t> delta(data_.feature(f).cardinality());
        for (std::size_t u = 0; u < delta.size(); ++u) {
            const int was = !prev.empty() && !prev[u];
            const int now = !next.empty() && !next[u];
            delta[u] = static_cast<std::uint32_t>(now - was); // wraps for -1
        }
        for (std::size_t i = 0; i < misses_.size(); ++i) misses_[i] += delta[col[i]];
        allowed_[f] = std::move(next);
    }

private:
    const dataset& data_;
    std::vector<std::vector<char>> allowed_;
    std::vector<std::uint32_t> misses_;
};

} // namespace detail

/// Best value set for feature z given the other clauses of `current`.
/// Returns every value of z when the unconstrained choice is (tied-)optimal.
inline std::vector<code_t> optimize_value_subset(const dataset& data, const subgroup_description& current,
                                                 std::size_t z, double mu, direction dir) {
    if (z >= data.num_features()) throw usage_error("optimize_value_subset: feature index out of range");
    detail::match_state state(data, current);
    const auto counts = state.counts_without(z);
    auto choice = best_value_prefix(counts, mu, dir);
    if (choice.all_nonempty) {
        std::vector<code_t> all(data.feature(z).cardinality());
        for (std::size_t u = 0; u < all.size(); ++u) all[u] = static_cast<code_t>(u);
        return all;
    }
    return choice.values;
}

struct ascent_outcome {
    scan_result result;
    /// Score after every single-feature step, in order.
    std::vector<double> step_scores;
    std::size_t sweeps = 0;
    bool converged = false;
};

/// Coordinate ascent over the scan features. Each sweep visits the features in
/// a fresh seeded random order and replaces each clause with its conditional
/// optimum. Stops after a sweep that leaves the score unchanged.
inline ascent_outcome coordinate_ascent(const dataset& data, std::span<const std::size_t> features,
                                        const subgroup_description& initial, double mu, direction dir,
                                        std::uint64_t order_seed, std::size_t max_sweeps = 1000) {
    detail::check_features(data, features);
    for (const auto& [f, values] : initial.clauses()) {
        if (std::find(features.begin(), features.end(), f) == features.end())
            throw usage_error("coordinate_ascent: initial description constrains a feature outside the scan set");
        if (values.empty() || values.back() >= data.feature(f).cardinality())
            throw usage_error("coordinate_ascent: initial description references an unknown value");
    }
    if (!(mu > 0.0 && mu < 1.0)) throw data_error("degenerate outcome: global mean must lie in (0, 1)");

    ascent_outcome out;
    subgroup_description desc = initial;
    desc.canonicalize(data);
    detail::match_state state(data, desc);
    rng order_rng(order_seed);
    std::vector<std::size_t> order(features.begin(), features.end());

    const auto start = state.totals();
    double score = detail::score_or_zero(start.y, start.n, mu, dir);

    // a step is skipped when no clause changed since z was last optimized
    std::uint64_t version = 1;
    std::vector<std::uint64_t> seen(data.num_features(), 0);
    auto apply = [&](std::size_t z, const std::vector<code_t>* values) {
        const auto before = desc.clauses().find(z);
        const bool changed = values ? before == desc.clauses().end() || before->second != *values
                                    : before != desc.clauses().end();
        if (!changed) return;
        if (values) {
            desc.set_clause(z, *values, &data);
            if (desc.constrains(z)) state.set(z, &desc.clauses().at(z));
            else state.set(z, nullptr);
        } else {
            desc.clear_clause(z);
            state.set(z, nullptr);
        }
        ++version;
    };

    while (out.sweeps < max_sweeps) {
        ++out.sweeps;
        const double sweep_start = score;
        order_rng.shuffle(order.begin(), order.end());
        for (auto z : order) {
            if (seen[z] == version) {
                out.step_scores.push_back(score);
                continue;
            }
            const auto counts = state.counts_without(z);
            const bool empty = std::all_of(counts.begin(), counts.end(), [](const value_count& c) { return c.n == 0; });
            if (empty) {
                // nothing matches the other clauses; release z to widen the search
                apply(z, nullptr);
                score = 0.0;
            } else {
                const auto choice = best_value_prefix(counts, mu, dir);
                apply(z, choice.all_nonempty ? nullptr : &choice.values);
                score = choice.score;
            }
            seen[z] = version;
            out.step_scores.push_back(score);
        }
        if (score == sweep_start) {
            out.converged = true;
            break;
        }
    }

    out.result.description = std::move(desc);
    out.result.dir = dir;
    out.result.restarts = 1;
    out.result.iterations = {out.sweeps};
    out.result.seed = order_seed;
    detail::finalize(out.result, data, mu, state.members());
    return out;
}

struct scan_settings {
    std::size_t restarts = 50;
    direction dir = direction::over;
    std::uint64_t seed = 0;
    unsigned workers = 1;
};

/// Starting point of restart r: each scan feature is left unconstrained with
/// probability 1/2, otherwise given a uniformly random non-empty value subset.
struct restart_start {
    subgroup_description description;
    std::uint64_t order_seed = 0;
};

inline restart_start make_restart_start(const dataset& data, std::span<const std::size_t> features,
                                        std::uint64_t seed, std::size_t restart) {
    rng init(derive_seed(seed, 2 * static_cast<std::uint64_t>(restart)));
    restart_start start;
    for (auto f : features) {
        if (init.coin()) continue;
        const auto c = data.feature(f).cardinality();
        std::vector<code_t> values;
        while (values.empty()) {
            for (std::size_t u = 0; u < c; ++u)
                if (init.coin()) values.push_back(static_cast<code_t>(u));
        }
        start.description.set_clause(f, std::move(values), &data);
    }
    start.order_seed = derive_seed(seed, 2 * static_cast<std::uint64_t>(restart) + 1);
    return start;
}

/// Multi-start coordinate ascent. Restart r depends only on (seed, r), so the
/// result does not depend on the number of workers.
inline scan_result scan_with_restarts(const dataset& data, std::span<const std::size_t> features,
                                      const scan_settings& settings) {
    detail::check_features(data, features);
    if (settings.restarts < 1) throw usage_error("scan: restarts must be at least 1");
    const double mu = nondegenerate_mean(data);

    std::vector<scan_result> results(settings.restarts);
    parallel_for(settings.restarts, settings.workers, [&](std::size_t r) {
        auto start = make_restart_start(data, features, settings.seed, r);
        results[r] = coordinate_ascent(data, features, start.description, mu, settings.dir, start.order_seed).result;
    });

    std::size_t best = 0;
    for (std::size_t r = 1; r < results.size(); ++r)
        if (detail::preferred(results[r], results[best])) best = r;

    std::vector<std::size_t> iterations;
    for (const auto& r : results) iterations.push_back(r.iterations.front());
    scan_result out = std::move(results[best]);
    out.restarts = settings.restarts;
    out.iterations = std::move(iterations);
    out.seed = settings.seed;
    return out;
}

inline constexpr double brute_force_limit = 1e7;

/// Number of canonical descriptions over `features`: prod (2^C - 1).
inline double description_space_size(const dataset& data, std::span<const std::size_t> features) {
    double total = 1.0;
    for (auto f : features) total *= std::ldexp(1.0, static_cast<int>(std::min<std::size_t>(data.feature(f).cardinality(), 1000))) - 1.0;
    return total;
}

/// Exhaustive search over every canonical description of `features`.
/// Refuses (guard_error) when the space exceeds 10^7 descriptions.
inline scan_result brute_force_scan(const dataset& data, std::span<const std::size_t> features, direction dir) {
    detail::check_features(data, features);
    const double mu = nondegenerate_mean(data);
    if (description_space_size(data, features) > brute_force_limit)
        throw guard_error("brute_force_scan: search space exceeds 1e7 descriptions");

    const std::size_t k = features.size();
    // collapse rows into distinct value tuples
    std::map<std::vector<code_t>, value_count> cell_map;
    std::vector<code_t> key(k);
    for (std::size_t i = 0; i < data.rows(); ++i) {
        for (std::size_t j = 0; j < k; ++j) key[j] = data.column(features[j])[i];
        auto& cell = cell_map[key];
        ++cell.n;
        cell.y += data.outcome()[i];
    }
    std::vector<std::vector<code_t>> cell_keys;
    std::vector<value_count> cell_counts;
    for (auto& [kk, c] : cell_map) {
        cell_keys.push_back(kk);
        cell_counts.push_back(c);
    }

    std::vector<std::uint64_t> full(k), mask(k, 1);
    for (std::size_t j = 0; j < k; ++j) full[j] = (std::uint64_t{1} << data.feature(features[j]).cardinality()) - 1;

    auto describe = [&] {
        subgroup_description d;
        for (std::size_t j = 0; j < k; ++j) {
            if (mask[j] == full[j]) continue;
            std::vector<code_t> values;
            for (std::size_t u = 0; u < 64; ++u)
                if (mask[j] >> u & 1) values.push_back(static_cast<code_t>(u));
            d.set_clause(features[j], std::move(values), &data);
        }
        return d;
    };

    scan_result best;
    best.dir = dir;
    bool have = false;
    while (true) {
        std::uint64_t y = 0, n = 0;
        for (std::size_t c = 0; c < cell_keys.size(); ++c) {
            bool in = true;
            for (std::size_t j = 0; j < k && in; ++j) in = (mask[j] >> cell_keys[c][j]) & 1;
            if (in) {
                y += cell_counts[c].y;
                n += cell_counts[c].n;
            }
        }
        const double s = detail::score_or_zero(y, n, mu, dir);
        if (!have || s > best.score || (s == best.score && s > 0.0 && (n < best.n || (n == best.n && describe() < best.description)))) {
            best.score = s;
            best.n = n;
            best.y_sum = y;
            best.description = describe();
            have = true;
        }
        std::size_t j = 0;
        while (j < k && mask[j] == full[j]) mask[j++] = 1;
        if (j == k) break;
        ++mask[j];
    }
    best.restarts = 0;
    best.seed = 0;
    detail::finalize(best, data, mu);
    return best;
}

} // namespace safs
