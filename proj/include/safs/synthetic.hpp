#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "safs/description.hpp"
#include "safs/error.hpp"
#include "safs/rng.hpp"
#include "safs/tabular.hpp"

namespace safs {

/// Parameters of a table with one planted over- (or under-) observed subgroup.
struct synthetic_config {
    std::size_t rows = 0;
    std::vector<std::size_t> cardinalities; // one entry per feature
    double base_rate = 0.25;
    subgroup_description planted;
    double q_true = 1.0;
    std::uint64_t seed = 0;
};

/// Outcome probability inside the planted subgroup: odds multiplied by q.
inline double planted_probability(double base_rate, double q) {
    const double odds = q * base_rate / (1.0 - base_rate);
    return odds / (1.0 + odds);
}

inline void validate(const synthetic_config& config) {
    if (config.rows == 0) throw usage_error("synthesize: rows must be positive");
    if (config.cardinalities.empty()) throw usage_error("synthesize: at least one feature is required");
    for (auto c : config.cardinalities)
        if (c == 0) throw usage_error("synthesize: every cardinality must be at least 1");
    if (!(config.base_rate > 0.0 && config.base_rate < 1.0))
        throw usage_error("synthesize: base rate must lie in (0, 1)");
    if (!(config.q_true > 0.0) || !std::isfinite(config.q_true))
        throw usage_error("synthesize: planted multiplier must be positive and finite");
    const double p = planted_probability(config.base_rate, config.q_true);
    if (!(p > 0.0 && p < 1.0)) throw usage_error("synthesize: infeasible planted probability");
    for (const auto& [feature, values] : config.planted.clauses()) {
        if (feature >= config.cardinalities.size()) throw usage_error("synthesize: planted clause on undeclared feature");
        if (values.back() >= config.cardinalities[feature])
            throw usage_error("synthesize: planted clause on undeclared value");
    }
}

inline std::string synthetic_feature_name(std::size_t m) { return "f" + std::to_string(m); }
inline std::string synthetic_value_label(std::size_t u) { return "v" + std::to_string(u); }

/// Draws every cell uniformly and independently, then each outcome as Bernoulli
/// with the base rate outside the planted subgroup and the q-shifted rate inside.
/// Fully determined by config.seed.
inline dataset synthesize(const synthetic_config& config) {
    validate(config);
    const std::size_t n = config.rows;
    const std::size_t m_count = config.cardinalities.size();
    rng cells(derive_seed(config.seed, 0));
    rng outcomes(derive_seed(config.seed, 1));

    std::vector<feature_spec> specs(m_count);
    std::vector<std::vector<code_t>> columns(m_count, std::vector<code_t>(n));
    for (std::size_t m = 0; m < m_count; ++m) {
        specs[m].name = synthetic_feature_name(m);
        for (std::size_t u = 0; u < config.cardinalities[m]; ++u) specs[m].values.push_back(synthetic_value_label(u));
        for (std::size_t i = 0; i < n; ++i) columns[m][i] = static_cast<code_t>(cells.below(config.cardinalities[m]));
    }

    const double p_in = planted_probability(config.base_rate, config.q_true);
    std::vector<std::uint8_t> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        bool inside = true;
        for (const auto& [feature, values] : config.planted.clauses()) {
            if (!std::binary_search(values.begin(), values.end(), columns[feature][i])) {
                inside = false;
                break;
            }
        }
        y[i] = outcomes.bernoulli(inside ? p_in : config.base_rate) ? 1 : 0;
    }
    for (std::size_t m = 0; m < m_count; ++m) {
        std::vector<bool> seen(config.cardinalities[m], false);
        for (auto c : columns[m]) seen[c] = true;
        for (std::size_t u = 0; u < seen.size(); ++u)
            if (!seen[u])
                throw data_error("synthesize: value " + synthetic_value_label(u) + " of " + specs[m].name +
                                 " was never drawn; increase rows");
    }
    return dataset(std::move(specs), std::move(columns), std::move(y));
}

} // namespace safs
