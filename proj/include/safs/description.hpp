#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "safs/error.hpp"
#include "safs/tabular.hpp"

namespace safs {

/// AND over features of OR over each feature's selected values.
/// Canonical form: value lists are sorted and unique, and a feature whose
/// every value is selected is absent (it does not constrain anything).
class subgroup_description {
public:
    using clause_map = std::map<std::size_t, std::vector<code_t>>;

    subgroup_description() = default;

    /// Builds and canonicalizes; validates against `data` when given.
    explicit subgroup_description(clause_map clauses, const dataset* data = nullptr) {
        for (auto& [feature, values] : clauses) set_clause(feature, std::move(values), data);
    }
    subgroup_description(std::initializer_list<clause_map::value_type> clauses, const dataset* data = nullptr)
        : subgroup_description(clause_map(clauses), data) {}

    const clause_map& clauses() const { return clauses_; }
    bool empty() const { return clauses_.empty(); }
    bool constrains(std::size_t feature) const { return clauses_.count(feature) != 0; }

    /// Replaces the clause on `feature`. An empty value list is rejected.
    void set_clause(std::size_t feature, std::vector<code_t> values, const dataset* data = nullptr) {
        std::sort(values.begin(), values.end());
        values.erase(std::unique(values.begin(), values.end()), values.end());
        if (values.empty()) throw usage_error("subgroup clause must select at least one value");
        if (data) {
            if (feature >= data->num_features()) throw usage_error("subgroup clause references unknown feature");
            if (values.back() >= data->feature(feature).cardinality())
                throw usage_error("subgroup clause references unknown value of " + data->feature(feature).name);
            if (values.size() == data->feature(feature).cardinality()) {
                clauses_.erase(feature);
                return;
            }
        }
        clauses_[feature] = std::move(values);
    }

    void clear_clause(std::size_t feature) { clauses_.erase(feature); }

    /// Drops clauses that select every value of their feature.
    void canonicalize(const dataset& data) {
        for (auto it = clauses_.begin(); it != clauses_.end();) {
            if (it->second.size() >= data.feature(it->first).cardinality()) it = clauses_.erase(it);
            else ++it;
        }
    }

    bool matches(const dataset& data, std::size_t row) const {
        for (const auto& [feature, values] : clauses_) {
            const code_t c = data.column(feature)[row];
            if (!std::binary_search(values.begin(), values.end(), c)) return false;
        }
        return true;
    }

    std::vector<std::size_t> members(const dataset& data) const {
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < data.rows(); ++i)
            if (matches(data, i)) rows.push_back(i);
        return rows;
    }

    /// Human-readable form, e.g. "age in {(60, inf)} AND service in {MED, SURG}".
    std::string to_string(const dataset& data) const {
        if (clauses_.empty()) return "(all rows)";
        std::string out;
        for (const auto& [feature, values] : clauses_) {
            if (!out.empty()) out += " AND ";
            out += data.feature(feature).name + " in {";
            for (std::size_t h = 0; h < values.size(); ++h) {
                if (h) out += ", ";
                out += data.feature(feature).values[values[h]];
            }
            out += "}";
        }
        return out;
    }

    friend bool operator==(const subgroup_description&, const subgroup_description&) = default;
    friend auto operator<=>(const subgroup_description& a, const subgroup_description& b) {
        return a.clauses_ <=> b.clauses_;
    }

private:
    clause_map clauses_;
};

} // namespace safs
