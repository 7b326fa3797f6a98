#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <unordered_map>
#include <utility>
#include <vector>

#include "safs/csv.hpp"
#include "safs/error.hpp"

namespace safs {

using code_t = std::uint32_t;

inline constexpr std::string_view missing_label = "__missing__";

/// One discretized feature: its name and the ordered labels behind codes 0..C-1.
struct feature_spec {
    std::string name;
    std::vector<std::string> values;
    /// Set by load_csv for columns that parsed as numbers; discretize() consumes it.
    bool numeric = false;

    std::size_t cardinality() const { return values.size(); }

    std::optional<code_t> code_of(std::string_view label) const {
        for (std::size_t u = 0; u < values.size(); ++u)
            if (values[u] == label) return static_cast<code_t>(u);
        return std::nullopt;
    }
};

/// Immutable N x M table of categorical codes with a binary outcome.
/// Storage is column-major since every pass works one feature at a time.
class dataset {
public:
    dataset(std::vector<feature_spec> features, std::vector<std::vector<code_t>> columns,
            std::vector<std::uint8_t> outcome, std::vector<std::vector<double>> raw = {})
        : features_(std::move(features)), columns_(std::move(columns)), outcome_(std::move(outcome)),
          raw_(std::move(raw)) {
        validate();
    }

    std::size_t rows() const { return outcome_.size(); }
    std::size_t num_features() const { return features_.size(); }

    const feature_spec& feature(std::size_t m) const { return features_.at(m); }
    const std::vector<feature_spec>& features() const { return features_; }
    std::span<const code_t> column(std::size_t m) const { return columns_.at(m); }
    std::span<const std::uint8_t> outcome() const { return outcome_; }

    /// Source values of a numeric column (NaN = missing); empty for categorical columns.
    std::span<const double> raw_values(std::size_t m) const {
        if (raw_.empty()) return {};
        return raw_.at(m);
    }

    std::uint64_t outcome_sum() const { return outcome_sum_; }
    double global_mean() const { return static_cast<double>(outcome_sum_) / static_cast<double>(rows()); }

    std::optional<std::size_t> find_feature(std::string_view name) const {
        for (std::size_t m = 0; m < features_.size(); ++m)
            if (features_[m].name == name) return m;
        return std::nullopt;
    }

    bool operator==(const dataset& other) const {
        if (columns_ != other.columns_ || outcome_ != other.outcome_) return false;
        if (features_.size() != other.features_.size()) return false;
        for (std::size_t m = 0; m < features_.size(); ++m)
            if (features_[m].name != other.features_[m].name || features_[m].values != other.features_[m].values)
                return false;
        return true;
    }

private:
    void validate() {
        if (outcome_.empty()) throw data_error("dataset has no rows");
        if (features_.empty()) throw data_error("dataset has no features");
        if (columns_.size() != features_.size()) throw data_error("column count does not match feature count");
        if (!raw_.empty() && raw_.size() != features_.size()) throw data_error("raw column count mismatch");
        std::set<std::string_view> names;
        for (std::size_t m = 0; m < features_.size(); ++m) {
            const auto& spec = features_[m];
            if (!names.insert(spec.name).second) throw data_error("duplicate feature name: " + spec.name);
            if (spec.values.empty()) throw data_error("feature " + spec.name + " declares no values");
            std::set<std::string_view> labels(spec.values.begin(), spec.values.end());
            if (labels.size() != spec.values.size()) throw data_error("duplicate value label in " + spec.name);
            const auto& col = columns_[m];
            if (col.size() != outcome_.size()) throw data_error("column " + spec.name + " has wrong length");
            std::vector<bool> seen(spec.cardinality(), false);
            for (code_t c : col) {
                if (c >= spec.cardinality()) throw data_error("code out of range in " + spec.name);
                seen[c] = true;
            }
            if (std::find(seen.begin(), seen.end(), false) != seen.end())
                throw data_error("feature " + spec.name + " declares a value that never occurs");
        }
        outcome_sum_ = 0;
        for (auto y : outcome_) {
            if (y > 1) throw data_error("outcome must be 0 or 1");
            outcome_sum_ += y;
        }
    }

    std::vector<feature_spec> features_;
    std::vector<std::vector<code_t>> columns_;
    std::vector<std::uint8_t> outcome_;
    std::vector<std::vector<double>> raw_;
    std::uint64_t outcome_sum_ = 0;
};

/// Global outcome mean, rejecting tables where every outcome is equal.
inline double nondegenerate_mean(const dataset& data) {
    if (data.outcome_sum() == 0 || data.outcome_sum() == data.rows())
        throw data_error("degenerate outcome: all outcomes are " + std::to_string(data.outcome_sum() ? 1 : 0));
    return data.global_mean();
}

/// Row indices whose feature m holds value code u.
inline std::vector<std::size_t> stratify(const dataset& data, std::size_t m, code_t u) {
    if (m >= data.num_features()) throw usage_error("stratify: feature index out of range");
    if (u >= data.feature(m).cardinality()) throw usage_error("stratify: value code out of range");
    std::vector<std::size_t> rows;
    const auto col = data.column(m);
    for (std::size_t i = 0; i < col.size(); ++i)
        if (col[i] == u) rows.push_back(i);
    return rows;
}

enum class column_kind { categorical, numeric };

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

inline std::optional<double> parse_number(std::string_view s) {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return value;
}

/// Shortest decimal text that reads back to the same double.
inline std::string format_number(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

} // namespace detail

/// Reads an RFC-4180 CSV with a header row. Every column other than `outcome_column`
/// becomes a feature. Columns whose non-empty fields all parse as numbers are coded
/// over their distinct values and flagged for discretize(); other columns are taken
/// verbatim as categories. Empty fields are missing and get their own value.
inline dataset load_csv(const std::string& path, const std::string& outcome_column,
                        const std::map<std::string, column_kind>& hints = {}) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open input file: " + path);
    auto rows = csv::parse(in);
    while (!rows.empty() && rows.back().size() == 1 && rows.back()[0].empty()) rows.pop_back();
    if (rows.empty()) throw data_error("empty table: " + path);

    const auto header = rows.front();
    {
        std::set<std::string> names;
        for (const auto& h : header)
            if (!names.insert(h).second) throw data_error("duplicate column name: " + h);
    }
    const auto outcome_it = std::find(header.begin(), header.end(), outcome_column);
    if (outcome_it == header.end()) throw data_error("outcome column not found: " + outcome_column);
    const auto outcome_index = static_cast<std::size_t>(outcome_it - header.begin());
    const std::size_t n = rows.size() - 1;
    if (n == 0) throw data_error("empty table: no data rows in " + path);
    if (header.size() < 2) throw data_error("table has no feature columns");

    for (std::size_t r = 1; r < rows.size(); ++r)
        if (rows[r].size() != header.size())
            throw data_error("row " + std::to_string(r + 1) + " has " + std::to_string(rows[r].size()) +
                             " fields, expected " + std::to_string(header.size()));

    std::vector<std::uint8_t> outcome(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto v = detail::trim(rows[i + 1][outcome_index]);
        if (v == "0") outcome[i] = 0;
        else if (v == "1") outcome[i] = 1;
        else throw data_error("unparseable outcome '" + std::string(v) + "' in row " + std::to_string(i + 2));
    }

    std::vector<feature_spec> specs;
    std::vector<std::vector<code_t>> columns;
    std::vector<std::vector<double>> raw;
    bool any_numeric = false;

    for (std::size_t j = 0; j < header.size(); ++j) {
        if (j == outcome_index) continue;
        std::vector<std::optional<double>> numbers(n);
        bool numeric = true;
        bool any_value = false;
        for (std::size_t i = 0; i < n && numeric; ++i) {
            const auto field = detail::trim(rows[i + 1][j]);
            if (field.empty()) continue;
            numbers[i] = detail::parse_number(field);
            if (!numbers[i]) numeric = false;
            any_value = true;
        }
        if (!any_value) numeric = false;
        if (auto hint = hints.find(header[j]); hint != hints.end()) {
            if (hint->second == column_kind::numeric && !numeric)
                throw data_error("column " + header[j] + " is hinted numeric but holds non-numeric values");
            numeric = hint->second == column_kind::numeric;
        }

        feature_spec spec{header[j], {}, numeric};
        std::vector<code_t> codes(n);
        std::vector<double> values;
        if (numeric) {
            any_numeric = true;
            values.resize(n);
            std::set<double> distinct;
            bool missing = false;
            for (std::size_t i = 0; i < n; ++i) {
                values[i] = numbers[i] && !std::isnan(*numbers[i]) ? *numbers[i] : std::nan("");
                if (std::isnan(values[i])) missing = true;
                else distinct.insert(values[i]);
            }
            std::map<double, code_t> lookup;
            for (double v : distinct) {
                lookup.emplace(v, static_cast<code_t>(spec.values.size()));
                spec.values.push_back(detail::format_number(v));
            }
            if (missing) spec.values.emplace_back(missing_label);
            for (std::size_t i = 0; i < n; ++i)
                codes[i] = std::isnan(values[i]) ? static_cast<code_t>(spec.values.size() - 1) : lookup.at(values[i]);
        } else {
            std::set<std::string> distinct;
            bool missing = false;
            for (std::size_t i = 0; i < n; ++i) {
                const auto field = detail::trim(rows[i + 1][j]);
                if (field.empty()) missing = true;
                else distinct.emplace(field);
            }
            std::unordered_map<std::string, code_t> lookup;
            for (const auto& v : distinct) {
                lookup.emplace(v, static_cast<code_t>(spec.values.size()));
                spec.values.push_back(v);
            }
            if (missing) spec.values.emplace_back(missing_label);
            for (std::size_t i = 0; i < n; ++i) {
                const auto field = detail::trim(rows[i + 1][j]);
                codes[i] = field.empty() ? static_cast<code_t>(spec.values.size() - 1) : lookup.at(std::string(field));
            }
        }
        specs.push_back(std::move(spec));
        columns.push_back(std::move(codes));
        raw.push_back(std::move(values));
    }
    if (!any_numeric) raw.clear();
    return dataset(std::move(specs), std::move(columns), std::move(outcome), std::move(raw));
}

/// Writes the table back out as CSV with the outcome as the last column.
inline void write_csv(std::ostream& out, const dataset& data, const std::string& outcome_column = "y") {
    csv::row header;
    for (const auto& f : data.features()) header.push_back(f.name);
    header.push_back(outcome_column);
    csv::write_row(out, header);
    csv::row fields(data.num_features() + 1);
    for (std::size_t i = 0; i < data.rows(); ++i) {
        for (std::size_t m = 0; m < data.num_features(); ++m) {
            const auto& label = data.feature(m).values[data.column(m)[i]];
            fields[m] = label == missing_label ? std::string() : label;
        }
        fields.back() = data.outcome()[i] ? "1" : "0";
        csv::write_row(out, fields);
    }
}

} // namespace safs
