/*
    Copyright (c) 2026 The procwatt Authors
    Licensed under the Apache License, Version 2.0 (the "License");
    you may not use this file except in compliance with the License.
    You may obtain a copy of the License at
        http://www.apache.org/licenses/LICENSE-2.0
    Unless required by applicable law or agreed to in writing, software
    distributed under the License is distributed on an "AS IS" BASIS,
    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
    See the License for the specific language governing permissions and
    limitations under the License.
*/

// Rectangular, in-memory dataset of timestamped counter samples plus the
// measured power column, with delimited-text ingest/emit.
//
// File format: UTF-8, comma-delimited, first line is the header. When the
// first column is named `ts_ms` it is stored as each row's timestamp; every
// other column is a variable. Values may use scientific notation. Rows are
// rejected (never imputed) on wrong arity, non-numeric or non-finite cells.

#pragma once

#include "procwatt/error.hpp"
#include "procwatt/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace procwatt {

enum class VarKind {
    Counter,
    ArchIndicator,
    PowerWatts,
};

struct VariableDescriptor {
    std::string name;
    VarKind kind = VarKind::Counter;
    std::string units;

    friend bool operator==(const VariableDescriptor& a, const VariableDescriptor& b) {
        return a.name == b.name && a.kind == b.kind;
    }
};

struct Sample {
    std::int64_t ts_ms = 0;
    std::vector<double> values; // aligned with the dataset's variable list
};

// Name of the timestamp column in the file format. Reserved: it is held in
// Sample::ts_ms, never as a variable.
inline constexpr std::string_view kTimestampColumn = "ts_ms";

// Conventional column names; ingest infers variable kinds from them.
inline constexpr std::string_view kPowerColumn = "power_w";
inline constexpr std::string_view kArchColumn = "ARCH";

// Values are immutable once a row is appended; a fully built Dataset is safe
// to share across threads read-only.
class Dataset {
public:
    Dataset() = default;

    explicit Dataset(std::vector<VariableDescriptor> variables, std::string label = "")
        : variables_(std::move(variables)), label_(std::move(label)) {
        std::set<std::string> seen;
        for (const auto& v : variables_) {
            if (v.name == kTimestampColumn)
                throw Error("variable name 'ts_ms' is reserved for the timestamp column");
            if (!seen.insert(v.name).second)
                throw Error("duplicate variable name: " + v.name);
        }
    }

    const std::vector<VariableDescriptor>& variables() const { return variables_; }
    const std::vector<Sample>& rows() const { return rows_; }
    const std::string& label() const { return label_; }
    void set_label(std::string label) { label_ = std::move(label); }

    std::size_t n_rows() const { return rows_.size(); }
    std::size_t n_variables() const { return variables_.size(); }

    bool has_variable(std::string_view name) const {
        return find_index(name) != npos;
    }

    std::size_t variable_index(std::string_view name) const {
        const std::size_t i = find_index(name);
        if (i == npos) throw Error("unknown variable: " + std::string(name));
        return i;
    }

    const VariableDescriptor& variable(std::string_view name) const {
        return variables_[variable_index(name)];
    }

    void append_row(std::int64_t ts_ms, std::vector<double> values) {
        if (values.size() != variables_.size())
            throw Error("row arity " + to_text(static_cast<std::int64_t>(values.size())) +
                        " does not match variable count " +
                        to_text(static_cast<std::int64_t>(variables_.size())));
        for (std::size_t i = 0; i < values.size(); ++i)
            if (!std::isfinite(values[i]))
                throw Error("non-finite value in column '" + variables_[i].name + "'");
        rows_.push_back(Sample{ts_ms, std::move(values)});
    }

    std::vector<double> column(std::string_view name) const {
        const std::size_t i = variable_index(name);
        std::vector<double> out;
        out.reserve(rows_.size());
        for (const auto& r : rows_) out.push_back(r.values[i]);
        return out;
    }

    /// Copy with one variable's kind replaced (e.g. to mark a non-standard
    /// column name as the power target).
    Dataset retagged(std::string_view name, VarKind kind) const {
        Dataset out = *this;
        out.variables_[out.variable_index(name)].kind = kind;
        return out;
    }

    friend bool operator==(const Dataset& a, const Dataset& b) {
        if (a.variables_ != b.variables_ || a.label_ != b.label_) return false;
        if (a.rows_.size() != b.rows_.size()) return false;
        for (std::size_t i = 0; i < a.rows_.size(); ++i) {
            if (a.rows_[i].ts_ms != b.rows_[i].ts_ms) return false;
            if (a.rows_[i].values != b.rows_[i].values) return false;
        }
        return true;
    }

private:
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    std::size_t find_index(std::string_view name) const {
        for (std::size_t i = 0; i < variables_.size(); ++i)
            if (variables_[i].name == name) return i;
        return npos;
    }

    std::vector<VariableDescriptor> variables_;
    std::vector<Sample> rows_;
    std::string label_;
};

namespace detail {

inline VarKind infer_kind(std::string_view name) {
    if (name == kPowerColumn) return VarKind::PowerWatts;
    if (name == kArchColumn) return VarKind::ArchIndicator;
    return VarKind::Counter;
}

inline std::string_view strip_cr(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
}

} // namespace detail

/// Reads a delimited-text table. The header defines the variables; a leading
/// `ts_ms` column becomes the row timestamp. Errors cite 1-based file line
/// numbers.
inline Dataset load_table(std::istream& in, std::string label = "") {
    std::string line;
    if (!std::getline(in, line)) throw Error("empty table: missing header");
    const auto header = split_fields(detail::strip_cr(line));

    const bool has_ts = !header.empty() && header.front() == kTimestampColumn;
    std::vector<VariableDescriptor> vars;
    for (std::size_t i = has_ts ? 1 : 0; i < header.size(); ++i) {
        if (header[i].empty()) throw Error("line 1: empty column name in header");
        if (header[i] == kTimestampColumn)
            throw Error("line 1: 'ts_ms' may only appear as the first column");
        vars.push_back(VariableDescriptor{std::string(header[i]),
                                          detail::infer_kind(header[i]), ""});
    }

    Dataset d(std::move(vars), std::move(label)); // also rejects duplicates

    std::size_t line_no = 1;
    std::int64_t next_ts = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto sv = detail::strip_cr(line);
        if (sv.empty()) continue; // tolerate a trailing blank line
        const auto fields = split_fields(sv);
        if (fields.size() != header.size())
            throw Error("line " + to_text(static_cast<std::int64_t>(line_no)) + ": expected " +
                        to_text(static_cast<std::int64_t>(header.size())) + " fields, got " +
                        to_text(static_cast<std::int64_t>(fields.size())));

        std::int64_t ts = next_ts;
        std::size_t first_value = 0;
        if (has_ts) {
            const auto parsed = parse_int64(fields[0]);
            if (!parsed)
                throw Error("line " + to_text(static_cast<std::int64_t>(line_no)) +
                            ": ts_ms is not an integer: '" + std::string(fields[0]) + "'");
            ts = *parsed;
            first_value = 1;
        }

        std::vector<double> values;
        values.reserve(fields.size() - first_value);
        for (std::size_t i = first_value; i < fields.size(); ++i) {
            const auto v = parse_double(fields[i]);
            if (!v || !std::isfinite(*v))
                throw Error("line " + to_text(static_cast<std::int64_t>(line_no)) + ": column '" +
                            std::string(header[i]) + "' is not a finite number: '" +
                            std::string(fields[i]) + "'");
            values.push_back(*v);
        }
        d.append_row(ts, std::move(values));
        ++next_ts;
    }
    return d;
}

inline Dataset load_table(const std::string& path, std::string label = "") {
    std::ifstream in(path);
    if (!in) throw Error("cannot open table: " + path);
    try {
        return load_table(in, std::move(label));
    } catch (const Error& e) {
        throw Error(path + ": " + e.what());
    }
}

/// Validating overload: the file header must match the given schema exactly.
inline Dataset load_table(const std::string& path, const std::vector<VariableDescriptor>& schema,
                          std::string label = "") {
    Dataset d = load_table(path, std::move(label));
    if (d.n_variables() != schema.size())
        throw Error(path + ": header has " + to_text(static_cast<std::int64_t>(d.n_variables())) +
                    " variables, schema expects " +
                    to_text(static_cast<std::int64_t>(schema.size())));
    std::vector<VariableDescriptor> vars;
    for (std::size_t i = 0; i < schema.size(); ++i) {
        if (d.variables()[i].name != schema[i].name)
            throw Error(path + ": column " + to_text(static_cast<std::int64_t>(i + 1)) + " is '" +
                        d.variables()[i].name + "', schema expects '" + schema[i].name + "'");
        vars.push_back(schema[i]);
    }
    Dataset out(std::move(vars), d.label());
    for (const auto& r : d.rows()) out.append_row(r.ts_ms, r.values);
    return out;
}

inline void write_table(const Dataset& d, std::ostream& out) {
    out << kTimestampColumn;
    for (const auto& v : d.variables()) out << ',' << v.name;
    out << '\n';
    for (const auto& r : d.rows()) {
        out << to_text(r.ts_ms);
        for (double v : r.values) out << ',' << to_text(v);
        out << '\n';
    }
}

inline void write_table(const Dataset& d, const std::string& path) {
    std::ofstream out(path, std::ios::binary); // \n endings on every platform
    if (!out) throw Error("cannot write table: " + path);
    write_table(d, out);
}

/// Row-concatenates two datasets with identical variable lists and appends
/// an ARCH indicator column: -1 for rows from `a`, +1 for rows from `b`.
inline Dataset merge_with_arch_indicator(const Dataset& a, const Dataset& b) {
    if (a.variables() != b.variables()) {
        std::set<std::string> na, nb;
        for (const auto& v : a.variables()) na.insert(v.name);
        for (const auto& v : b.variables()) nb.insert(v.name);
        std::vector<std::string> diff;
        std::set_symmetric_difference(na.begin(), na.end(), nb.begin(), nb.end(),
                                      std::back_inserter(diff));
        std::string msg = "variable lists differ";
        if (diff.empty()) {
            msg += " (same names, different order or kind)";
        } else {
            msg += ": ";
            for (std::size_t i = 0; i < diff.size(); ++i) msg += (i ? ", " : "") + diff[i];
        }
        throw Error(msg);
    }

    std::vector<VariableDescriptor> vars = a.variables();
    vars.push_back(VariableDescriptor{std::string(kArchColumn), VarKind::ArchIndicator, ""});
    Dataset out(std::move(vars), "Mix");
    for (const auto& r : a.rows()) {
        std::vector<double> v = r.values;
        v.push_back(-1.0);
        out.append_row(r.ts_ms, std::move(v));
    }
    for (const auto& r : b.rows()) {
        std::vector<double> v = r.values;
        v.push_back(1.0);
        out.append_row(r.ts_ms, std::move(v));
    }
    return out;
}

struct SummaryStats {
    double mean = 0.0;
    double sd = 0.0;
    double min = 0.0;
    double max = 0.0;
    std::size_t n = 0;
};

/// Sample mean / standard deviation (n-1 denominator) and extrema of one
/// variable. Requires n >= 2.
inline SummaryStats describe(const Dataset& d, std::string_view variable) {
    const auto col = d.column(variable);
    if (col.size() < 2)
        throw Error("describe needs at least 2 rows, got " +
                    to_text(static_cast<std::int64_t>(col.size())));
    const MeanSd ms = mean_sd(col);
    SummaryStats s;
    s.mean = ms.mean;
    s.sd = ms.sd;
    s.n = col.size();
    s.min = *std::min_element(col.begin(), col.end());
    s.max = *std::max_element(col.begin(), col.end());
    return s;
}

} // namespace procwatt
