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

// Invertible per-variable min-max scaling. Models whose output unit is
// bounded (tanh heads) train against normalized targets and carry the recipe
// so predictions come back in watts.

#pragma once

#include "procwatt/dataset.hpp"
#include "procwatt/error.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace procwatt {

struct VariableScale {
    std::string name;
    double offset = 0.0; // observed minimum
    double scale = 1.0;  // (hi - lo) / (max - min); 1 for constant columns
};

// normalized = lo + scale * (value - offset); inverting the recipe recovers
// the original value. Constant columns map to the range's lower bound.
class NormalizationRecipe {
public:
    NormalizationRecipe() = default;
    NormalizationRecipe(double lo, double hi, std::vector<VariableScale> vars)
        : lo_(lo), hi_(hi), vars_(std::move(vars)) {}

    double lo() const { return lo_; }
    double hi() const { return hi_; }
    const std::vector<VariableScale>& variables() const { return vars_; }

    std::size_t index_of(std::string_view name) const {
        for (std::size_t i = 0; i < vars_.size(); ++i)
            if (vars_[i].name == name) return i;
        throw Error("normalization recipe has no variable '" + std::string(name) + "'");
    }

    double apply(std::size_t i, double value) const {
        const auto& v = vars_.at(i);
        return lo_ + v.scale * (value - v.offset);
    }

    double invert(std::size_t i, double normalized) const {
        const auto& v = vars_.at(i);
        return v.offset + (normalized - lo_) / v.scale;
    }

private:
    double lo_ = -1.0;
    double hi_ = 1.0;
    std::vector<VariableScale> vars_;
};

/// Fits affine maps sending each variable's [min, max] onto [lo, hi].
/// A constant column gets scale 1 and maps onto lo.
inline NormalizationRecipe fit_normalizer(const Dataset& d, double lo, double hi,
                                          const std::vector<std::string>& names) {
    if (d.n_rows() == 0) throw Error("cannot fit a normalizer on an empty dataset");
    if (!(hi > lo)) throw Error("normalization range must have hi > lo");
    std::vector<VariableScale> vars;
    vars.reserve(names.size());
    for (const auto& name : names) {
        const auto col = d.column(name);
        const double mn = *std::min_element(col.begin(), col.end());
        const double mx = *std::max_element(col.begin(), col.end());
        VariableScale vs;
        vs.name = name;
        vs.offset = mn;
        vs.scale = mx > mn ? (hi - lo) / (mx - mn) : 1.0;
        vars.push_back(vs);
    }
    return NormalizationRecipe(lo, hi, std::move(vars));
}

inline NormalizationRecipe fit_normalizer(const Dataset& d, double lo, double hi) {
    std::vector<std::string> names;
    names.reserve(d.n_variables());
    for (const auto& v : d.variables()) names.push_back(v.name);
    return fit_normalizer(d, lo, hi, names);
}

} // namespace procwatt
