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

// Multiple linear regression by ordinary least squares. The contract is the
// least-squares solution; it is computed through a column-pivoted
// Householder QR rather than an explicit normal-equation inverse, which
// survives the severe conditioning that mixed-architecture counter data can
// produce. Collinear columns are dropped (coefficient 0) with a warning
// instead of failing, so a pipeline over redundant counters still completes.

#pragma once

#include "procwatt/dataset.hpp"
#include "procwatt/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace procwatt {

struct LinearModel {
    double intercept = 0.0;
    std::vector<double> coefficients; // aligned with feature_names
    std::vector<std::string> feature_names;
    double residual_mean = 0.0; // mean training residual; ~0 for OLS with intercept
    std::vector<std::string> warnings;
};

namespace detail {

struct LeastSquares {
    std::vector<double> beta;
    std::vector<std::size_t> dropped; // column indexes zeroed by rank deficiency
};

/// Minimizes ||A b - y|| over b. `columns` is column-major and is consumed.
inline LeastSquares qr_least_squares(std::vector<std::vector<double>>& columns,
                                     std::vector<double> y) {
    const std::size_t p = columns.size();
    const std::size_t n = y.size();
    const std::size_t steps = std::min(n, p);

    std::vector<std::size_t> perm(p);
    std::iota(perm.begin(), perm.end(), std::size_t{0});

    const auto tail_norm2 = [&](std::size_t col, std::size_t from) {
        double s = 0.0;
        for (std::size_t i = from; i < n; ++i) s += columns[col][i] * columns[col][i];
        return s;
    };

    double norm0 = 0.0;
    for (std::size_t j = 0; j < p; ++j) norm0 = std::max(norm0, tail_norm2(j, 0));
    const double tol = std::sqrt(norm0) * std::numeric_limits<double>::epsilon() *
                       static_cast<double>(std::max(n, p));

    std::size_t rank = steps;
    std::vector<double> v(n);
    for (std::size_t k = 0; k < steps; ++k) {
        // Pivot on the column with the largest remaining norm.
        std::size_t best = k;
        double best_norm2 = tail_norm2(k, k);
        for (std::size_t j = k + 1; j < p; ++j) {
            const double s = tail_norm2(j, k);
            if (s > best_norm2) {
                best_norm2 = s;
                best = j;
            }
        }
        const double sigma = std::sqrt(best_norm2);
        if (sigma <= tol) {
            rank = k;
            break;
        }
        std::swap(columns[k], columns[best]);
        std::swap(perm[k], perm[best]);

        // Householder reflection zeroing column k below the diagonal.
        const double alpha = columns[k][k] >= 0.0 ? -sigma : sigma;
        double vtv = 0.0;
        for (std::size_t i = k; i < n; ++i) {
            v[i] = columns[k][i];
            if (i == k) v[i] -= alpha;
            vtv += v[i] * v[i];
        }
        columns[k][k] = alpha;
        for (std::size_t i = k + 1; i < n; ++i) columns[k][i] = 0.0;
        if (vtv == 0.0) continue;

        for (std::size_t j = k + 1; j < p; ++j) {
            double dot = 0.0;
            for (std::size_t i = k; i < n; ++i) dot += v[i] * columns[j][i];
            const double w = 2.0 * dot / vtv;
            for (std::size_t i = k; i < n; ++i) columns[j][i] -= w * v[i];
        }
        double dot = 0.0;
        for (std::size_t i = k; i < n; ++i) dot += v[i] * y[i];
        const double w = 2.0 * dot / vtv;
        for (std::size_t i = k; i < n; ++i) y[i] -= w * v[i];
    }

    // Back-substitute R z = (Q^T y) on the rank x rank leading block.
    std::vector<double> z(rank, 0.0);
    for (std::size_t ii = rank; ii-- > 0;) {
        double acc = y[ii];
        for (std::size_t j = ii + 1; j < rank; ++j) acc -= columns[j][ii] * z[j];
        z[ii] = acc / columns[ii][ii];
    }

    LeastSquares out;
    out.beta.assign(p, 0.0);
    for (std::size_t k = 0; k < rank; ++k) out.beta[perm[k]] = z[k];
    for (std::size_t k = rank; k < p; ++k) out.dropped.push_back(perm[k]);
    return out;
}

} // namespace detail

/// Ordinary least squares fit of `target` on `features` plus an intercept.
/// Requires more rows than parameters. Rank-deficient columns come back with
/// coefficient 0 and a warning naming them.
inline LinearModel fit_mlr(const Dataset& d, std::string_view target,
                           const std::vector<std::string>& features) {
    if (features.empty()) throw Error("fit_mlr: empty feature list");
    for (const auto& f : features)
        if (f == target) throw Error("fit_mlr: feature list contains the target");
    {
        std::vector<std::string> sorted = features;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw Error("fit_mlr: duplicate feature name");
    }

    const std::size_t n = d.n_rows();
    const std::size_t p = features.size() + 1; // + intercept
    if (n < p)
        throw Error("fit_mlr: " + to_text(static_cast<std::int64_t>(n)) + " rows cannot fit " +
                    to_text(static_cast<std::int64_t>(p)) + " parameters");

    std::vector<std::vector<double>> columns(p);
    columns[0].assign(n, 1.0);
    for (std::size_t j = 0; j < features.size(); ++j) columns[j + 1] = d.column(features[j]);
    const std::vector<double> y = d.column(target);

    auto cols_copy = columns;
    const auto ls = detail::qr_least_squares(cols_copy, y);

    LinearModel m;
    m.feature_names = features;
    m.intercept = ls.beta[0];
    m.coefficients.assign(features.size(), 0.0);
    for (std::size_t j = 0; j < features.size(); ++j) m.coefficients[j] = ls.beta[j + 1];
    for (std::size_t idx : ls.dropped) {
        if (idx == 0)
            m.warnings.push_back("intercept column is collinear; intercept set to 0");
        else
            m.warnings.push_back("feature '" + features[idx - 1] +
                                 "' is collinear with earlier columns; coefficient set to 0");
    }

    double rsum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double pred = m.intercept;
        for (std::size_t j = 0; j < features.size(); ++j)
            pred += m.coefficients[j] * columns[j + 1][i];
        rsum += y[i] - pred;
    }
    m.residual_mean = rsum / static_cast<double>(n);
    return m;
}

inline double predict_mlr(const LinearModel& m, std::span<const double> x) {
    if (x.size() != m.coefficients.size())
        throw Error("predict_mlr: expected " +
                    to_text(static_cast<std::int64_t>(m.coefficients.size())) + " features, got " +
                    to_text(static_cast<std::int64_t>(x.size())));
    double out = m.intercept;
    for (std::size_t j = 0; j < x.size(); ++j) out += m.coefficients[j] * x[j];
    return out;
}

} // namespace procwatt
