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

// Per-sample accuracy metrics:
//   SE_i  = (y_i - yhat_i)^2
//   AE_i  = |y_i - yhat_i|
//   PE_i  = (y_i - yhat_i) / y_i
//   APE_i = |PE_i|
//   ASE_i = AE_i / mean(|y_j - y_{j-1}|),  the scale-free error
//   R^2   = 1 - SSE / SST
// Percentage metrics blow up on zero actuals, so those samples are recorded
// as NaN and counted in `pe_excluded` instead of poisoning aggregates.

#pragma once

#include "procwatt/error.hpp"
#include "procwatt/numeric.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace procwatt {

struct MetricVector {
    std::vector<double> se, ae, pe, ape, ase;
    double r2 = 0.0;
    std::size_t pe_excluded = 0; // samples with y == 0, NaN in pe/ape
};

inline MetricVector metrics(std::span<const double> y, std::span<const double> yhat) {
    if (y.size() != yhat.size()) throw Error("metrics: input lengths differ");
    const std::size_t n = y.size();
    if (n < 2) throw Error("metrics: need at least 2 samples");

    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(n);
    double sst = 0.0;
    for (double v : y) sst += (v - mean) * (v - mean);
    if (sst <= 0.0) throw Error("metrics: R^2 undefined for a constant actual series");

    double abs_diff_sum = 0.0;
    for (std::size_t i = 1; i < n; ++i) abs_diff_sum += std::abs(y[i] - y[i - 1]);
    const double scale = abs_diff_sum / static_cast<double>(n - 1);
    if (scale <= 0.0) throw Error("metrics: zero scaled-error denominator");

    MetricVector m;
    m.se.resize(n);
    m.ae.resize(n);
    m.pe.resize(n);
    m.ape.resize(n);
    m.ase.resize(n);

    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double err = y[i] - yhat[i];
        m.se[i] = err * err;
        m.ae[i] = std::abs(err);
        m.ase[i] = m.ae[i] / scale;
        sse += m.se[i];
        if (y[i] == 0.0) {
            m.pe[i] = std::numeric_limits<double>::quiet_NaN();
            m.ape[i] = std::numeric_limits<double>::quiet_NaN();
            ++m.pe_excluded;
        } else {
            m.pe[i] = err / y[i];
            m.ape[i] = std::abs(m.pe[i]);
        }
    }
    m.r2 = 1.0 - sse / sst;
    return m;
}

/// R^2 alone, tolerant of short inputs (returns NaN when undefined).
inline double r_squared(std::span<const double> y, std::span<const double> yhat) {
    if (y.size() != yhat.size() || y.size() < 2)
        return std::numeric_limits<double>::quiet_NaN();
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    double sst = 0.0, sse = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        sst += (y[i] - mean) * (y[i] - mean);
        sse += (y[i] - yhat[i]) * (y[i] - yhat[i]);
    }
    if (sst <= 0.0) return std::numeric_limits<double>::quiet_NaN();
    return 1.0 - sse / sst;
}

} // namespace procwatt
