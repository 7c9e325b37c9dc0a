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

// Variable selection: MIC of every candidate variable against the power
// target, thresholded. Also the one-sample Kolmogorov-Smirnov check used to
// rule out a Gaussian power distribution.

#pragma once

#include "procwatt/dataset.hpp"
#include "procwatt/error.hpp"
#include "procwatt/mic.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace procwatt {

struct MicScore {
    std::string variable;
    double mic = 0.0;
};

struct SelectionReport {
    std::vector<MicScore> scores;      // sorted by (mic desc, name asc)
    double threshold = 0.10;
    std::vector<std::string> selected; // names with mic >= threshold, score order
};

/// Scores every non-target variable against the target (which must be of
/// kind power_watts). Per-variable computations run in parallel; the report
/// order is deterministic regardless.
inline SelectionReport select_variables(const Dataset& d, std::string_view target,
                                        double threshold = 0.10, MicOptions opt = {}) {
    const auto& tvar = d.variable(target); // throws if missing
    if (tvar.kind != VarKind::PowerWatts)
        throw Error("selection target '" + std::string(target) +
                    "' is not marked as the power column");

    std::vector<std::string> names;
    for (const auto& v : d.variables())
        if (v.name != target) names.push_back(v.name);
    std::sort(names.begin(), names.end());

    const auto y = d.column(target);
    std::vector<MicScore> scores(names.size());

    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const unsigned workers =
        static_cast<unsigned>(std::min<std::size_t>(hw, names.size()));
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::string failure;
    std::mutex failure_mu;

    const auto work = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= names.size() || failed.load()) break;
            try {
                const auto x = d.column(names[i]);
                scores[i] = MicScore{names[i], mic(x, y, opt)};
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(failure_mu);
                failed.store(true);
                failure = names[i] + std::string(": ") + e.what();
            }
        }
    };

    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < workers; ++t) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (failed.load()) throw Error("mic failed for variable " + failure);

    std::sort(scores.begin(), scores.end(), [](const MicScore& a, const MicScore& b) {
        if (a.mic != b.mic) return a.mic > b.mic;
        return a.variable < b.variable;
    });

    SelectionReport report;
    report.scores = std::move(scores);
    report.threshold = threshold;
    for (const auto& s : report.scores)
        if (s.mic >= threshold) report.selected.push_back(s.variable);
    return report;
}

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
    bool gaussian_rejected_at_5pct = false;
};

namespace detail {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

/// Survival function of the Kolmogorov distribution, Q(t) = P(K > t).
/// Uses the theta-function series on each side of t ~ 1.18 for accuracy.
inline double kolmogorov_survival(double t) {
    if (t <= 0.0) return 1.0;
    if (t < 1.18) {
        const double f = std::exp(-M_PI * M_PI / (8.0 * t * t));
        const double sum = f + std::pow(f, 9.0) + std::pow(f, 25.0) + std::pow(f, 49.0);
        return std::clamp(1.0 - std::sqrt(2.0 * M_PI) / t * sum, 0.0, 1.0);
    }
    double sum = 0.0;
    double sign = 1.0;
    for (int j = 1; j <= 100; ++j) {
        const double term = std::exp(-2.0 * j * j * t * t);
        sum += sign * term;
        if (term < 1e-300) break;
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

} // namespace detail

/// One-sample KS test of `values` against a Gaussian with the sample's own
/// mean and standard deviation, with the asymptotic Kolmogorov p-value.
/// Requires n >= 8. A zero-spread sample is maximally non-Gaussian:
/// statistic 1, p-value 0.
inline KsResult ks_gaussian_test(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n < 8) throw Error("ks_gaussian_test: need at least 8 observations");

    const MeanSd ms = mean_sd(values);
    if (ms.sd == 0.0) return KsResult{1.0, 0.0, true};

    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());

    double d_stat = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double cdf = detail::normal_cdf((sorted[i] - ms.mean) / ms.sd);
        const double hi = static_cast<double>(i + 1) / static_cast<double>(n) - cdf;
        const double lo = cdf - static_cast<double>(i) / static_cast<double>(n);
        d_stat = std::max({d_stat, hi, lo});
    }

    KsResult r;
    r.statistic = d_stat;
    r.p_value = detail::kolmogorov_survival(std::sqrt(static_cast<double>(n)) * d_stat);
    r.gaussian_rejected_at_5pct = r.p_value < 0.05;
    return r;
}

} // namespace procwatt
