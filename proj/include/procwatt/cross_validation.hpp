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

// k-fold cross-validation. Rows are shuffled once from the seed and cut
// into k near-equal contiguous folds; each fold is held out while the
// trainer fits on the rest. Held-out (actual, estimate) pairs are pooled in
// fold order and per-sample metrics aggregate over that pooled series
// (micro-average). The scaled error's denominator therefore follows the
// pooled post-shuffle ordering; headline R^2 is the pooled definition, with
// per-fold values reported alongside when the fold admits one.

#pragma once

#include "procwatt/dataset.hpp"
#include "procwatt/error.hpp"
#include "procwatt/metrics.hpp"
#include "procwatt/numeric.hpp"

#include <chrono>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace procwatt {

/// Maps a raw (un-normalized) feature vector to estimated watts.
using PredictFn = std::function<double(std::span<const double>)>;

/// Fits on a training split and returns a predictor over raw features.
using TrainerFn = std::function<PredictFn(const Dataset& train, const std::string& target,
                                          const std::vector<std::string>& features)>;

struct MetricSummary {
    double mean = 0.0;
    double sd = 0.0;
    std::size_t n = 0;
};

struct EvalReport {
    MetricSummary se, ae, pe, ape, ase; // pooled over all held-out samples
    double r2 = 0.0;                    // pooled R^2 over the same samples
    std::vector<double> fold_r2;        // NaN where a fold is too small/constant
    std::vector<double> fold_train_seconds;
    std::size_t pe_excluded = 0;
    std::size_t k = 0;
    std::uint64_t seed = 0;
    std::vector<double> actual;    // pooled series, fold order
    std::vector<double> estimated;
};

inline MetricSummary summarize(std::span<const double> values) {
    const MeanSd ms = mean_sd(values);
    return MetricSummary{ms.mean, ms.sd, ms.n};
}

inline EvalReport cross_validate(const Dataset& d, std::string_view target,
                                 const std::vector<std::string>& features,
                                 const TrainerFn& trainer, std::size_t k = 10,
                                 std::uint64_t seed = 0) {
    const std::size_t n = d.n_rows();
    if (k < 2) throw Error("cross_validate: k must be >= 2");
    if (n < k)
        throw Error("cross_validate: " + to_text(static_cast<std::int64_t>(n)) +
                    " rows cannot form " + to_text(static_cast<std::int64_t>(k)) + " folds");

    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    Rng rng(seed);
    rng.shuffle(order);

    std::vector<std::size_t> feat_idx(features.size());
    for (std::size_t j = 0; j < features.size(); ++j) feat_idx[j] = d.variable_index(features[j]);
    const std::size_t target_idx = d.variable_index(target);

    EvalReport report;
    report.k = k;
    report.seed = seed;

    const std::size_t base = n / k;
    const std::size_t extra = n % k; // first `extra` folds get one more row
    std::size_t fold_start = 0;

    for (std::size_t fold = 0; fold < k; ++fold) {
        const std::size_t fold_size = base + (fold < extra ? 1 : 0);
        const std::size_t fold_end = fold_start + fold_size;

        Dataset train(d.variables(), d.label());
        for (std::size_t i = 0; i < n; ++i) {
            if (i >= fold_start && i < fold_end) continue;
            const auto& row = d.rows()[order[i]];
            train.append_row(row.ts_ms, row.values);
        }

        const auto t0 = std::chrono::steady_clock::now();
        const PredictFn predict = trainer(train, std::string(target), features);
        const auto t1 = std::chrono::steady_clock::now();
        report.fold_train_seconds.push_back(
            std::chrono::duration<double>(t1 - t0).count());

        std::vector<double> fold_actual, fold_estimated;
        std::vector<double> x(features.size());
        for (std::size_t i = fold_start; i < fold_end; ++i) {
            const auto& row = d.rows()[order[i]];
            for (std::size_t j = 0; j < features.size(); ++j) x[j] = row.values[feat_idx[j]];
            fold_actual.push_back(row.values[target_idx]);
            fold_estimated.push_back(predict(x));
        }
        report.fold_r2.push_back(r_squared(fold_actual, fold_estimated));
        report.actual.insert(report.actual.end(), fold_actual.begin(), fold_actual.end());
        report.estimated.insert(report.estimated.end(), fold_estimated.begin(),
                                fold_estimated.end());
        fold_start = fold_end;
    }

    const MetricVector m = metrics(report.actual, report.estimated);
    report.se = summarize(m.se);
    report.ae = summarize(m.ae);
    report.pe = summarize(m.pe);
    report.ape = summarize(m.ape);
    report.ase = summarize(m.ase);
    report.r2 = m.r2;
    report.pe_excluded = m.pe_excluded;
    return report;
}

struct TimingReport {
    double mean_seconds = 0.0;
    double sd_seconds = 0.0;
    std::vector<double> runs;
};

/// Wall-clock cost of fitting on the full dataset, measured on the
/// monotonic clock; `repeats` > 1 adds a spread estimate.
inline TimingReport timing_report(const TrainerFn& trainer, const Dataset& d,
                                  std::string_view target,
                                  const std::vector<std::string>& features, int repeats = 1) {
    if (repeats < 1) throw Error("timing_report: repeats must be >= 1");
    TimingReport out;
    for (int i = 0; i < repeats; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        (void)trainer(d, std::string(target), features);
        const auto t1 = std::chrono::steady_clock::now();
        double secs = std::chrono::duration<double>(t1 - t0).count();
        if (secs <= 0.0) secs = 1e-9; // clock granularity floor
        out.runs.push_back(secs);
    }
    const MeanSd ms = mean_sd(out.runs);
    out.mean_seconds = ms.mean;
    out.sd_seconds = ms.sd;
    return out;
}

} // namespace procwatt
