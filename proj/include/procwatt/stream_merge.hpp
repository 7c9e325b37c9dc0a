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

// Aligns a counter-snapshot stream with a power-reading stream by
// timestamp. Each consecutive snapshot pair [t_i, t_{i+1}) becomes one
// dataset row: cumulative counters are differenced across the interval,
// gauges keep their value at the interval start, and the power column is
// the mean of every reading whose timestamp falls inside the interval.
// Intervals without any reading are dropped and counted as gaps, so
// rows + gap_count always equals the interval count.

#pragma once

#include "procwatt/dataset.hpp"
#include "procwatt/error.hpp"
#include "procwatt/power_stream.hpp"
#include "procwatt/proc_counters.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace procwatt {

struct MergeResult {
    Dataset dataset;
    std::size_t gap_count = 0; // intervals dropped for lack of power readings
    std::vector<std::string> warnings;
};

inline MergeResult merge_streams(const std::vector<CounterSnapshot>& counters,
                                 const std::vector<PowerReading>& power) {
    if (counters.size() < 2)
        throw Error("merge_streams: need at least 2 counter snapshots");
    for (std::size_t i = 1; i < counters.size(); ++i)
        if (counters[i].ts_ms <= counters[i - 1].ts_ms)
            throw Error("merge_streams: counter snapshots out of order at index " +
                        to_text(static_cast<std::int64_t>(i)));
    if (power.empty()) throw Error("merge_streams: empty power stream");

    MergeResult result;

    // Columns: counters present in every snapshot, canonical order first.
    std::set<std::string> common;
    for (const auto& [name, _] : counters.front().values) common.insert(name);
    for (const auto& snap : counters) {
        for (auto it = common.begin(); it != common.end();) {
            if (snap.values.count(*it) == 0) {
                result.warnings.push_back("counter '" + *it +
                                          "' absent in some snapshots; column dropped");
                it = common.erase(it);
            } else {
                ++it;
            }
        }
    }
    if (common.empty()) throw Error("merge_streams: no counter present in every snapshot");

    std::vector<std::string> columns;
    for (const auto& name : canonical_counters())
        if (common.count(name)) {
            columns.push_back(name);
            common.erase(name);
        }
    for (const auto& name : common) columns.push_back(name); // non-canonical extras

    std::vector<VariableDescriptor> vars;
    for (const auto& c : columns) vars.push_back(VariableDescriptor{c, VarKind::Counter, ""});
    vars.push_back(VariableDescriptor{std::string(kPowerColumn), VarKind::PowerWatts, "W"});
    Dataset out(std::move(vars));

    std::size_t pw = 0; // power cursor; both streams are time-ordered
    std::set<std::string> reset_flagged;
    for (std::size_t i = 0; i + 1 < counters.size(); ++i) {
        const auto& cur = counters[i];
        const auto& next = counters[i + 1];

        while (pw < power.size() && power[pw].ts_ms < cur.ts_ms) ++pw;
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t j = pw; j < power.size() && power[j].ts_ms < next.ts_ms; ++j) {
            sum += power[j].watts;
            ++count;
        }
        if (count == 0) {
            ++result.gap_count;
            continue;
        }

        std::vector<double> row;
        row.reserve(columns.size() + 1);
        for (const auto& c : columns) {
            const double a = cur.values.at(c);
            const double b = next.values.at(c);
            if (counter_is_cumulative(c)) {
                if (b < a && reset_flagged.insert(c).second)
                    result.warnings.push_back("counter '" + c + "' went backwards at interval " +
                                              to_text(static_cast<std::int64_t>(i)) +
                                              " (reset?)");
                row.push_back(b - a);
            } else {
                row.push_back(a);
            }
        }
        row.push_back(sum / static_cast<double>(count));
        out.append_row(cur.ts_ms, std::move(row));
    }

    if (out.n_rows() == 0)
        throw Error("merge_streams: no overlap between counter and power streams");
    result.dataset = std::move(out);
    return result;
}

/// Reads a recorded counter table (ts_ms plus raw counter columns) back
/// into snapshots for replay.
inline std::vector<CounterSnapshot> counters_from_table(const Dataset& d) {
    std::vector<CounterSnapshot> out;
    out.reserve(d.n_rows());
    for (const auto& row : d.rows()) {
        CounterSnapshot snap;
        snap.ts_ms = row.ts_ms;
        for (std::size_t j = 0; j < d.n_variables(); ++j)
            snap.values[d.variables()[j].name] = row.values[j];
        out.push_back(std::move(snap));
    }
    return out;
}

} // namespace procwatt
