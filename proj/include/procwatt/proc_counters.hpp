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

// Resource-utilization sampling from the process-information filesystem.
//
// The canonical set is 29 counters: CPU jiffies by mode, memory and swap
// occupancy plus page faults, aggregate disk transfer counters, aggregate
// network traffic, interrupts, context switches, and the run/blocked
// process gauges. A counter whose source file is unreadable is absent from
// the snapshot, never zero. Parsers are pure string functions so recorded
// fixtures replay identically on any platform.

#pragma once

#include "procwatt/error.hpp"
#include "procwatt/numeric.hpp"

#include <cctype>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace procwatt {

struct CounterSnapshot {
    std::int64_t ts_ms = 0;
    std::map<std::string, double> values; // absent counters simply missing
};

/// The 29 canonical counter names, in emission order.
inline const std::vector<std::string>& canonical_counters() {
    static const std::vector<std::string> names = {
        // /proc/stat cpu jiffies
        "cpu_user", "cpu_nice", "cpu_system", "cpu_idle", "cpu_iowait", "cpu_irq",
        "cpu_softirq", "cpu_steal",
        // /proc/meminfo + /proc/vmstat
        "mem_total_kb", "mem_free_kb", "mem_buffers_kb", "mem_cached_kb", "swap_total_kb",
        "swap_free_kb", "page_faults",
        // /proc/diskstats, aggregated over whole devices
        "disk_reads", "disk_sectors_read", "disk_writes", "disk_sectors_written",
        "disk_io_ms", "disk_io_in_progress",
        // /proc/net/dev, aggregated over interfaces
        "net_rx_bytes", "net_rx_packets", "net_tx_bytes", "net_tx_packets",
        // /proc/stat system-wide
        "interrupts", "context_switches", "procs_running", "procs_blocked",
    };
    return names;
}

/// Cumulative counters are differenced per interval when merging; the rest
/// are point-in-time gauges.
inline bool counter_is_cumulative(std::string_view name) {
    static const std::vector<std::string> gauges = {
        "mem_total_kb", "mem_free_kb",  "mem_buffers_kb",     "mem_cached_kb",
        "swap_total_kb", "swap_free_kb", "disk_io_in_progress", "procs_running",
        "procs_blocked",
    };
    for (const auto& g : gauges)
        if (g == name) return false;
    return true;
}

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

inline void for_each_line(std::string_view content, auto&& fn) {
    std::size_t start = 0;
    while (start <= content.size()) {
        std::size_t end = content.find('\n', start);
        if (end == std::string_view::npos) end = content.size();
        auto line = content.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!line.empty()) fn(line);
        if (end == content.size()) break;
        start = end + 1;
    }
}

} // namespace detail

/// cpu jiffies by mode plus interrupts, context switches and process gauges.
inline std::map<std::string, double> parse_proc_stat(std::string_view content) {
    std::map<std::string, double> out;
    detail::for_each_line(content, [&](std::string_view line) {
        const auto f = detail::split_ws(line);
        if (f.empty()) return;
        if (f[0] == "cpu" && f.size() >= 5) {
            static const char* names[] = {"cpu_user",   "cpu_nice", "cpu_system",
                                          "cpu_idle",   "cpu_iowait", "cpu_irq",
                                          "cpu_softirq", "cpu_steal"};
            for (std::size_t i = 0; i < 8 && i + 1 < f.size(); ++i)
                if (auto v = parse_double(f[i + 1])) out[names[i]] = *v;
        } else if (f[0] == "intr" && f.size() >= 2) {
            if (auto v = parse_double(f[1])) out["interrupts"] = *v;
        } else if (f[0] == "ctxt" && f.size() >= 2) {
            if (auto v = parse_double(f[1])) out["context_switches"] = *v;
        } else if (f[0] == "procs_running" && f.size() >= 2) {
            if (auto v = parse_double(f[1])) out["procs_running"] = *v;
        } else if (f[0] == "procs_blocked" && f.size() >= 2) {
            if (auto v = parse_double(f[1])) out["procs_blocked"] = *v;
        }
    });
    return out;
}

inline std::map<std::string, double> parse_proc_meminfo(std::string_view content) {
    std::map<std::string, double> out;
    static const std::pair<const char*, const char*> wanted[] = {
        {"MemTotal:", "mem_total_kb"},   {"MemFree:", "mem_free_kb"},
        {"Buffers:", "mem_buffers_kb"},  {"Cached:", "mem_cached_kb"},
        {"SwapTotal:", "swap_total_kb"}, {"SwapFree:", "swap_free_kb"},
    };
    detail::for_each_line(content, [&](std::string_view line) {
        const auto f = detail::split_ws(line);
        if (f.size() < 2) return;
        for (const auto& [key, name] : wanted)
            if (f[0] == key)
                if (auto v = parse_double(f[1])) out[name] = *v;
    });
    return out;
}

inline std::map<std::string, double> parse_proc_vmstat(std::string_view content) {
    std::map<std::string, double> out;
    detail::for_each_line(content, [&](std::string_view line) {
        const auto f = detail::split_ws(line);
        if (f.size() >= 2 && f[0] == "pgfault")
            if (auto v = parse_double(f[1])) out["page_faults"] = *v;
    });
    return out;
}

/// Aggregates whole-device rows; partitions (a trailing-digit name whose
/// stem is another listed device) and loop/ram pseudo-devices are skipped
/// to avoid double counting.
inline std::map<std::string, double> parse_proc_diskstats(std::string_view content) {
    struct Row {
        std::string name;
        double reads, sectors_read, writes, sectors_written, in_progress, io_ms;
    };
    std::vector<Row> rows;
    detail::for_each_line(content, [&](std::string_view line) {
        const auto f = detail::split_ws(line);
        if (f.size() < 14) return;
        Row r;
        r.name = std::string(f[2]);
        const auto num = [&](std::size_t i) { return parse_double(f[i]).value_or(0.0); };
        r.reads = num(3);
        r.sectors_read = num(5);
        r.writes = num(7);
        r.sectors_written = num(9);
        r.in_progress = num(11);
        r.io_ms = num(12);
        rows.push_back(std::move(r));
    });

    const auto is_partition_of_listed = [&](const std::string& name) {
        std::size_t end = name.size();
        while (end > 0 && std::isdigit(static_cast<unsigned char>(name[end - 1]))) --end;
        if (end == name.size() || end == 0) return false;
        std::string stem = name.substr(0, end);
        if (!stem.empty() && stem.back() == 'p') stem.pop_back(); // nvme0n1p2 -> nvme0n1
        for (const auto& r : rows)
            if (r.name == stem) return true;
        return false;
    };

    std::map<std::string, double> out;
    bool any = false;
    double reads = 0, sread = 0, writes = 0, swritten = 0, inprog = 0, ioms = 0;
    for (const auto& r : rows) {
        if (r.name.rfind("loop", 0) == 0 || r.name.rfind("ram", 0) == 0) continue;
        if (is_partition_of_listed(r.name)) continue;
        any = true;
        reads += r.reads;
        sread += r.sectors_read;
        writes += r.writes;
        swritten += r.sectors_written;
        inprog += r.in_progress;
        ioms += r.io_ms;
    }
    if (any) {
        out["disk_reads"] = reads;
        out["disk_sectors_read"] = sread;
        out["disk_writes"] = writes;
        out["disk_sectors_written"] = swritten;
        out["disk_io_in_progress"] = inprog;
        out["disk_io_ms"] = ioms;
    }
    return out;
}

/// Sums traffic over every interface (loopback included: synthetic network
/// load runs over loopback).
inline std::map<std::string, double> parse_proc_netdev(std::string_view content) {
    std::map<std::string, double> out;
    double rxb = 0, rxp = 0, txb = 0, txp = 0;
    bool any = false;
    detail::for_each_line(content, [&](std::string_view line) {
        const std::size_t colon = line.find(':');
        if (colon == std::string_view::npos) return; // header lines
        const auto f = detail::split_ws(line.substr(colon + 1));
        if (f.size() < 10) return;
        any = true;
        rxb += parse_double(f[0]).value_or(0.0);
        rxp += parse_double(f[1]).value_or(0.0);
        txb += parse_double(f[8]).value_or(0.0);
        txp += parse_double(f[9]).value_or(0.0);
    });
    if (any) {
        out["net_rx_bytes"] = rxb;
        out["net_rx_packets"] = rxp;
        out["net_tx_bytes"] = txb;
        out["net_tx_packets"] = txp;
    }
    return out;
}

namespace detail {

inline bool read_file(const std::string& path, std::string& out) {
    std::ifstream in(path);
    if (!in) return false;
    std::ostringstream ss;
    ss << in.rdbuf();
    out = ss.str();
    return true;
}

} // namespace detail

/// One snapshot of whatever canonical counters the running system exposes.
/// Throws when the process-information tree is entirely unavailable (use
/// replay mode on such platforms).
inline CounterSnapshot sample_counters(const std::string& proc_root = "/proc") {
    CounterSnapshot snap;
    snap.ts_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                     std::chrono::system_clock::now().time_since_epoch())
                     .count();
    std::string content;
    bool any = false;
    if (detail::read_file(proc_root + "/stat", content)) {
        any = true;
        snap.values.merge(parse_proc_stat(content));
    }
    if (detail::read_file(proc_root + "/meminfo", content)) {
        any = true;
        snap.values.merge(parse_proc_meminfo(content));
    }
    if (detail::read_file(proc_root + "/vmstat", content)) {
        any = true;
        snap.values.merge(parse_proc_vmstat(content));
    }
    if (detail::read_file(proc_root + "/diskstats", content)) {
        any = true;
        snap.values.merge(parse_proc_diskstats(content));
    }
    if (detail::read_file(proc_root + "/net/dev", content)) {
        any = true;
        snap.values.merge(parse_proc_netdev(content));
    }
    if (!any)
        throw Error("cannot read " + proc_root +
                    ": live sampling unavailable, use --replay with recorded fixtures");
    return snap;
}

/// Names of cumulative counters that moved backwards between consecutive
/// snapshots (counter resets).
inline std::vector<std::string> detect_counter_resets(const CounterSnapshot& prev,
                                                      const CounterSnapshot& next) {
    std::vector<std::string> out;
    for (const auto& [name, value] : next.values) {
        if (!counter_is_cumulative(name)) continue;
        const auto it = prev.values.find(name);
        if (it != prev.values.end() && value < it->second) out.push_back(name);
    }
    return out;
}

} // namespace procwatt
