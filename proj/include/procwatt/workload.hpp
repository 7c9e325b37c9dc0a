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

// Synthetic workload schedule and built-in load generators.
//
// The generated plan sweeps each resource on its own first:
//   CPU:    target utilization 0..100% in steps of 5, crossed with
//           process counts 2i-1 for i = 1..n_cpu
//   memory: 256(i+1) MB for i = 1..memory_mb/256 - 1  (512 MB ... memory_mb)
//   disk:   2i-1 GB for i = 1..17                     (1 GB ... 33 GB)
//   I/O:    10i concurrent copier tasks for i = 1..10
// and can then append the full cross product of those levels. Every phase
// defaults to 120 s. Generated phases leave the network generator off; a
// hand-written plan file can enable it (loopback bulk transfer).

#pragma once

#include "procwatt/dataset.hpp"
#include "procwatt/error.hpp"
#include "procwatt/numeric.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#if defined(__unix__) || defined(__APPLE__)
#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <sys/statvfs.h>
#include <unistd.h>
#define PROCWATT_HAVE_WORKLOAD_NET 1
#endif

namespace procwatt {

inline constexpr double kDefaultPhaseSeconds = 120.0;

struct WorkloadPhase {
    double duration_s = kDefaultPhaseSeconds;
    double cpu_target_pct = 0.0; // 0..100
    int cpu_processes = 0;
    int memory_mb = 0;
    int disk_gb = 0;
    int io_processes = 0;
    bool network = false;
};

struct WorkloadPlan {
    std::vector<WorkloadPhase> phases;
};

struct PlanCounts {
    std::size_t cpu = 0;
    std::size_t memory = 0;
    std::size_t disk = 0;
    std::size_t io = 0;
    std::size_t cross = 0;
    std::size_t total = 0;
};

/// Closed-form phase counts for the generated schedule.
inline PlanCounts workload_plan_counts(int n_cpu, int memory_mb, bool include_cross) {
    if (n_cpu < 1) throw Error("workload plan: n_cpu must be >= 1");
    if (memory_mb < 512) throw Error("workload plan: memory must be >= 512 MB");
    PlanCounts c;
    c.cpu = 21u * static_cast<std::size_t>(n_cpu);
    c.memory = static_cast<std::size_t>(memory_mb / 256 - 1);
    c.disk = 17;
    c.io = 10;
    c.cross = include_cross ? c.cpu * c.memory * c.disk * c.io : 0;
    c.total = c.cpu + c.memory + c.disk + c.io + c.cross;
    return c;
}

inline WorkloadPlan generate_workload_plan(int n_cpu, int memory_mb, bool include_cross = true,
                                           double phase_seconds = kDefaultPhaseSeconds) {
    const PlanCounts counts = workload_plan_counts(n_cpu, memory_mb, include_cross);
    if (!(phase_seconds > 0.0)) throw Error("workload plan: phase duration must be > 0");

    WorkloadPlan plan;
    plan.phases.reserve(counts.total);

    struct CpuLevel {
        double pct;
        int procs;
    };
    std::vector<CpuLevel> cpu_levels;
    for (int pct = 0; pct <= 100; pct += 5)
        for (int i = 1; i <= n_cpu; ++i)
            cpu_levels.push_back(CpuLevel{static_cast<double>(pct), 2 * i - 1});
    std::vector<int> memory_levels;
    for (int i = 1; i <= memory_mb / 256 - 1; ++i) memory_levels.push_back(256 * (i + 1));
    std::vector<int> disk_levels;
    for (int i = 1; i <= 17; ++i) disk_levels.push_back(2 * i - 1);
    std::vector<int> io_levels;
    for (int i = 1; i <= 10; ++i) io_levels.push_back(10 * i);

    for (const auto& c : cpu_levels) {
        WorkloadPhase p;
        p.duration_s = phase_seconds;
        p.cpu_target_pct = c.pct;
        p.cpu_processes = c.procs;
        plan.phases.push_back(p);
    }
    for (int mb : memory_levels) {
        WorkloadPhase p;
        p.duration_s = phase_seconds;
        p.memory_mb = mb;
        plan.phases.push_back(p);
    }
    for (int gb : disk_levels) {
        WorkloadPhase p;
        p.duration_s = phase_seconds;
        p.disk_gb = gb;
        plan.phases.push_back(p);
    }
    for (int procs : io_levels) {
        WorkloadPhase p;
        p.duration_s = phase_seconds;
        p.io_processes = procs;
        plan.phases.push_back(p);
    }
    if (include_cross) {
        for (const auto& c : cpu_levels)
            for (int mb : memory_levels)
                for (int gb : disk_levels)
                    for (int procs : io_levels) {
                        WorkloadPhase p;
                        p.duration_s = phase_seconds;
                        p.cpu_target_pct = c.pct;
                        p.cpu_processes = c.procs;
                        p.memory_mb = mb;
                        p.disk_gb = gb;
                        p.io_processes = procs;
                        plan.phases.push_back(p);
                    }
    }
    return plan;
}

// Plan files reuse the tabular format: one row per phase.
inline const std::vector<std::string>& plan_columns() {
    static const std::vector<std::string> cols = {
        "duration_s", "cpu_target_pct", "cpu_processes", "memory_mb",
        "disk_gb",    "io_processes",   "network"};
    return cols;
}

inline void write_plan(const WorkloadPlan& plan, const std::string& path) {
    std::vector<VariableDescriptor> vars;
    for (const auto& c : plan_columns()) vars.push_back({c, VarKind::Counter, ""});
    Dataset d(vars);
    std::int64_t i = 0;
    for (const auto& p : plan.phases)
        d.append_row(i++, {p.duration_s, p.cpu_target_pct, static_cast<double>(p.cpu_processes),
                           static_cast<double>(p.memory_mb), static_cast<double>(p.disk_gb),
                           static_cast<double>(p.io_processes), p.network ? 1.0 : 0.0});
    write_table(d, path);
}

inline WorkloadPlan load_plan(const std::string& path) {
    const Dataset d = load_table(path);
    for (const auto& c : plan_columns())
        if (!d.has_variable(c)) throw Error(path + ": plan file missing column '" + c + "'");
    WorkloadPlan plan;
    for (const auto& row : d.rows()) {
        WorkloadPhase p;
        p.duration_s = row.values[d.variable_index("duration_s")];
        p.cpu_target_pct = row.values[d.variable_index("cpu_target_pct")];
        p.cpu_processes = static_cast<int>(row.values[d.variable_index("cpu_processes")]);
        p.memory_mb = static_cast<int>(row.values[d.variable_index("memory_mb")]);
        p.disk_gb = static_cast<int>(row.values[d.variable_index("disk_gb")]);
        p.io_processes = static_cast<int>(row.values[d.variable_index("io_processes")]);
        p.network = row.values[d.variable_index("network")] != 0.0;
        if (!(p.duration_s > 0.0)) throw Error(path + ": phase duration must be > 0");
        if (p.cpu_target_pct < 0.0 || p.cpu_target_pct > 100.0)
            throw Error(path + ": cpu_target_pct must be within [0, 100]");
        plan.phases.push_back(p);
    }
    return plan;
}

inline std::string format_plan(const WorkloadPlan& plan) {
    std::string out = "phase  dur_s  cpu%  cpu_procs  mem_mb  disk_gb  io_procs  net\n";
    std::int64_t i = 0;
    for (const auto& p : plan.phases) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%5lld  %5.0f  %4.0f  %9d  %6d  %7d  %8d  %3s\n",
                      static_cast<long long>(i++), p.duration_s, p.cpu_target_pct,
                      p.cpu_processes, p.memory_mb, p.disk_gb, p.io_processes,
                      p.network ? "on" : "off");
        out += buf;
    }
    return out;
}

struct RunOptions {
    bool dry_run = false;
    std::string scratch_dir = "/tmp";
    std::ostream* log = nullptr;
};

struct RunReport {
    std::size_t phases_run = 0;
    std::size_t phases_skipped = 0;
    std::vector<std::string> warnings;
};

namespace detail {

using Clock = std::chrono::steady_clock;

/// Duty-cycled spinner: busy for pct% of every 100 ms slice until deadline.
inline void cpu_load(double pct, Clock::time_point deadline, std::atomic<bool>& stop) {
    const auto slice = std::chrono::milliseconds(100);
    volatile double sink = 0.0;
    while (Clock::now() < deadline && !stop.load(std::memory_order_relaxed)) {
        const auto slice_start = Clock::now();
        const auto busy_until =
            slice_start + std::chrono::duration_cast<Clock::duration>(slice * (pct / 100.0));
        while (Clock::now() < busy_until) {
            for (int i = 0; i < 1000; ++i) sink = sink + std::sqrt(static_cast<double>(i));
        }
        const auto slice_end = std::min(slice_start + slice, deadline);
        if (Clock::now() < slice_end) std::this_thread::sleep_until(slice_end);
    }
}

/// Allocates and keeps touching the pages until deadline.
inline void memory_load(int mb, Clock::time_point deadline, std::atomic<bool>& stop) {
    constexpr std::size_t page = 4096;
    std::vector<char> block(static_cast<std::size_t>(mb) * 1024 * 1024);
    char v = 1;
    while (Clock::now() < deadline && !stop.load(std::memory_order_relaxed)) {
        for (std::size_t i = 0; i < block.size(); i += page) block[i] = v;
        ++v;
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
}

/// Sequential writer: writes `gb` gigabytes in 1 MB blocks, rewinding and
/// repeating until deadline. The file is removed on exit.
inline void disk_load(int gb, const std::string& dir, int tag, Clock::time_point deadline,
                      std::atomic<bool>& stop) {
    const std::string path = dir + "/procwatt_disk_" + to_text(static_cast<std::int64_t>(tag));
    std::vector<char> block(1024 * 1024, 'w');
    const std::size_t blocks = static_cast<std::size_t>(gb) * 1024;
    while (Clock::now() < deadline && !stop.load(std::memory_order_relaxed)) {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) break;
        for (std::size_t b = 0; b < blocks; ++b) {
            out.write(block.data(), static_cast<std::streamsize>(block.size()));
            if (!out || Clock::now() >= deadline || stop.load(std::memory_order_relaxed)) break;
        }
    }
    std::error_code ec;
    std::filesystem::remove(path, ec);
}

/// Memory <-> disk copier: writes a buffer out and reads it back in a loop.
inline void io_load(const std::string& dir, int tag, Clock::time_point deadline,
                    std::atomic<bool>& stop) {
    const std::string path = dir + "/procwatt_io_" + to_text(static_cast<std::int64_t>(tag));
    std::vector<char> buffer(4 * 1024 * 1024, 'x');
    while (Clock::now() < deadline && !stop.load(std::memory_order_relaxed)) {
        {
            std::ofstream out(path, std::ios::binary | std::ios::trunc);
            if (!out) break;
            out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
        }
        {
            std::ifstream in(path, std::ios::binary);
            if (!in) break;
            in.read(buffer.data(), static_cast<std::streamsize>(buffer.size()));
        }
    }
    std::error_code ec;
    std::filesystem::remove(path, ec);
}

#ifdef PROCWATT_HAVE_WORKLOAD_NET
/// Loopback bulk transfer: a discarding server and a streaming client.
inline void network_load(Clock::time_point deadline, std::atomic<bool>& stop) {
    const int server = ::socket(AF_INET, SOCK_STREAM, 0);
    if (server < 0) return;
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    if (::bind(server, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
        ::listen(server, 1) != 0) {
        ::close(server);
        return;
    }
    socklen_t len = sizeof(addr);
    ::getsockname(server, reinterpret_cast<sockaddr*>(&addr), &len);

    std::thread sink([&] {
        const int conn = ::accept(server, nullptr, nullptr);
        if (conn < 0) return;
        char buf[65536];
        while (::read(conn, buf, sizeof(buf)) > 0) {
        }
        ::close(conn);
    });

    const int client = ::socket(AF_INET, SOCK_STREAM, 0);
    if (client >= 0 && ::connect(client, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0) {
        std::vector<char> buf(65536, 'n');
        while (Clock::now() < deadline && !stop.load(std::memory_order_relaxed)) {
            if (::write(client, buf.data(), buf.size()) <= 0) break;
        }
    }
    if (client >= 0) ::close(client);
    ::shutdown(server, SHUT_RDWR);
    ::close(server);
    sink.join();
}
#endif

inline std::size_t free_disk_bytes(const std::string& dir) {
#ifdef PROCWATT_HAVE_WORKLOAD_NET
    struct statvfs st {};
    if (statvfs(dir.c_str(), &st) == 0)
        return static_cast<std::size_t>(st.f_bavail) * st.f_frsize;
#endif
    (void)dir;
    return static_cast<std::size_t>(-1);
}

inline std::size_t available_memory_bytes() {
#if defined(_SC_AVPHYS_PAGES) && defined(_SC_PAGESIZE)
    const long pages = sysconf(_SC_AVPHYS_PAGES);
    const long page_size = sysconf(_SC_PAGESIZE);
    if (pages > 0 && page_size > 0)
        return static_cast<std::size_t>(pages) * static_cast<std::size_t>(page_size);
#endif
    return static_cast<std::size_t>(-1);
}

} // namespace detail

/// Executes each phase for its duration with the built-in generators.
/// Phases whose memory or disk demand cannot be satisfied are skipped with
/// a warning. Generators run on their own threads, isolated from any
/// concurrent sampler.
inline RunReport run_workload(const WorkloadPlan& plan, const RunOptions& opts = {}) {
    RunReport report;
    if (opts.dry_run) {
        if (opts.log) *opts.log << format_plan(plan);
        return report;
    }

    int tag = 0;
    for (std::size_t pi = 0; pi < plan.phases.size(); ++pi) {
        const auto& phase = plan.phases[pi];

        if (phase.memory_mb > 0) {
            const std::size_t need = static_cast<std::size_t>(phase.memory_mb) << 20;
            const std::size_t avail = detail::available_memory_bytes();
            if (avail != static_cast<std::size_t>(-1) && need > avail - avail / 10) {
                report.warnings.push_back("phase " + to_text(static_cast<std::int64_t>(pi)) +
                                          " skipped: needs " +
                                          to_text(static_cast<std::int64_t>(phase.memory_mb)) +
                                          " MB of memory");
                ++report.phases_skipped;
                continue;
            }
        }
        if (phase.disk_gb > 0 || phase.io_processes > 0) {
            const std::size_t need =
                static_cast<std::size_t>(std::max(phase.disk_gb, 0)) * (1u << 30) +
                static_cast<std::size_t>(std::max(phase.io_processes, 0)) * (4u << 20);
            const std::size_t avail = detail::free_disk_bytes(opts.scratch_dir);
            if (avail != static_cast<std::size_t>(-1) && need > avail / 2) {
                report.warnings.push_back("phase " + to_text(static_cast<std::int64_t>(pi)) +
                                          " skipped: needs " +
                                          to_text(static_cast<std::int64_t>(need >> 20)) +
                                          " MB of scratch space");
                ++report.phases_skipped;
                continue;
            }
        }

        const auto deadline =
            detail::Clock::now() +
            std::chrono::duration_cast<detail::Clock::duration>(
                std::chrono::duration<double>(phase.duration_s));
        std::atomic<bool> stop{false};
        std::vector<std::thread> workers;

        for (int i = 0; i < phase.cpu_processes; ++i)
            workers.emplace_back(detail::cpu_load, phase.cpu_target_pct, deadline,
                                 std::ref(stop));
        if (phase.memory_mb > 0)
            workers.emplace_back(detail::memory_load, phase.memory_mb, deadline,
                                 std::ref(stop));
        if (phase.disk_gb > 0)
            workers.emplace_back(detail::disk_load, phase.disk_gb, opts.scratch_dir, tag++,
                                 deadline, std::ref(stop));
        for (int i = 0; i < phase.io_processes; ++i)
            workers.emplace_back(detail::io_load, opts.scratch_dir, tag++, deadline,
                                 std::ref(stop));
#ifdef PROCWATT_HAVE_WORKLOAD_NET
        if (phase.network)
            workers.emplace_back(detail::network_load, deadline, std::ref(stop));
#endif

        // A pure-idle phase (all generators off) still occupies its slot.
        std::this_thread::sleep_until(deadline);
        stop.store(true);
        for (auto& w : workers) w.join();
        ++report.phases_run;
    }
    return report;
}

} // namespace procwatt
