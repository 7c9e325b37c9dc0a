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

// Power-meter stream: one reading per line, ASCII "<epoch_ms> <watts>".
// Accepted from a file (replay) or a TCP endpoint (a live acquisition
// module). Timestamps must increase strictly; watts must be finite and
// non-negative.

#pragma once

#include "procwatt/error.hpp"
#include "procwatt/numeric.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#if defined(__unix__) || defined(__APPLE__)
#include <arpa/inet.h>
#include <netdb.h>
#include <sys/socket.h>
#include <unistd.h>
#define PROCWATT_HAVE_SOCKETS 1
#endif

namespace procwatt {

struct PowerReading {
    std::int64_t ts_ms = 0;
    double watts = 0.0;
};

inline std::vector<PowerReading> parse_power_stream(std::istream& in) {
    std::vector<PowerReading> out;
    std::string line;
    std::size_t line_no = 0;
    std::int64_t prev_ts = std::numeric_limits<std::int64_t>::min();
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view sv(line);
        if (!sv.empty() && sv.back() == '\r') sv.remove_suffix(1);
        if (sv.empty()) continue;

        const std::size_t space = sv.find(' ');
        const auto fail = [&](const std::string& why) {
            throw Error("power stream line " + to_text(static_cast<std::int64_t>(line_no)) +
                        ": " + why + ": '" + std::string(sv) + "'");
        };
        if (space == std::string_view::npos) fail("expected '<epoch_ms> <watts>'");
        const auto ts = parse_int64(sv.substr(0, space));
        const auto watts = parse_double(sv.substr(space + 1));
        if (!ts) fail("bad timestamp");
        if (!watts || !std::isfinite(*watts)) fail("bad watts value");
        if (*watts < 0.0) fail("negative watts");
        if (*ts <= prev_ts) fail("out-of-order timestamp");
        prev_ts = *ts;
        out.push_back(PowerReading{*ts, *watts});
    }
    return out;
}

inline std::vector<PowerReading> read_power_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open power stream: " + path);
    try {
        return parse_power_stream(in);
    } catch (const Error& e) {
        throw Error(path + ": " + e.what());
    }
}

inline void write_power_file(const std::vector<PowerReading>& readings,
                             const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write power stream: " + path);
    for (const auto& r : readings) out << to_text(r.ts_ms) << ' ' << to_text(r.watts) << '\n';
}

#ifdef PROCWATT_HAVE_SOCKETS

/// Connects to a live acquisition endpoint and reads the line protocol
/// until the peer closes. Intended to run on its own thread so sampling
/// never blocks on the meter.
inline std::vector<PowerReading> read_power_tcp(const std::string& host, int port) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    const std::string service = to_text(static_cast<std::int64_t>(port));
    if (getaddrinfo(host.c_str(), service.c_str(), &hints, &res) != 0 || !res)
        throw Error("cannot resolve power source " + host + ":" + service);

    int fd = -1;
    for (addrinfo* ai = res; ai; ai = ai->ai_next) {
        fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (fd < 0) continue;
        if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
        ::close(fd);
        fd = -1;
    }
    freeaddrinfo(res);
    if (fd < 0) throw Error("cannot connect to power source " + host + ":" + service);

    std::string buffer;
    char chunk[4096];
    while (true) {
        const ssize_t got = ::read(fd, chunk, sizeof(chunk));
        if (got <= 0) break;
        buffer.append(chunk, static_cast<std::size_t>(got));
        if (buffer.size() > (1u << 28)) break; // bounded buffering
    }
    ::close(fd);

    std::istringstream in(buffer);
    return parse_power_stream(in);
}

#endif // PROCWATT_HAVE_SOCKETS

} // namespace procwatt
