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

// Locale-independent number <-> text conversion and a deterministic RNG.
// Every textual artifact the toolkit emits goes through to_text() so that
// identical inputs always produce byte-identical files, and parsing always
// round-trips what to_text() wrote.

#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace procwatt {

/// Shortest decimal text that parses back to exactly the same double.
inline std::string to_text(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string to_text(std::int64_t v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

/// Parses a full field as a double (plain or scientific notation).
/// Rejects partial parses ("1.5x") and empty fields.
inline std::optional<double> parse_double(std::string_view s) {
    if (s.empty()) return std::nullopt;
    double v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

inline std::optional<std::int64_t> parse_int64(std::string_view s) {
    if (s.empty()) return std::nullopt;
    std::int64_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

inline std::vector<std::string_view> split_fields(std::string_view line, char delim = ',') {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(delim, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

// Deterministic random source. mt19937_64 output is pinned by the standard,
// and all derived draws below avoid std::*_distribution (whose output is
// implementation-defined), so a seed reproduces the same stream everywhere.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t below(std::uint64_t n) { return engine_() % n; }

    /// Standard normal via the polar (Marsaglia) method.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        have_spare_ = true;
        return u * m;
    }

    /// Standard normal draw rejected until it lands strictly inside (0, 1).
    double gaussian_unit_interval() {
        while (true) {
            const double z = gaussian();
            if (z > 0.0 && z < 1.0) return z;
        }
    }

    /// In-place Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

struct MeanSd {
    double mean = 0.0;
    double sd = 0.0;
    std::size_t n = 0;
};

/// Welford accumulation; sd uses the n-1 denominator. NaN entries are
/// skipped (callers use NaN for excluded samples).
template <typename Range>
MeanSd mean_sd(const Range& values) {
    MeanSd out;
    double m2 = 0.0;
    for (double v : values) {
        if (std::isnan(v)) continue;
        ++out.n;
        const double delta = v - out.mean;
        out.mean += delta / static_cast<double>(out.n);
        m2 += delta * (v - out.mean);
    }
    out.sd = out.n > 1 ? std::sqrt(m2 / static_cast<double>(out.n - 1)) : 0.0;
    return out;
}

} // namespace procwatt
