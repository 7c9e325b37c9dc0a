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

// Maximal information coefficient between two real vectors.
//
// Scans every grid shape (columns x rows) whose cell count stays within the
// budget B = n^exponent, equipartitions one axis by rank, and places the
// other axis's boundaries with a dynamic program over rank-order clumps
// (at most clump_factor * columns of them). The score of a grid is the
// mutual information of the induced cell distribution normalized by
// log(min(columns, rows)); the coefficient is the best score over all
// shapes and both axis orientations.
//
// All boundaries are rank statistics, so the result is exactly invariant
// under strictly increasing transforms of either input. Tied values are
// ordered by original index, which also makes the result deterministic.

#pragma once

#include "procwatt/error.hpp"
#include "procwatt/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

namespace procwatt {

struct MicOptions {
    double exponent = 0.6; // grid budget B(n) = n^exponent (floored at 4)
    int clump_factor = 15; // clumps available to the DP per column
    // Ceiling on clump count per grid shape; bounds the O(clumps^2) cost
    // table on very large inputs. Never binds below ~30k observations.
    std::size_t max_clumps = 2048;
};

namespace detail {

/// Indices ordered by (value, original index): a deterministic total order.
inline std::vector<std::uint32_t> rank_order(std::span<const double> values) {
    std::vector<std::uint32_t> order(values.size());
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (values[a] != values[b]) return values[a] < values[b];
        return a < b;
    });
    return order;
}

// Scratch space reused across grid shapes; the pairwise column-cost table
// dominates (O(clumps^2) doubles).
struct MicWorkspace {
    std::vector<double> ln_table;    // ln(i), with ln(0) := 0
    std::vector<std::uint32_t> cum;  // (m+1) x rows prefix counts
    std::vector<double> cost;        // (m+1) x (m+1) single-column costs
    std::vector<double> dp_prev, dp_cur;
    std::vector<std::uint16_t> row_of;
    std::vector<std::uint16_t> seq;

    void ensure_ln(std::size_t n) {
        if (ln_table.size() >= n + 1) return;
        const std::size_t old = ln_table.size();
        ln_table.resize(n + 1);
        for (std::size_t i = std::max<std::size_t>(old, 1); i <= n; ++i)
            ln_table[i] = std::log(static_cast<double>(i));
        ln_table[0] = 0.0;
    }
};

/// Best normalized mutual information over grids that equipartition the
/// `eq` axis and optimize the `opt` axis. Both arguments are rank orders.
inline double best_over_grids(const std::vector<std::uint32_t>& opt_order,
                              const std::vector<std::uint32_t>& eq_order, double budget,
                              const MicOptions& opt, MicWorkspace& ws) {
    const std::size_t n = opt_order.size();
    ws.ensure_ln(n);
    const auto& ln = ws.ln_table;

    double best = 0.0;
    ws.row_of.resize(n);
    ws.seq.resize(n);

    const std::size_t max_rows =
        std::min<std::size_t>(static_cast<std::size_t>(budget / 2.0), 65535);
    for (std::size_t rows = 2; rows <= max_rows; ++rows) {
        const std::size_t max_cols = static_cast<std::size_t>(budget / static_cast<double>(rows));
        if (max_cols < 2) break;

        // Equipartition the eq axis into `rows` rank bins.
        for (std::size_t r = 0; r < n; ++r)
            ws.row_of[eq_order[r]] = static_cast<std::uint16_t>(r * rows / n);
        // Row labels in opt-axis rank order.
        for (std::size_t r = 0; r < n; ++r) ws.seq[r] = ws.row_of[opt_order[r]];

        // Clump the opt axis: clump j covers rank positions
        // [j*n/m, (j+1)*n/m). Column cuts are restricted to these
        // boundaries. Needs at least max_cols clumps to reach every grid
        // width even when max_clumps binds.
        const std::size_t m = std::min(
            n, std::max(max_cols, std::min(static_cast<std::size_t>(opt.clump_factor) * max_cols,
                                           opt.max_clumps)));

        // Prefix row counts at every clump boundary.
        ws.cum.assign((m + 1) * rows, 0);
        {
            std::vector<std::uint32_t> running(rows, 0);
            std::size_t pos = 0;
            for (std::size_t j = 1; j <= m; ++j) {
                const std::size_t end = j * n / m;
                for (; pos < end; ++pos) ++running[ws.seq[pos]];
                std::copy(running.begin(), running.end(), ws.cum.begin() + j * rows);
            }
        }

        // Entropy of the row marginal, in nats.
        double h_rows = 0.0;
        {
            double acc = 0.0;
            const std::uint32_t* total = &ws.cum[m * rows];
            for (std::size_t r = 0; r < rows; ++r) acc += total[r] * ln[total[r]];
            h_rows = ln[n] - acc / static_cast<double>(n);
        }

        // cost(s, t) = points(s..t] * H(row distribution within (s..t]):
        // the conditional-entropy mass of one column spanning clumps s+1..t.
        ws.cost.assign((m + 1) * (m + 1), 0.0);
        for (std::size_t s = 0; s < m; ++s) {
            const std::uint32_t* cs = &ws.cum[s * rows];
            for (std::size_t t = s + 1; t <= m; ++t) {
                const std::uint32_t* ct = &ws.cum[t * rows];
                std::uint32_t total = 0;
                double acc = 0.0;
                for (std::size_t r = 0; r < rows; ++r) {
                    const std::uint32_t c = ct[r] - cs[r];
                    total += c;
                    acc += c * ln[c];
                }
                ws.cost[s * (m + 1) + t] = total * ln[total] - acc;
            }
        }

        // dp[t] after level j = least total column cost for points up to
        // clump t split into exactly j columns. More columns never raise
        // the cost, so level j also covers "at most j".
        const std::size_t levels = std::min(max_cols, m);
        ws.dp_prev.assign(m + 1, 0.0);
        ws.dp_cur.assign(m + 1, 0.0);
        for (std::size_t t = 1; t <= m; ++t) ws.dp_prev[t] = ws.cost[t];
        for (std::size_t j = 2; j <= levels; ++j) {
            for (std::size_t t = j; t <= m; ++t) {
                double lo = std::numeric_limits<double>::infinity();
                const double* cost_t = &ws.cost[t]; // cost[s][t] at stride m+1
                for (std::size_t s = j - 1; s < t; ++s) {
                    const double cand = ws.dp_prev[s] + cost_t[s * (m + 1)];
                    if (cand < lo) lo = cand;
                }
                ws.dp_cur[t] = lo;
            }
            const double mutual = h_rows - ws.dp_cur[m] / static_cast<double>(n);
            const double norm = mutual / ln[std::min(j, rows)];
            if (norm > best) best = norm;
            std::swap(ws.dp_prev, ws.dp_cur);
        }
    }
    return std::min(1.0, std::max(0.0, best));
}

} // namespace detail

/// MIC of two equal-length vectors (n >= 4). Returns 0 by convention when
/// either input is constant.
inline double mic(std::span<const double> x, std::span<const double> y, MicOptions opt = {}) {
    if (x.size() != y.size()) throw Error("mic: input lengths differ");
    const std::size_t n = x.size();
    if (n < 4) throw Error("mic: need at least 4 observations");
    if (!(opt.exponent > 0.0) || opt.clump_factor < 1)
        throw Error("mic: invalid options");

    const auto constant = [](std::span<const double> v) {
        for (double e : v)
            if (e != v[0]) return false;
        return true;
    };
    if (constant(x) || constant(y)) return 0.0;

    const double budget =
        std::max(std::pow(static_cast<double>(n), opt.exponent), 4.0);

    const auto ox = detail::rank_order(x);
    const auto oy = detail::rank_order(y);

    detail::MicWorkspace ws;
    const double a = detail::best_over_grids(ox, oy, budget, opt, ws);
    const double b = detail::best_over_grids(oy, ox, budget, opt, ws);
    return std::max(a, b);
}

} // namespace procwatt
