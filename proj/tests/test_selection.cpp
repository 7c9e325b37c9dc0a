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

#include "procwatt/mic.hpp"
#include "procwatt/pipeline.hpp"
#include "procwatt/selection.hpp"

#include "test_support.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

using namespace procwatt;
using testsupport::make_dataset;
using testsupport::TempDir;

namespace {

std::vector<double> uniform_vector(Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    for (auto& e : v) e = rng.uniform01();
    return v;
}

// Exhaustive reference for the grid search: same rank equipartition of one
// axis, but every contiguous partition of the other axis is enumerated
// instead of running the dynamic program. Both implementations use
// singleton clumps here (clump_factor large enough), so the candidate sets
// coincide and the scores must match exactly.
double mic_bruteforce(const std::vector<double>& x, const std::vector<double>& y,
                      double exponent) {
    const std::size_t n = x.size();
    const double budget = std::max(std::pow(static_cast<double>(n), exponent), 4.0);

    const auto order_of = [](const std::vector<double>& v) {
        std::vector<std::size_t> idx(v.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            if (v[a] != v[b]) return v[a] < v[b];
            return a < b;
        });
        return idx;
    };

    double best = 0.0;
    const auto run_orientation = [&](const std::vector<double>& opt,
                                     const std::vector<double>& eq) {
        const auto opt_order = order_of(opt);
        const auto eq_order = order_of(eq);
        for (std::size_t rows = 2; rows <= static_cast<std::size_t>(budget / 2); ++rows) {
            const std::size_t max_cols =
                static_cast<std::size_t>(budget / static_cast<double>(rows));
            if (max_cols < 2) break;
            std::vector<std::size_t> row_of(n);
            for (std::size_t r = 0; r < n; ++r) row_of[eq_order[r]] = r * rows / n;
            std::vector<std::size_t> seq(n);
            for (std::size_t r = 0; r < n; ++r) seq[r] = row_of[opt_order[r]];

            std::vector<double> row_total(rows, 0.0);
            for (auto r : seq) row_total[r] += 1.0;
            double h_rows = 0.0;
            for (double c : row_total)
                if (c > 0) h_rows -= (c / n) * std::log(c / n);

            // Enumerate cut positions recursively.
            std::vector<std::size_t> cuts;
            const std::function<void(std::size_t)> recurse = [&](std::size_t from) {
                if (cuts.size() + 1 >= 2) { // at least 2 columns
                    // Evaluate the partition defined by cuts + [n].
                    double cost = 0.0;
                    std::size_t start = 0;
                    std::vector<double> cnt(rows);
                    const auto column_cost = [&](std::size_t b, std::size_t e) {
                        std::fill(cnt.begin(), cnt.end(), 0.0);
                        for (std::size_t i = b; i < e; ++i) cnt[seq[i]] += 1.0;
                        const double total = static_cast<double>(e - b);
                        double h = 0.0;
                        for (double c : cnt)
                            if (c > 0) h -= (c / total) * std::log(c / total);
                        return total * h;
                    };
                    for (auto c : cuts) {
                        cost += column_cost(start, c);
                        start = c;
                    }
                    cost += column_cost(start, n);
                    const double mutual = h_rows - cost / static_cast<double>(n);
                    const std::size_t cols = cuts.size() + 1;
                    const double norm =
                        mutual / std::log(static_cast<double>(std::min(cols, rows)));
                    best = std::max(best, norm);
                }
                if (cuts.size() + 1 >= max_cols) return;
                for (std::size_t c = from; c < n; ++c) {
                    cuts.push_back(c);
                    recurse(c + 1);
                    cuts.pop_back();
                }
            };
            recurse(1);
        }
    };
    run_orientation(x, y);
    run_orientation(y, x);
    return std::min(1.0, std::max(0.0, best));
}

} // namespace

TEST_CASE("mic of an exact functional relation is essentially 1") {
    Rng rng(101);
    const std::size_t n = 1000;
    auto x = uniform_vector(rng, n);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i];
    CHECK(mic(x, y) >= 0.99);
}

TEST_CASE("mic of a constant input is 0 by convention") {
    Rng rng(5);
    const auto y = uniform_vector(rng, 100);
    const std::vector<double> x(100, 3.25);
    CHECK(mic(x, y) == 0.0);
    CHECK(mic(y, x) == 0.0);
}

TEST_CASE("mic rejects bad inputs") {
    const std::vector<double> a{1, 2, 3, 4};
    const std::vector<double> b{1, 2, 3};
    CHECK_THROWS_AS(mic(a, b), Error);
    CHECK_THROWS_AS(mic(b, b), Error); // n < 4
}

TEST_CASE("mic null distribution stays small over permutation re-draws") {
    Rng rng(2024);
    const std::size_t n = 1000;
    const auto x = uniform_vector(rng, n);
    auto y = uniform_vector(rng, n);
    double worst = 0.0;
    for (int redraw = 0; redraw < 100; ++redraw) {
        rng.shuffle(y);
        worst = std::max(worst, mic(x, y));
    }
    CHECK(worst <= 0.2);
}

TEST_CASE("mic is symmetric") {
    Rng rng(8);
    for (int trial = 0; trial < 5; ++trial) {
        const std::size_t n = 50 + rng.below(200);
        auto x = uniform_vector(rng, n);
        auto y = uniform_vector(rng, n);
        if (trial % 2 == 0)
            for (std::size_t i = 0; i < n; ++i) y[i] = std::sin(6.0 * x[i]) + 0.1 * y[i];
        CHECK(mic(x, y) == mic(y, x)); // both orientations run either way
    }
}

TEST_CASE("mic stays within [0, 1] on adversarial shapes") {
    Rng rng(9);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 4 + rng.below(120);
        std::vector<double> x(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            switch (trial % 4) {
            case 0:
                x[i] = rng.uniform01();
                y[i] = rng.gaussian();
                break;
            case 1: // heavy ties
                x[i] = static_cast<double>(rng.below(3));
                y[i] = static_cast<double>(rng.below(2));
                break;
            case 2:
                x[i] = static_cast<double>(i);
                y[i] = (i % 7 == 0) ? 100.0 : 0.0;
                break;
            default:
                x[i] = rng.gaussian() * 1e9;
                y[i] = x[i] * x[i] + rng.gaussian();
            }
        }
        const double v = mic(x, y);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("mic is exactly invariant under strictly increasing transforms") {
    Rng rng(12);
    const std::size_t n = 300;
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = static_cast<double>(rng.below(40)); // includes ties
        y[i] = std::cos(x[i]) + rng.gaussian() * 0.1;
    }
    std::vector<double> fx(n);
    for (std::size_t i = 0; i < n; ++i) fx[i] = std::exp(x[i] * 0.1) + 5.0;
    const double a = mic(x, y);
    const double b = mic(fx, y);
    CHECK(a == b); // rank-identical inputs, bit-identical result
}

TEST_CASE("mic dynamic program matches exhaustive partition search on small inputs") {
    Rng rng(77);
    MicOptions opt;
    opt.exponent = 1.0;      // richer grids at tiny n
    opt.clump_factor = 1000; // singleton clumps in the implementation too
    for (int trial = 0; trial < 12; ++trial) {
        const std::size_t n = 8 + rng.below(7); // 8..14
        std::vector<double> x(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = rng.uniform01();
            y[i] = (trial % 3 == 0) ? x[i] * x[i] : rng.uniform01();
        }
        const double dp = mic(x, y, opt);
        const double brute = mic_bruteforce(x, y, opt.exponent);
        CHECK(dp == Catch::Approx(brute).margin(1e-12));
    }
}

TEST_CASE("select_variables keeps the exact copy and drops pure noise") {
    Rng rng(31);
    const std::size_t n = 6000;
    auto power = uniform_vector(rng, n);
    for (auto& v : power) v = 40.0 + 200.0 * v;
    const auto v1 = power; // exact copy
    const auto v2 = uniform_vector(rng, n);
    const Dataset d = make_dataset({"v1", "v2", "power_w"}, {v1, v2, power});

    const auto report = select_variables(d, "power_w", 0.10);
    REQUIRE(report.scores.size() == 2);
    CHECK(report.selected == std::vector<std::string>{"v1"});
    CHECK(report.scores.front().variable == "v1");
    CHECK(report.scores.front().mic >= 0.99);
}

TEST_CASE("select_variables with threshold 0 selects everything") {
    Rng rng(32);
    const std::size_t n = 64;
    const Dataset d = make_dataset(
        {"a", "b", "power_w"},
        {uniform_vector(rng, n), uniform_vector(rng, n), uniform_vector(rng, n)});
    const auto report = select_variables(d, "power_w", 0.0);
    CHECK(report.selected.size() == 2);
}

TEST_CASE("select_variables requires a power-tagged target") {
    Rng rng(33);
    const std::size_t n = 32;
    const Dataset d =
        make_dataset({"a", "b"}, {uniform_vector(rng, n), uniform_vector(rng, n)});
    CHECK_THROWS_AS(select_variables(d, "b", 0.1), Error);
    CHECK_THROWS_AS(select_variables(d, "missing", 0.1), Error);
}

TEST_CASE("select_variables finds planted dependencies above the threshold") {
    Rng rng(34);
    const std::size_t n = 6000;
    const auto cpu = uniform_vector(rng, n);
    const auto disk = uniform_vector(rng, n);
    std::vector<std::vector<double>> cols{cpu, disk};
    std::vector<std::string> names{"cpu", "disk"};
    for (int j = 0; j < 5; ++j) {
        cols.push_back(uniform_vector(rng, n));
        names.push_back("noise" + std::to_string(j));
    }
    std::vector<double> power(n);
    for (std::size_t i = 0; i < n; ++i)
        power[i] = 2.0 * cpu[i] + 0.5 * disk[i] + 0.01 * rng.gaussian();
    cols.push_back(power);
    names.push_back("power_w");

    const auto report = select_variables(make_dataset(names, cols), "power_w", 0.10);
    const auto& sel = report.selected;
    CHECK(std::find(sel.begin(), sel.end(), "cpu") != sel.end());
    CHECK(std::find(sel.begin(), sel.end(), "disk") != sel.end());
    for (int j = 0; j < 5; ++j)
        CHECK(std::find(sel.begin(), sel.end(), "noise" + std::to_string(j)) == sel.end());
}

TEST_CASE("selection report bytes are deterministic") {
    Rng rng(35);
    const std::size_t n = 500;
    const Dataset d = make_dataset(
        {"a", "b", "power_w"},
        {uniform_vector(rng, n), uniform_vector(rng, n), uniform_vector(rng, n)});
    const auto r1 = select_variables(d, "power_w", 0.10);
    const auto r2 = select_variables(d, "power_w", 0.10);
    TempDir tmp;
    write_selection_report(r1, tmp.file("r1.csv"));
    write_selection_report(r2, tmp.file("r2.csv"));
    CHECK(testsupport::read_file(tmp.file("r1.csv")) ==
          testsupport::read_file(tmp.file("r2.csv")));
}

TEST_CASE("ks test does not reject genuine Gaussian samples") {
    int rejections = 0;
    const int reps = 40;
    for (int rep = 0; rep < reps; ++rep) {
        Rng rng(9000 + rep);
        std::vector<double> v(10000);
        for (auto& e : v) e = rng.gaussian();
        if (ks_gaussian_test(v).gaussian_rejected_at_5pct) ++rejections;
    }
    CHECK(rejections <= reps / 20); // >= 95% accepted
}

TEST_CASE("ks test rejects a well-separated bimodal mixture") {
    Rng rng(41);
    std::vector<double> v(10000);
    for (std::size_t i = 0; i < v.size(); ++i)
        v[i] = (i % 2 == 0 ? 0.0 : 10.0) + rng.gaussian();
    const auto r = ks_gaussian_test(v);
    CHECK(r.gaussian_rejected_at_5pct);
    CHECK(r.p_value < 1e-10);
}

TEST_CASE("ks test degenerate and error cases") {
    std::vector<double> constant(20, 5.0);
    const auto r = ks_gaussian_test(constant);
    CHECK(r.statistic == 1.0);
    CHECK(r.p_value == 0.0);
    CHECK(r.gaussian_rejected_at_5pct);

    std::vector<double> tiny{1, 2, 3, 4, 5, 6, 7};
    CHECK_THROWS_AS(ks_gaussian_test(tiny), Error);
}

TEST_CASE("ks statistic is within [0,1] and the rejection flag matches p") {
    Rng rng(42);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> v(8 + rng.below(500));
        for (auto& e : v) e = rng.uniform01() * (trial + 1);
        const auto r = ks_gaussian_test(v);
        CHECK(r.statistic >= 0.0);
        CHECK(r.statistic <= 1.0);
        CHECK(r.p_value >= 0.0);
        CHECK(r.p_value <= 1.0);
        CHECK(r.gaussian_rejected_at_5pct == (r.p_value < 0.05));
    }
}

TEST_CASE("kolmogorov survival function decreases in the statistic") {
    double prev = 1.0;
    for (double t = 0.05; t < 3.0; t += 0.05) {
        const double q = procwatt::detail::kolmogorov_survival(t);
        CHECK(q <= prev + 1e-12);
        prev = q;
    }
}
