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

// Release gate. Each test case is one criterion with its tolerance and
// runtime budget pinned in code; the listener prints one PASS/FAIL line per
// criterion. Criterion 7 additionally needs the original published traces
// (point PROCWATT_ECM_DATA at a directory holding a1.csv / a2.csv in the
// toolkit's tabular format); its dataset half is skipped when they are
// absent.

#include "procwatt/procwatt.hpp"

#include "test_support.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <set>
#include <string>
#include <vector>

using namespace procwatt;
using testsupport::read_file;
using testsupport::TempDir;
using testsupport::write_file;

namespace {

class AcceptanceReporter : public Catch::EventListenerBase {
public:
    using EventListenerBase::EventListenerBase;
    void testCaseEnded(const Catch::TestCaseStats& stats) override {
        std::printf("[acceptance] %s: %s\n", stats.testInfo->name.c_str(),
                    stats.totals.assertions.allOk() ? "PASS" : "FAIL");
        std::fflush(stdout);
    }
};
CATCH_REGISTER_LISTENER(AcceptanceReporter)

class BudgetTimer {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

int run_cli(const TempDir& tmp, const std::string& args) {
    static int counter = 0;
    const std::string log = tmp.file("cli_log_" + std::to_string(counter++));
    const std::string cmd =
        std::string(PROCWATT_BIN) + " " + args + " > " + log + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

double report_metric(const std::string& report_path, const std::string& metric) {
    std::istringstream in(read_file(report_path));
    std::string line;
    while (std::getline(in, line)) {
        const auto f = split_fields(line);
        if (f.size() == 3 && f[0] == metric) return parse_double(f[1]).value_or(std::nan(""));
    }
    return std::nan("");
}

} // namespace

TEST_CASE("1. linear regression matches the pseudo-inverse oracle") {
    BudgetTimer budget;
    Rng rng(1001);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 100, p = 5;
        std::vector<std::vector<double>> cols(p, std::vector<double>(n));
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < p; ++j) cols[j][i] = rng.uniform(-3.0, 3.0);
            y[i] = rng.uniform(10.0, 300.0);
        }

        // Independent oracle: normal equations inverted by Gauss-Jordan.
        std::vector<std::vector<double>> a(p + 1, std::vector<double>(p + 1, 0.0));
        std::vector<double> b(p + 1, 0.0);
        const auto col = [&](std::size_t j, std::size_t i) {
            return j == 0 ? 1.0 : cols[j - 1][i];
        };
        for (std::size_t j = 0; j <= p; ++j) {
            for (std::size_t k = 0; k <= p; ++k)
                for (std::size_t i = 0; i < n; ++i) a[j][k] += col(j, i) * col(k, i);
            for (std::size_t i = 0; i < n; ++i) b[j] += col(j, i) * y[i];
        }
        for (std::size_t k = 0; k <= p; ++k) {
            std::size_t piv = k;
            for (std::size_t r = k + 1; r <= p; ++r)
                if (std::abs(a[r][k]) > std::abs(a[piv][k])) piv = r;
            std::swap(a[k], a[piv]);
            std::swap(b[k], b[piv]);
            const double d = a[k][k];
            for (auto& v : a[k]) v /= d;
            b[k] /= d;
            for (std::size_t r = 0; r <= p; ++r) {
                if (r == k) continue;
                const double f = a[r][k];
                for (std::size_t c = 0; c <= p; ++c) a[r][c] -= f * a[k][c];
                b[r] -= f * b[k];
            }
        }

        auto all = cols;
        all.push_back(y);
        const Dataset d =
            testsupport::make_dataset({"f0", "f1", "f2", "f3", "f4", "power_w"}, all);
        const LinearModel m = fit_mlr(d, "power_w", {"f0", "f1", "f2", "f3", "f4"});
        CHECK(std::abs(m.intercept - b[0]) <= 1e-8 * std::max(1.0, std::abs(b[0])));
        for (std::size_t j = 0; j < p; ++j)
            CHECK(std::abs(m.coefficients[j] - b[j + 1]) <=
                  1e-8 * std::max(1.0, std::abs(b[j + 1])));
    }
    CHECK(budget.seconds() < 5.0);
}

TEST_CASE("2. backprop gradients agree with central finite differences") {
    BudgetTimer budget;
    Rng rng(1002);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t inputs = 2 + rng.below(7);      // up to 8
        const int hidden = 1 + static_cast<int>(rng.below(3)); // up to 3 layers
        const int width = 2 + static_cast<int>(rng.below(11)); // up to 12
        MlpModel m = make_mlp(inputs, hidden, width, rng);
        for (auto& layer : m.layers) {
            for (auto& w : layer.weights) w = (w - 0.5) * 1.5;
            for (auto& b : layer.bias) b = (b - 0.5) * 0.8;
        }
        std::vector<double> x(inputs);
        for (auto& v : x) v = rng.uniform(-0.9, 0.9);
        const double desired = rng.uniform(-0.9, 0.9);

        const ForwardState st = forward(m, x);
        MlpGradients bp = make_gradients(m);
        const std::vector<double> dvec{desired};
        backward(m, st, dvec, bp);

        const auto loss = [&](const MlpModel& model) {
            const double e = desired - forward(model, x).output();
            return 0.5 * e * e;
        };
        const double step = 1e-5;
        for (std::size_t li = 0; li < m.layers.size(); ++li) {
            auto probe = [&](std::vector<double>& params, std::size_t i, double g) {
                const double saved = params[i];
                params[i] = saved + step;
                const double up = loss(m);
                params[i] = saved - step;
                const double down = loss(m);
                params[i] = saved;
                const double fd = (up - down) / (2.0 * step);
                worst = std::max(worst,
                                 std::abs(g - fd) / std::max(std::abs(g) + std::abs(fd), 1e-3));
            };
            for (std::size_t i = 0; i < m.layers[li].weights.size(); ++i)
                probe(m.layers[li].weights, i, bp.weights[li][i]);
            for (std::size_t i = 0; i < m.layers[li].bias.size(); ++i)
                probe(m.layers[li].bias, i, bp.bias[li][i]);
        }
    }
    CHECK(worst < 1e-4);
    CHECK(budget.seconds() < 30.0);
}

TEST_CASE("3. best_split equals exhaustive search on random datasets") {
    BudgetTimer budget;
    Rng rng(1003);
    const std::vector<std::string> names{"a", "b", "c", "d", "e"};
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng.below(199); // up to 200 rows
        const std::size_t nf = 1 + rng.below(5);  // up to 5 features
        std::vector<std::vector<double>> cols(nf, std::vector<double>(n));
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (auto& c : cols) c[i] = std::floor(rng.uniform(0.0, 12.0)) / 2.0;
            y[i] = rng.uniform(0.0, 250.0);
        }
        std::vector<std::string> features(names.begin(), names.begin() + nf);
        auto all = cols;
        all.push_back(y);
        auto header = features;
        header.push_back("power_w");
        const Dataset d = testsupport::make_dataset(header, all);

        const auto got = best_split(d, "power_w", features);

        // Exhaustive oracle with two-pass SSE per candidate.
        bool found = false;
        std::string best_f;
        double best_split_v = 0.0, best_gain = 0.0;
        const auto sse_of = [](const std::vector<double>& v) {
            double mean = 0.0;
            for (double e : v) mean += e;
            mean /= static_cast<double>(v.size());
            double s = 0.0;
            for (double e : v) s += (e - mean) * (e - mean);
            return s;
        };
        const double parent = sse_of(y);
        for (std::size_t f = 0; f < nf; ++f) {
            std::set<double> distinct(cols[f].begin(), cols[f].end());
            std::vector<double> sorted(distinct.begin(), distinct.end());
            for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
                const double split = sorted[i] + (sorted[i + 1] - sorted[i]) / 2.0;
                std::vector<double> yl, yr;
                for (std::size_t r = 0; r < n; ++r) (cols[f][r] <= split ? yl : yr).push_back(y[r]);
                const double gain = parent - (sse_of(yl) + sse_of(yr));
                if (gain <= 0.0) continue;
                bool better = gain > best_gain;
                if (found && gain == best_gain) {
                    if (features[f] != best_f)
                        better = features[f] < best_f;
                    else
                        better = split < best_split_v;
                }
                if (!found || better) {
                    found = true;
                    best_f = features[f];
                    best_split_v = split;
                    best_gain = gain;
                }
            }
        }

        REQUIRE(got.found == found);
        if (found) {
            CHECK(features[got.feature] == best_f);
            CHECK(got.split_value == Catch::Approx(best_split_v).margin(1e-12));
        }
    }
    CHECK(budget.seconds() < 30.0);
}

TEST_CASE("4. MIC recovers noiseless functional relationships") {
    BudgetTimer budget;
    Rng rng(1004);
    const std::size_t n = 1000;
    std::vector<double> x(n);
    for (auto& v : x) v = rng.uniform01();

    std::vector<double> linear(n), quadratic(n), sinusoid(n), independent(n);
    for (std::size_t i = 0; i < n; ++i) {
        linear[i] = 2.0 * x[i] + 3.0;
        quadratic[i] = (x[i] - 0.5) * (x[i] - 0.5);
        sinusoid[i] = std::sin(2.0 * M_PI * x[i]); // one full period
        independent[i] = rng.uniform01();
    }
    CHECK(mic(x, linear) >= 0.95);
    CHECK(mic(x, quadratic) >= 0.95);
    CHECK(mic(x, sinusoid) >= 0.95);
    CHECK(mic(x, independent) <= 0.2);
    CHECK(budget.seconds() < 60.0);
}

namespace {

struct SyntheticTruth {
    std::string dataset_path;
    std::vector<std::string> true_counters{"c1", "c2", "c3", "c4"};
    std::vector<double> coefficients{60.0, 50.0, 45.0, 40.0};
    double intercept = 25.0;
};

/// power = intercept + sum(coef * counter) + N(0, (range/100)^2), 10k rows,
/// plus 4 pure-noise counters.
SyntheticTruth write_ground_truth_dataset(const TempDir& tmp, std::size_t rows = 10000) {
    SyntheticTruth truth;
    Rng rng(5005);
    std::vector<std::vector<double>> counters(8, std::vector<double>(rows));
    for (auto& c : counters)
        for (auto& v : c) v = rng.uniform01();

    std::vector<double> clean(rows);
    double lo = 1e300, hi = -1e300;
    for (std::size_t i = 0; i < rows; ++i) {
        double p = truth.intercept;
        for (std::size_t j = 0; j < 4; ++j) p += truth.coefficients[j] * counters[j][i];
        clean[i] = p;
        lo = std::min(lo, p);
        hi = std::max(hi, p);
    }
    const double noise_sd = (hi - lo) / 100.0; // 1% of the observed range

    std::string csv = "ts_ms,c1,c2,c3,c4,n1,n2,n3,n4,power_w\n";
    for (std::size_t i = 0; i < rows; ++i) {
        csv += to_text(static_cast<std::int64_t>(i * 1000));
        for (const auto& c : counters) csv += "," + to_text(c[i]);
        csv += "," + to_text(clean[i] + noise_sd * rng.gaussian()) + "\n";
    }
    truth.dataset_path = tmp.file("ground_truth.csv");
    write_file(truth.dataset_path, csv);
    return truth;
}

} // namespace

TEST_CASE("5. end-to-end pipeline on a synthetic ground-truth dataset") {
    BudgetTimer budget;
    TempDir tmp;
    const SyntheticTruth truth = write_ground_truth_dataset(tmp);

    // Selection picks exactly the true counters.
    const std::string sel = tmp.file("sel.csv");
    REQUIRE(run_cli(tmp, "select " + truth.dataset_path + " --out " + sel) == 0);
    const SelectionReport report = load_selection_report(sel);
    const std::set<std::string> selected(report.selected.begin(), report.selected.end());
    CHECK(selected == std::set<std::string>{"c1", "c2", "c3", "c4"});

    // MLR recovers the generating coefficients within 5%.
    const std::string model_path = tmp.file("mlr.json");
    REQUIRE(run_cli(tmp, "train " + truth.dataset_path + " --model mlr --selection " + sel +
                             " --out " + model_path) == 0);
    const auto doc = nlohmann::json::parse(read_file(model_path));
    const auto features = doc.at("features").get<std::vector<std::string>>();
    const auto coefs = doc.at("params").at("coefficients").get<std::vector<double>>();
    REQUIRE(features.size() == 4);
    for (std::size_t j = 0; j < 4; ++j) {
        const auto it =
            std::find(truth.true_counters.begin(), truth.true_counters.end(), features[j]);
        REQUIRE(it != truth.true_counters.end());
        const double want =
            truth.coefficients[static_cast<std::size_t>(it - truth.true_counters.begin())];
        CHECK(std::abs(coefs[j] - want) <= 0.05 * want);
    }

    // 10-fold CV: MLR R^2 >= 0.99.
    const std::string mlr_report = tmp.file("mlr_eval.csv");
    REQUIRE(run_cli(tmp, "evaluate " + truth.dataset_path + " --model-kind mlr --selection " +
                             sel + " --k 10 --seed 1 --out " + mlr_report) == 0);
    CHECK(report_metric(mlr_report, "r2") >= 0.99);

    // 10-fold CV: MLP at desk scale (1 hidden layer x 8, 100 epochs) >= 0.97.
    const std::string mlp_report = tmp.file("mlp_eval.csv");
    REQUIRE(run_cli(tmp, "evaluate " + truth.dataset_path + " --model-kind mlp --selection " +
                             sel + " --k 10 --seed 1 --hidden-layers 1 --neurons 8" +
                             " --epochs 100 --eta 0.5 --chunk 50 --out " + mlp_report) == 0);
    CHECK(report_metric(mlp_report, "r2") >= 0.97);

    CHECK(budget.seconds() < 600.0);
}

TEST_CASE("6. metric identities hold under fuzzing") {
    BudgetTimer budget;
    Rng rng(1006);
    int checked = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        const std::size_t n = 2 + rng.below(19);
        std::vector<double> y(n), yhat(n);
        bool constant = true;
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = rng.uniform(0.1, 500.0);
            yhat[i] = y[i] * (1.0 + 0.3 * rng.gaussian());
            if (y[i] != y[0]) constant = false;
        }
        if (constant) continue;
        ++checked;

        const MetricVector m = metrics(y, yhat);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(std::abs(m.se[i] - m.ae[i] * m.ae[i]) <= 1e-10 * std::max(1.0, m.se[i]));
            CHECK(std::abs(m.ape[i] - std::abs(m.pe[i])) <= 1e-10);
        }
        // ASE scale invariance under y -> c y.
        const double c = rng.uniform(0.5, 20.0);
        std::vector<double> yc(n), yhc(n);
        for (std::size_t i = 0; i < n; ++i) {
            yc[i] = c * y[i];
            yhc[i] = c * yhat[i];
        }
        const MetricVector ms = metrics(yc, yhc);
        for (std::size_t i = 0; i < n; ++i)
            CHECK(std::abs(ms.ase[i] - m.ase[i]) <= 1e-10 * std::max(1.0, m.ase[i]));
        // Perfect estimates: R^2 exactly 1 within tolerance.
        const MetricVector perfect = metrics(y, y);
        CHECK(std::abs(perfect.r2 - 1.0) <= 1e-10);
    }
    CHECK(checked > 9900);
    CHECK(budget.seconds() < 5.0);
}

TEST_CASE("7. published-trace accuracy and training-cost ordering") {
    // Dataset half: only runs when the published traces are provided.
    const char* data_dir = std::getenv("PROCWATT_ECM_DATA");
    if (data_dir != nullptr) {
        const std::string a1_path = std::string(data_dir) + "/a1.csv";
        const Dataset a1 = load_table(a1_path, "A1");
        std::vector<std::string> features;
        for (const auto& v : a1.variables())
            if (v.name != kPowerColumn) features.push_back(v.name);
        const EvalReport r = cross_validate(
            a1, kPowerColumn, features,
            make_trainer("mlr", 0.01, MlpConfig{}, true), 10, 1);
        CHECK(r.r2 > 0.91);
        // Best-model pooled squared error within +-50% of the reported 6.32.
        CHECK(r.se.mean > 6.32 * 0.5);
        CHECK(r.se.mean < 6.32 * 1.5);
    } else {
        WARN("published traces not present (set PROCWATT_ECM_DATA); accuracy half skipped");
    }

    // Ordering half runs always: MLR trains fastest, MLP slowest, >= 10k rows.
    Rng rng(1007);
    const std::size_t n = 10000;
    std::vector<double> a(n), b(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        a[i] = rng.uniform01();
        b[i] = rng.uniform01();
        y[i] = 30.0 + 20.0 * a[i] + 10.0 * b[i] + rng.gaussian();
    }
    const Dataset d = testsupport::make_dataset({"a", "b", "power_w"}, {a, b, y});
    const std::vector<std::string> features{"a", "b"};

    MlpConfig mlp_cfg;
    mlp_cfg.hidden_layers = 1;
    mlp_cfg.neurons_per_hidden = 8;
    mlp_cfg.epochs = 30;
    mlp_cfg.chunk_size = 50;
    mlp_cfg.stop_on_plateau = false;
    const double t_mlr =
        timing_report(make_trainer("mlr", 0.01, mlp_cfg, false), d, "power_w", features)
            .mean_seconds;
    const double t_ret =
        timing_report(make_trainer("ret", 0.01, mlp_cfg, false), d, "power_w", features)
            .mean_seconds;
    const double t_mlp =
        timing_report(make_trainer("mlp", 0.01, mlp_cfg, false), d, "power_w", features)
            .mean_seconds;
    CHECK(t_mlr < t_ret);
    CHECK(t_ret < t_mlp);
    CHECK(t_mlr < t_mlp);
}

TEST_CASE("8. collector replay merges a two-minute fixture exactly") {
    BudgetTimer budget;
    // 1 s counter cadence for two minutes: 121 snapshots, 120 intervals.
    std::vector<CounterSnapshot> snaps;
    for (int i = 0; i <= 120; ++i) {
        CounterSnapshot s;
        s.ts_ms = 1000 * static_cast<std::int64_t>(i);
        s.values["cpu_user"] = 500.0 + 2.0 * i;
        s.values["mem_free_kb"] = 4096.0 - i;
        snaps.push_back(std::move(s));
    }
    // 100 ms power cadence: 1200 readings, exactly 10 per interval.
    std::vector<PowerReading> power;
    for (int i = 0; i < 1200; ++i)
        power.push_back(PowerReading{100 * static_cast<std::int64_t>(i),
                                     40.0 + 0.5 * static_cast<double>(i)});

    const MergeResult r = merge_streams(snaps, power);
    CHECK(r.gap_count == 0);
    REQUIRE(r.dataset.n_rows() == 120);
    const auto watts = r.dataset.column(kPowerColumn);
    for (int k = 0; k < 120; ++k) {
        // Mean of readings 10k .. 10k+9: 40 + 0.5*(10k + 4.5), exact in binary.
        const double expected = 40.0 + 0.5 * (10.0 * k + 4.5);
        CHECK(watts[static_cast<std::size_t>(k)] == expected);
    }

    TempDir tmp;
    const MergeResult again = merge_streams(snaps, power);
    write_table(r.dataset, tmp.file("merged1.csv"));
    write_table(again.dataset, tmp.file("merged2.csv"));
    CHECK(read_file(tmp.file("merged1.csv")) == read_file(tmp.file("merged2.csv")));

    CHECK(budget.seconds() < 2.0);
}
