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

// Pipeline stages behind the CLI subcommands: collect -> select -> train ->
// evaluate -> choose, plus predict. Each stage reads and writes the shared
// tabular/JSON artifacts, so stages chain through the filesystem and every
// artifact is reproducible from its inputs plus the recorded seeds.
// An optional run manifest (JSON lines, append-only) records each stage's
// arguments, inputs, outputs and duration.

#pragma once

#include "procwatt/cross_validation.hpp"
#include "procwatt/dataset.hpp"
#include "procwatt/error.hpp"
#include "procwatt/metrics.hpp"
#include "procwatt/mic.hpp"
#include "procwatt/model_io.hpp"
#include "procwatt/power_stream.hpp"
#include "procwatt/proc_counters.hpp"
#include "procwatt/selection.hpp"
#include "procwatt/stream_merge.hpp"
#include "procwatt/version.hpp"
#include "procwatt/workload.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace procwatt {

namespace detail {

inline void append_manifest(const std::string& manifest_path, const std::string& stage,
                            const std::vector<std::string>& argv,
                            const std::vector<std::string>& inputs,
                            const std::vector<std::string>& outputs, double duration_s) {
    if (manifest_path.empty()) return;
    nlohmann::json entry{{"stage", stage},
                         {"argv", argv},
                         {"inputs", inputs},
                         {"outputs", outputs},
                         {"duration_s", duration_s},
                         {"tool_version", std::string(kToolVersion)}};
    std::ofstream out(manifest_path, std::ios::app | std::ios::binary);
    if (!out) throw Error("cannot append to manifest: " + manifest_path);
    out << entry.dump() << '\n';
}

class StageTimer {
public:
    double seconds() const {
        return std::chrono::duration<double>(Clock::now() - start_).count();
    }

private:
    using Clock = std::chrono::steady_clock;
    Clock::time_point start_ = Clock::now();
};

/// Loads a dataset and marks `target` as the power column (the conventional
/// `power_w` name is already tagged by ingest). Exactly one power column
/// survives: choosing a custom target demotes any other power-tagged column
/// to an ordinary counter.
inline Dataset load_for_target(const std::string& path, const std::string& target) {
    Dataset d = load_table(path);
    if (!d.has_variable(target))
        throw Error(path + ": no column named '" + target + "'");
    for (const auto& v : d.variables())
        if (v.kind == VarKind::PowerWatts && v.name != target)
            d = d.retagged(v.name, VarKind::Counter);
    if (d.variable(target).kind != VarKind::PowerWatts)
        d = d.retagged(target, VarKind::PowerWatts);
    return d;
}

} // namespace detail

// ---------------------------------------------------------------------------
// collect

struct CollectOptions {
    std::string out;            // dataset file to write
    std::string replay_counters; // recorded counter table; empty = live sampling
    std::string power_source;   // file path or "tcp:HOST:PORT"
    int cadence_ms = 1000;
    double duration_s = 0.0;    // live sampling length
    std::string plan_path;      // workload plan to execute while sampling
    bool dry_run = false;
    std::string scratch_dir = "/tmp";
    std::string manifest;
    std::vector<std::string> argv;
};

inline int run_collect(const CollectOptions& opts, std::ostream& out, std::ostream& err) {
    detail::StageTimer timer;

    std::optional<WorkloadPlan> plan;
    if (!opts.plan_path.empty()) plan = load_plan(opts.plan_path);

    if (opts.dry_run) {
        if (!plan) throw UsageError("--dry-run needs --plan");
        out << format_plan(*plan);
        return 0;
    }
    if (opts.out.empty()) throw UsageError("collect needs --out");
    if (opts.power_source.empty())
        throw UsageError("collect needs --power-source (file path or tcp:HOST:PORT)");

    std::vector<CounterSnapshot> snapshots;
    std::vector<PowerReading> power;

    if (!opts.replay_counters.empty()) {
        snapshots = counters_from_table(load_table(opts.replay_counters));
        if (opts.power_source.rfind("tcp:", 0) == 0)
            throw UsageError("replay mode needs a power file, not a socket");
        power = read_power_file(opts.power_source);
    } else {
        if (!(opts.duration_s > 0.0))
            throw UsageError("live collection needs --duration-s > 0");
        if (opts.cadence_ms < 1) throw UsageError("--cadence-ms must be >= 1");

        // The power reader and the optional workload run on their own
        // threads; sampling never waits on either.
        std::exception_ptr power_error;
        std::thread power_thread;
        const bool power_is_socket = opts.power_source.rfind("tcp:", 0) == 0;
        if (power_is_socket) {
#ifdef PROCWATT_HAVE_SOCKETS
            const std::string endpoint = opts.power_source.substr(4);
            const std::size_t colon = endpoint.rfind(':');
            if (colon == std::string::npos)
                throw UsageError("power socket must be tcp:HOST:PORT");
            const auto port = parse_int64(endpoint.substr(colon + 1));
            if (!port) throw UsageError("bad power socket port");
            const std::string host = endpoint.substr(0, colon);
            power_thread = std::thread([&, host, port] {
                try {
                    power = read_power_tcp(host, static_cast<int>(*port));
                } catch (...) {
                    power_error = std::current_exception();
                }
            });
#else
            throw Error("socket power sources are unsupported on this platform");
#endif
        }

        // With a plan, sampling spans the whole campaign; otherwise
        // --duration-s bounds it.
        std::thread workload_thread;
        std::atomic<bool> workload_done{false};
        if (plan) workload_thread = std::thread([&] {
            RunOptions ro;
            ro.scratch_dir = opts.scratch_dir;
            run_workload(*plan, ro);
            workload_done.store(true);
        });

        const auto deadline = std::chrono::steady_clock::now() +
                              std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                  std::chrono::duration<double>(opts.duration_s));
        while (true) {
            snapshots.push_back(sample_counters());
            const bool time_up = std::chrono::steady_clock::now() >= deadline;
            if (plan ? workload_done.load() : time_up) break;
            std::this_thread::sleep_for(std::chrono::milliseconds(opts.cadence_ms));
        }

        if (workload_thread.joinable()) workload_thread.join();
        if (power_thread.joinable()) power_thread.join();
        if (power_error) std::rethrow_exception(power_error);
        if (!power_is_socket) power = read_power_file(opts.power_source);
    }

    const MergeResult merged = merge_streams(snapshots, power);
    write_table(merged.dataset, opts.out);

    out << "rows: " << merged.dataset.n_rows() << "  gaps: " << merged.gap_count << "\n";
    for (const auto& w : merged.warnings) err << "warning: " << w << "\n";

    std::vector<std::string> inputs;
    if (!opts.replay_counters.empty()) inputs.push_back(opts.replay_counters);
    if (!opts.power_source.empty() && opts.power_source.rfind("tcp:", 0) != 0)
        inputs.push_back(opts.power_source);
    detail::append_manifest(opts.manifest, "collect", opts.argv, inputs, {opts.out},
                            timer.seconds());
    return 0;
}

// ---------------------------------------------------------------------------
// select

struct SelectOptions {
    std::string dataset;
    std::string out;
    std::string target{kPowerColumn};
    double threshold = 0.10;
    std::string manifest;
    std::vector<std::string> argv;
};

inline void write_selection_report(const SelectionReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write selection report: " + path);
    out << "variable,mic,selected\n";
    for (const auto& s : report.scores) {
        const bool sel = s.mic >= report.threshold;
        out << s.variable << ',' << to_text(s.mic) << ',' << (sel ? '1' : '0') << '\n';
    }
}

inline SelectionReport load_selection_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open selection report: " + path);
    std::string line;
    if (!std::getline(in, line) || detail::strip_cr(line) != "variable,mic,selected")
        throw Error(path + ": not a selection report");
    SelectionReport report;
    report.threshold = 1.0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const auto sv = detail::strip_cr(line);
        if (sv.empty()) continue;
        const auto f = split_fields(sv);
        const auto mic_v = f.size() == 3 ? parse_double(f[1]) : std::nullopt;
        const auto sel_v = f.size() == 3 ? parse_int64(f[2]) : std::nullopt;
        if (!mic_v || !sel_v)
            throw Error(path + ": line " + to_text(static_cast<std::int64_t>(line_no)) +
                        ": malformed report row");
        report.scores.push_back(MicScore{std::string(f[0]), *mic_v});
        if (*sel_v != 0) {
            report.selected.push_back(std::string(f[0]));
            report.threshold = std::min(report.threshold, *mic_v);
        }
    }
    return report;
}

inline int run_select(const SelectOptions& opts, std::ostream& out, std::ostream& err) {
    (void)err;
    detail::StageTimer timer;
    if (opts.dataset.empty() || opts.out.empty())
        throw UsageError("select needs a dataset and --out");
    if (opts.threshold < 0.0 || opts.threshold > 1.0)
        throw UsageError("--threshold must be within [0, 1]");

    const Dataset d = detail::load_for_target(opts.dataset, opts.target);
    const SelectionReport report = select_variables(d, opts.target, opts.threshold);
    write_selection_report(report, opts.out);

    const auto stats = describe(d, opts.target);
    const auto ks = ks_gaussian_test(d.column(opts.target));
    out << "target " << opts.target << ": mean " << to_text(stats.mean) << " W, sd "
        << to_text(stats.sd) << ", range [" << to_text(stats.min) << ", " << to_text(stats.max)
        << "], n " << stats.n << "\n";
    out << "KS vs Gaussian: statistic " << to_text(ks.statistic) << ", p "
        << to_text(ks.p_value)
        << (ks.gaussian_rejected_at_5pct ? " (not Gaussian at 5%)" : " (Gaussian not rejected)")
        << "\n";
    out << "selected (mic >= " << to_text(opts.threshold) << "):";
    for (const auto& name : report.selected) out << ' ' << name;
    out << "\n";

    detail::append_manifest(opts.manifest, "select", opts.argv, {opts.dataset}, {opts.out},
                            timer.seconds());
    return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainOptions {
    std::string dataset;
    std::string out;
    std::string model_kind; // mlr | ret | mlp
    std::string target{kPowerColumn};
    std::vector<std::string> features; // explicit list wins over selection
    std::string selection_report;      // use its selected variables
    double ret_alpha = 0.01;
    MlpConfig mlp;
    bool mlp_auto_neurons = true; // neurons = 2 * feature count unless set
    std::size_t search_budget = 0; // >0: run the configuration search first
    bool print_tree = false;
    std::string manifest;
    std::vector<std::string> argv;
};

inline std::vector<std::string> resolve_features(const Dataset& d, const TrainOptions& opts) {
    std::vector<std::string> features;
    if (!opts.features.empty()) {
        features = opts.features;
    } else if (!opts.selection_report.empty()) {
        features = load_selection_report(opts.selection_report).selected;
        if (features.empty())
            throw Error(opts.selection_report + ": selection report selected no variables");
    } else {
        for (const auto& v : d.variables())
            if (v.name != opts.target) features.push_back(v.name);
    }
    for (const auto& f : features)
        if (!d.has_variable(f)) throw Error("dataset has no feature column '" + f + "'");
    return features;
}

inline int run_train(const TrainOptions& opts, std::ostream& out, std::ostream& err) {
    detail::StageTimer timer;
    if (opts.dataset.empty() || opts.out.empty())
        throw UsageError("train needs a dataset and --out");
    if (opts.model_kind != "mlr" && opts.model_kind != "ret" && opts.model_kind != "mlp")
        throw UsageError("--model must be one of mlr, ret, mlp");

    const Dataset d = detail::load_for_target(opts.dataset, opts.target);
    const auto features = resolve_features(d, opts);

    FittedModel fm;
    fm.kind = opts.model_kind;
    fm.target = opts.target;
    fm.dataset_label = d.label();

    if (opts.model_kind == "mlr") {
        LinearModel m = fit_mlr(d, opts.target, features);
        for (const auto& w : m.warnings) err << "warning: " << w << "\n";
        fm.model = std::move(m);
    } else if (opts.model_kind == "ret") {
        TreeModel m = fit_ret(d, opts.target, features, opts.ret_alpha);
        out << "leaves: " << count_leaves(*m.root) << "\n";
        if (opts.print_tree) out << format_tree(m);
        fm.model = std::move(m);
    } else {
        MlpConfig cfg = opts.mlp;
        if (opts.mlp_auto_neurons)
            cfg.neurons_per_hidden = std::max(1, 2 * static_cast<int>(features.size()));
        if (opts.search_budget > 0) {
            cfg = configuration_search(d, opts.target, features, opts.search_budget, cfg);
            out << "search picked: hidden_layers " << cfg.hidden_layers << ", neurons "
                << cfg.neurons_per_hidden << ", learning_rate " << to_text(cfg.learning_rate)
                << "\n";
        }
        MlpTrainInfo info;
        MlpModel m = train_mlp(d, opts.target, features, cfg, &info);
        out << "epochs run: " << info.epochs_run << ", final training R^2: "
            << to_text(info.epoch_r2.empty() ? 0.0 : info.epoch_r2.back()) << "\n";
        fm.model = std::move(m);
    }

    save_model(fm, opts.out);
    detail::append_manifest(opts.manifest, "train", opts.argv, {opts.dataset}, {opts.out},
                            timer.seconds());
    return 0;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateOptions {
    std::string dataset;
    std::string out;        // report table; trace goes to <out> + ".trace"
    std::string model_kind; // cross-validate this kind ...
    std::string model_file; // ... or score a saved model directly
    std::string target{kPowerColumn};
    std::vector<std::string> features;
    std::string selection_report;
    std::size_t k = 10;
    std::uint64_t seed = 0;
    double ret_alpha = 0.01;
    MlpConfig mlp;
    bool mlp_auto_neurons = true;
    std::string manifest;
    std::vector<std::string> argv;
};

inline std::string trace_path_for(const std::string& report_path) {
    return report_path + ".trace";
}

namespace detail {

inline void write_metric_table(const std::string& path, const MetricSummary& se,
                               const MetricSummary& ae, const MetricSummary& pe,
                               const MetricSummary& ape, const MetricSummary& ase, double r2,
                               double r2_sd) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write evaluation report: " + path);
    out << "metric,mean,sd\n";
    const auto row = [&](const char* name, double mean, double sd) {
        out << name << ',' << to_text(mean) << ',' << to_text(sd) << '\n';
    };
    row("se", se.mean, se.sd);
    row("ae", ae.mean, ae.sd);
    row("pe", pe.mean, pe.sd);
    row("ape", ape.mean, ape.sd);
    row("ase", ase.mean, ase.sd);
    row("r2", r2, r2_sd);
}

inline void write_trace(const std::string& path, std::span<const double> actual,
                        std::span<const double> estimated) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write trace: " + path);
    out << "actual_w,estimated_w\n";
    for (std::size_t i = 0; i < actual.size(); ++i)
        out << to_text(actual[i]) << ',' << to_text(estimated[i]) << '\n';
}

} // namespace detail

/// Builds the trainer closure for a model kind, capturing hyper-parameters.
inline TrainerFn make_trainer(const std::string& kind, double ret_alpha, MlpConfig mlp_cfg,
                              bool mlp_auto_neurons) {
    if (kind == "mlr")
        return [](const Dataset& train, const std::string& target,
                  const std::vector<std::string>& features) -> PredictFn {
            auto model = std::make_shared<LinearModel>(fit_mlr(train, target, features));
            return [model](std::span<const double> x) { return predict_mlr(*model, x); };
        };
    if (kind == "ret")
        return [ret_alpha](const Dataset& train, const std::string& target,
                           const std::vector<std::string>& features) -> PredictFn {
            auto model =
                std::make_shared<TreeModel>(fit_ret(train, target, features, ret_alpha));
            return [model](std::span<const double> x) { return predict_ret(*model, x); };
        };
    if (kind == "mlp")
        return [mlp_cfg, mlp_auto_neurons](const Dataset& train, const std::string& target,
                                           const std::vector<std::string>& features) -> PredictFn {
            MlpConfig cfg = mlp_cfg;
            if (mlp_auto_neurons)
                cfg.neurons_per_hidden = std::max(1, 2 * static_cast<int>(features.size()));
            auto model = std::make_shared<MlpModel>(train_mlp(train, target, features, cfg));
            return [model](std::span<const double> x) { return predict_mlp(*model, x); };
        };
    throw UsageError("unknown model kind '" + kind + "'");
}

inline int run_evaluate(const EvaluateOptions& opts, std::ostream& out, std::ostream& err) {
    (void)err;
    detail::StageTimer timer;
    if (opts.dataset.empty() || opts.out.empty())
        throw UsageError("evaluate needs a dataset and --out");
    if (opts.model_kind.empty() == opts.model_file.empty())
        throw UsageError("evaluate needs exactly one of --model-kind or --model-file");

    const Dataset d = detail::load_for_target(opts.dataset, opts.target);
    std::vector<std::string> inputs{opts.dataset};

    if (!opts.model_file.empty()) {
        // Score a saved model on the whole dataset, no training.
        auto fm = std::make_shared<const FittedModel>(load_model(opts.model_file));
        inputs.push_back(opts.model_file);
        const auto predict = make_predictor(fm);
        const auto& features = fm->features();
        std::vector<std::size_t> fidx;
        for (const auto& f : features) fidx.push_back(d.variable_index(f));
        const std::size_t tidx = d.variable_index(fm->target);

        std::vector<double> actual, estimated, x(features.size());
        for (const auto& row : d.rows()) {
            for (std::size_t j = 0; j < fidx.size(); ++j) x[j] = row.values[fidx[j]];
            actual.push_back(row.values[tidx]);
            estimated.push_back(predict(x));
        }
        const MetricVector m = metrics(actual, estimated);
        detail::write_metric_table(opts.out, summarize(m.se), summarize(m.ae), summarize(m.pe),
                                   summarize(m.ape), summarize(m.ase), m.r2, 0.0);
        detail::write_trace(trace_path_for(opts.out), actual, estimated);
        out << "R^2: " << to_text(m.r2) << " over " << actual.size() << " rows";
        if (m.pe_excluded > 0) out << " (" << m.pe_excluded << " zero-actual rows excluded from pe/ape)";
        out << "\n";
    } else {
        if (opts.k > d.n_rows())
            throw UsageError("--k " + to_text(static_cast<std::int64_t>(opts.k)) +
                             " exceeds the dataset's " +
                             to_text(static_cast<std::int64_t>(d.n_rows())) + " rows");
        TrainOptions feat_opts;
        feat_opts.target = opts.target;
        feat_opts.features = opts.features;
        feat_opts.selection_report = opts.selection_report;
        const auto features = resolve_features(d, feat_opts);
        if (!opts.selection_report.empty()) inputs.push_back(opts.selection_report);

        const TrainerFn trainer =
            make_trainer(opts.model_kind, opts.ret_alpha, opts.mlp, opts.mlp_auto_neurons);
        const EvalReport report =
            cross_validate(d, opts.target, features, trainer, opts.k, opts.seed);

        const MeanSd fold_r2 = mean_sd(report.fold_r2);
        detail::write_metric_table(opts.out, report.se, report.ae, report.pe, report.ape,
                                   report.ase, report.r2, fold_r2.sd);
        detail::write_trace(trace_path_for(opts.out), report.actual, report.estimated);

        out << "pooled R^2: " << to_text(report.r2) << " over " << report.actual.size()
            << " held-out rows in " << report.k << " folds\n";
        out << "fold R^2:";
        for (double r : report.fold_r2) out << ' ' << to_text(r);
        out << "\nfold train seconds:";
        for (double s : report.fold_train_seconds) out << ' ' << to_text(s);
        out << "\n";
        if (report.pe_excluded > 0)
            out << report.pe_excluded << " zero-actual rows excluded from pe/ape\n";
    }

    detail::append_manifest(opts.manifest, "evaluate", opts.argv, inputs,
                            {opts.out, trace_path_for(opts.out)}, timer.seconds());
    return 0;
}

// ---------------------------------------------------------------------------
// choose

struct ChooseOptions {
    std::vector<std::string> reports;
    std::string out; // optional ranking file
    std::string manifest;
    std::vector<std::string> argv;
};

struct RankedReport {
    std::string path;
    double ape_mean = 0.0;
    double r2 = 0.0;
};

inline int run_choose(const ChooseOptions& opts, std::ostream& out, std::ostream& err) {
    (void)err;
    detail::StageTimer timer;
    if (opts.reports.empty()) throw UsageError("choose needs at least one report");

    std::vector<RankedReport> ranked;
    for (const auto& path : opts.reports) {
        std::ifstream in(path);
        if (!in) throw Error("cannot open report: " + path);
        std::string line;
        if (!std::getline(in, line) || detail::strip_cr(line) != "metric,mean,sd")
            throw Error(path + ": not an evaluation report");
        RankedReport r;
        r.path = path;
        bool have_ape = false, have_r2 = false;
        while (std::getline(in, line)) {
            const auto f = split_fields(detail::strip_cr(line));
            if (f.size() != 3) continue;
            if (f[0] == "ape") {
                const auto v = parse_double(f[1]);
                if (v) {
                    r.ape_mean = *v;
                    have_ape = true;
                }
            } else if (f[0] == "r2") {
                const auto v = parse_double(f[1]);
                if (v) {
                    r.r2 = *v;
                    have_r2 = true;
                }
            }
        }
        if (!have_ape || !have_r2) throw Error(path + ": report lacks ape or r2 rows");
        ranked.push_back(r);
    }

    std::stable_sort(ranked.begin(), ranked.end(), [](const RankedReport& a, const RankedReport& b) {
        if (a.ape_mean != b.ape_mean) return a.ape_mean < b.ape_mean;
        return a.r2 > b.r2;
    });

    out << "winner: " << ranked.front().path << "\n";
    out << "rank,report,ape_mean,r2\n";
    std::ostringstream table;
    table << "rank,report,ape_mean,r2\n";
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        std::ostringstream row;
        row << (i + 1) << ',' << ranked[i].path << ',' << to_text(ranked[i].ape_mean) << ','
            << to_text(ranked[i].r2) << '\n';
        out << row.str();
        table << row.str();
    }
    if (!opts.out.empty()) {
        std::ofstream f(opts.out, std::ios::binary);
        if (!f) throw Error("cannot write ranking: " + opts.out);
        f << table.str();
        detail::append_manifest(opts.manifest, "choose", opts.argv, opts.reports, {opts.out},
                                timer.seconds());
    } else {
        detail::append_manifest(opts.manifest, "choose", opts.argv, opts.reports, {},
                                timer.seconds());
    }
    return 0;
}

// ---------------------------------------------------------------------------
// predict

struct PredictOptions {
    std::string model_file;
    std::string input;  // tabular file, or "-" for streaming stdin
    std::string output; // watts lines; "-" or empty for stdout
    std::string manifest;
    std::vector<std::string> argv;
};

inline int run_predict(const PredictOptions& opts, std::istream& in, std::ostream& out,
                       std::ostream& err) {
    (void)err;
    detail::StageTimer timer;
    if (opts.model_file.empty()) throw UsageError("predict needs --model");
    auto fm = std::make_shared<const FittedModel>(load_model(opts.model_file));
    const auto predict = make_predictor(fm);
    const auto& features = fm->features();

    std::ofstream file_out;
    const bool to_file = !opts.output.empty() && opts.output != "-";
    if (to_file) {
        file_out.open(opts.output, std::ios::binary);
        if (!file_out) throw Error("cannot write output: " + opts.output);
    }
    std::ostream& sink = to_file ? static_cast<std::ostream&>(file_out) : out;

    const auto emit = [&](double watts) {
        sink << to_text(watts) << '\n';
        sink.flush(); // streaming callers read line by line
    };

    if (!opts.input.empty() && opts.input != "-") {
        const Dataset d = load_table(opts.input);
        std::vector<std::size_t> fidx;
        for (const auto& f : features) fidx.push_back(d.variable_index(f));
        std::vector<double> x(features.size());
        for (const auto& row : d.rows()) {
            for (std::size_t j = 0; j < fidx.size(); ++j) x[j] = row.values[fidx[j]];
            emit(predict(x));
        }
        detail::append_manifest(opts.manifest, "predict", opts.argv,
                                {opts.model_file, opts.input},
                                to_file ? std::vector<std::string>{opts.output}
                                        : std::vector<std::string>{},
                                timer.seconds());
        return 0;
    }

    // Streaming mode: comma-separated feature values per line, in the
    // model's feature order; an optional leading header naming exactly the
    // features is accepted. Each estimate is emitted as soon as its row
    // arrives.
    std::string line;
    std::size_t row_no = 0;
    bool first = true;
    std::vector<double> x(features.size());
    while (std::getline(in, line)) {
        ++row_no;
        const auto sv = detail::strip_cr(line);
        if (sv.empty()) continue;
        const auto fields = split_fields(sv);
        if (first) {
            first = false;
            std::vector<std::string_view> names(features.begin(), features.end());
            if (std::vector<std::string_view>(fields.begin(), fields.end()) == names)
                continue; // header row
        }
        if (fields.size() != features.size())
            throw Error("input row " + to_text(static_cast<std::int64_t>(row_no)) +
                        ": expected " + to_text(static_cast<std::int64_t>(features.size())) +
                        " values, got " + to_text(static_cast<std::int64_t>(fields.size())));
        for (std::size_t j = 0; j < fields.size(); ++j) {
            const auto v = parse_double(fields[j]);
            if (!v)
                throw Error("input row " + to_text(static_cast<std::int64_t>(row_no)) +
                            ": bad value for " + features[j] + ": '" + std::string(fields[j]) +
                            "'");
            x[j] = *v;
        }
        emit(predict(x));
    }
    detail::append_manifest(opts.manifest, "predict", opts.argv, {opts.model_file},
                            to_file ? std::vector<std::string>{opts.output}
                                    : std::vector<std::string>{},
                            timer.seconds());
    return 0;
}

} // namespace procwatt
