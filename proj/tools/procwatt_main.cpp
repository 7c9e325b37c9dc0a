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

// procwatt: estimate whole-machine power draw from OS resource counters.
//
// Pipeline subcommands: collect -> select -> train -> evaluate -> choose,
// plus predict for deployment. Exit codes: 0 success, 1 runtime failure,
// 2 usage error.

#include "procwatt/procwatt.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

namespace {

std::vector<std::string> collect_argv(int argc, char** argv) {
    return std::vector<std::string>(argv, argv + argc);
}

void split_csv_list(const std::string& csv, std::vector<std::string>& out) {
    for (const auto& f : procwatt::split_fields(csv))
        if (!f.empty()) out.emplace_back(f);
}

} // namespace

int main(int argc, char** argv) {
    using namespace procwatt;

    CLI::App app{"power consumption modeling from OS resource counters"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);
    const auto argv_vec = collect_argv(argc, argv);

    std::string manifest;
    app.add_option("--manifest", manifest,
                   "append stage records to this JSON-lines manifest");

    // collect ---------------------------------------------------------------
    CollectOptions collect;
    int gen_n_cpu = 0, gen_memory_mb = 0;
    bool gen_sections_only = false;
    std::string gen_plan_out;
    auto* cmd_collect =
        app.add_subcommand("collect", "sample counters and a power stream into a dataset");
    cmd_collect->add_option("--out", collect.out, "dataset file to write");
    cmd_collect->add_option("--replay", collect.replay_counters,
                            "recorded counter table (replay mode)");
    cmd_collect->add_option("--power-source", collect.power_source,
                            "power readings: file path or tcp:HOST:PORT");
    cmd_collect->add_option("--cadence-ms", collect.cadence_ms,
                            "live counter sampling period (default 1000)");
    cmd_collect->add_option("--duration-s", collect.duration_s, "live sampling length");
    cmd_collect->add_option("--plan", collect.plan_path, "workload plan file to execute");
    cmd_collect->add_flag("--dry-run", collect.dry_run, "print the plan, execute nothing");
    cmd_collect->add_option("--scratch-dir", collect.scratch_dir,
                            "directory for disk/io load files (default /tmp)");
    cmd_collect->add_option("--gen-plan-cpus", gen_n_cpu,
                            "generate a plan for this many processors");
    cmd_collect->add_option("--gen-plan-memory-mb", gen_memory_mb,
                            "generated plan memory ceiling (MB)");
    cmd_collect->add_flag("--gen-plan-sections-only", gen_sections_only,
                          "omit the cross-product phases from the generated plan");
    cmd_collect->add_option("--gen-plan-out", gen_plan_out,
                            "write the generated plan to this file");

    // select ----------------------------------------------------------------
    SelectOptions select;
    auto* cmd_select = app.add_subcommand("select", "rank variables by MIC against the target");
    cmd_select->add_option("dataset", select.dataset, "input dataset")->required();
    cmd_select->add_option("--out", select.out, "selection report file")->required();
    cmd_select->add_option("--target", select.target, "power column (default power_w)");
    cmd_select->add_option("--threshold", select.threshold,
                           "selection threshold on MIC (default 0.10)");

    // train -----------------------------------------------------------------
    TrainOptions train;
    std::string train_features_csv;
    double train_eta = 0.5;
    int train_epochs = 500, train_chunk = 50, train_hidden = 1, train_neurons = 0;
    std::uint64_t train_seed = 0;
    bool train_no_plateau = false;
    auto* cmd_train = app.add_subcommand("train", "fit a model and persist it");
    cmd_train->add_option("dataset", train.dataset, "input dataset")->required();
    cmd_train->add_option("--model", train.model_kind, "mlr | ret | mlp")->required();
    cmd_train->add_option("--out", train.out, "model file to write")->required();
    cmd_train->add_option("--target", train.target, "power column (default power_w)");
    cmd_train->add_option("--features", train_features_csv, "comma-separated feature names");
    cmd_train->add_option("--selection", train.selection_report,
                          "use the variables a selection report selected");
    cmd_train->add_option("--alpha", train.ret_alpha,
                          "regression tree complexity threshold (default 0.01)");
    cmd_train->add_option("--hidden-layers", train_hidden, "mlp hidden layers (default 1)");
    cmd_train->add_option("--neurons", train_neurons,
                          "mlp neurons per hidden layer (default 2x features)");
    cmd_train->add_option("--eta", train_eta, "mlp learning rate (default 0.5)");
    cmd_train->add_option("--chunk", train_chunk, "mlp chunk size (default 50)");
    cmd_train->add_option("--epochs", train_epochs, "mlp training epochs (default 500)");
    cmd_train->add_option("--seed", train_seed, "mlp weight/shuffle seed");
    cmd_train->add_flag("--no-plateau-stop", train_no_plateau,
                        "run every epoch even when training R^2 plateaus");
    cmd_train->add_option("--search", train.search_budget,
                          "try this many configuration-search candidates first");
    cmd_train->add_flag("--print-tree", train.print_tree, "print the fitted tree (ret)");

    // evaluate ----------------------------------------------------------------
    EvaluateOptions evaluate;
    std::string eval_features_csv;
    double eval_eta = 0.5;
    int eval_epochs = 500, eval_chunk = 50, eval_hidden = 1, eval_neurons = 0;
    auto* cmd_evaluate =
        app.add_subcommand("evaluate", "k-fold cross-validation metrics, or score a saved model");
    cmd_evaluate->add_option("dataset", evaluate.dataset, "input dataset")->required();
    cmd_evaluate->add_option("--out", evaluate.out, "report file to write")->required();
    cmd_evaluate->add_option("--model-kind", evaluate.model_kind,
                             "cross-validate this kind: mlr | ret | mlp");
    cmd_evaluate->add_option("--model-file", evaluate.model_file, "score this saved model");
    cmd_evaluate->add_option("--target", evaluate.target, "power column (default power_w)");
    cmd_evaluate->add_option("--features", eval_features_csv, "comma-separated feature names");
    cmd_evaluate->add_option("--selection", evaluate.selection_report,
                             "use the variables a selection report selected");
    cmd_evaluate->add_option("--k", evaluate.k, "fold count (default 10)");
    cmd_evaluate->add_option("--seed", evaluate.seed, "fold shuffle / mlp seed");
    cmd_evaluate->add_option("--alpha", evaluate.ret_alpha,
                             "regression tree complexity threshold");
    cmd_evaluate->add_option("--hidden-layers", eval_hidden, "mlp hidden layers");
    cmd_evaluate->add_option("--neurons", eval_neurons, "mlp neurons per hidden layer");
    cmd_evaluate->add_option("--eta", eval_eta, "mlp learning rate");
    cmd_evaluate->add_option("--chunk", eval_chunk, "mlp chunk size");
    cmd_evaluate->add_option("--epochs", eval_epochs, "mlp training epochs");

    // choose ------------------------------------------------------------------
    ChooseOptions choose;
    auto* cmd_choose =
        app.add_subcommand("choose", "rank evaluation reports and pick the best model");
    cmd_choose->add_option("reports", choose.reports, "evaluation report files")->required();
    cmd_choose->add_option("--out", choose.out, "write the ranking table here");

    // predict -----------------------------------------------------------------
    PredictOptions predict;
    auto* cmd_predict = app.add_subcommand("predict", "estimate watts for feature rows");
    cmd_predict->add_option("--model", predict.model_file, "model file")->required();
    cmd_predict->add_option("--input", predict.input,
                            "tabular input file, or '-' for streaming stdin (default)");
    cmd_predict->add_option("--out", predict.output, "output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (cmd_collect->parsed()) {
            if (gen_n_cpu > 0 || gen_memory_mb > 0) {
                const WorkloadPlan plan =
                    generate_workload_plan(gen_n_cpu, gen_memory_mb, !gen_sections_only);
                if (!gen_plan_out.empty()) {
                    write_plan(plan, gen_plan_out);
                    std::cout << "plan written: " << gen_plan_out << " (" << plan.phases.size()
                              << " phases)\n";
                    if (collect.plan_path.empty() && !collect.dry_run) return 0;
                    if (collect.plan_path.empty()) collect.plan_path = gen_plan_out;
                } else if (collect.dry_run) {
                    std::cout << format_plan(plan);
                    return 0;
                } else {
                    throw UsageError("generated plans need --gen-plan-out or --dry-run");
                }
            }
            collect.manifest = manifest;
            collect.argv = argv_vec;
            return run_collect(collect, std::cout, std::cerr);
        }
        if (cmd_select->parsed()) {
            select.manifest = manifest;
            select.argv = argv_vec;
            return run_select(select, std::cout, std::cerr);
        }
        if (cmd_train->parsed()) {
            split_csv_list(train_features_csv, train.features);
            train.mlp.learning_rate = train_eta;
            train.mlp.epochs = train_epochs;
            train.mlp.chunk_size = train_chunk;
            train.mlp.hidden_layers = train_hidden;
            train.mlp.seed = train_seed;
            train.mlp.stop_on_plateau = !train_no_plateau;
            if (train_neurons > 0) {
                train.mlp.neurons_per_hidden = train_neurons;
                train.mlp_auto_neurons = false;
            }
            train.manifest = manifest;
            train.argv = argv_vec;
            return run_train(train, std::cout, std::cerr);
        }
        if (cmd_evaluate->parsed()) {
            split_csv_list(eval_features_csv, evaluate.features);
            evaluate.mlp.learning_rate = eval_eta;
            evaluate.mlp.epochs = eval_epochs;
            evaluate.mlp.chunk_size = eval_chunk;
            evaluate.mlp.hidden_layers = eval_hidden;
            evaluate.mlp.seed = evaluate.seed;
            if (eval_neurons > 0) {
                evaluate.mlp.neurons_per_hidden = eval_neurons;
                evaluate.mlp_auto_neurons = false;
            }
            evaluate.manifest = manifest;
            evaluate.argv = argv_vec;
            return run_evaluate(evaluate, std::cout, std::cerr);
        }
        if (cmd_choose->parsed()) {
            choose.manifest = manifest;
            choose.argv = argv_vec;
            return run_choose(choose, std::cout, std::cerr);
        }
        if (cmd_predict->parsed()) {
            predict.manifest = manifest;
            predict.argv = argv_vec;
            return run_predict(predict, std::cin, std::cout, std::cerr);
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
