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

// Self-describing model documents (versioned JSON schema). Doubles are
// serialized with round-trip precision, so a loaded model predicts
// bit-identically to the in-memory one. Train once, deploy on any machine
// with a similar architecture profile.

#pragma once

#include "procwatt/cross_validation.hpp"
#include "procwatt/error.hpp"
#include "procwatt/linear_model.hpp"
#include "procwatt/mlp.hpp"
#include "procwatt/regression_tree.hpp"
#include "procwatt/version.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace procwatt {

inline constexpr std::string_view kModelSchema = "procwatt-model/1";

struct FittedModel {
    std::string kind; // "mlr" | "ret" | "mlp"
    std::string target;
    std::string dataset_label;
    std::string tool_version{kToolVersion};
    std::variant<LinearModel, TreeModel, MlpModel> model;

    const std::vector<std::string>& features() const {
        if (const auto* m = std::get_if<LinearModel>(&model)) return m->feature_names;
        if (const auto* m = std::get_if<TreeModel>(&model)) return m->feature_names;
        return std::get<MlpModel>(model).feature_names;
    }
};

namespace detail {

using json = nlohmann::json;

inline json tree_node_to_json(const TreeModel& m, const TreeNode& node) {
    if (node.is_leaf())
        return json{{"predict", node.prediction}, {"n", node.n}};
    return json{{"feature", m.feature_names[static_cast<std::size_t>(node.feature)]},
                {"split", node.split_value},
                {"n", node.n},
                {"left", tree_node_to_json(m, *node.left)},
                {"right", tree_node_to_json(m, *node.right)}};
}

inline std::unique_ptr<TreeNode> tree_node_from_json(const json& j,
                                                     const std::vector<std::string>& features) {
    auto node = std::make_unique<TreeNode>();
    node->n = j.at("n").get<std::size_t>();
    if (j.contains("predict")) {
        node->prediction = j.at("predict").get<double>();
        return node;
    }
    const std::string fname = j.at("feature").get<std::string>();
    const auto it = std::find(features.begin(), features.end(), fname);
    if (it == features.end())
        throw Error("model document: split on unknown feature '" + fname + "'");
    node->feature = static_cast<int>(it - features.begin());
    node->split_value = j.at("split").get<double>();
    node->left = tree_node_from_json(j.at("left"), features);
    node->right = tree_node_from_json(j.at("right"), features);
    return node;
}

inline json recipe_to_json(const NormalizationRecipe& r) {
    json vars = json::array();
    for (const auto& v : r.variables())
        vars.push_back(json{{"name", v.name}, {"offset", v.offset}, {"scale", v.scale}});
    return json{{"lo", r.lo()}, {"hi", r.hi()}, {"variables", vars}};
}

inline NormalizationRecipe recipe_from_json(const json& j) {
    std::vector<VariableScale> vars;
    for (const auto& v : j.at("variables"))
        vars.push_back(VariableScale{v.at("name").get<std::string>(),
                                     v.at("offset").get<double>(), v.at("scale").get<double>()});
    return NormalizationRecipe(j.at("lo").get<double>(), j.at("hi").get<double>(),
                               std::move(vars));
}

} // namespace detail

inline void save_model(const FittedModel& fm, const std::string& path) {
    using detail::json;
    json doc;
    doc["schema"] = std::string(kModelSchema);
    doc["kind"] = fm.kind;
    doc["target"] = fm.target;
    doc["features"] = fm.features();
    doc["provenance"] =
        json{{"dataset_label", fm.dataset_label}, {"tool_version", fm.tool_version}};

    if (const auto* m = std::get_if<LinearModel>(&fm.model)) {
        doc["params"] = json{{"intercept", m->intercept},
                             {"coefficients", m->coefficients},
                             {"residual_mean", m->residual_mean},
                             {"warnings", m->warnings}};
    } else if (const auto* m = std::get_if<TreeModel>(&fm.model)) {
        doc["params"] = json{{"alpha", m->alpha}, {"root", detail::tree_node_to_json(*m, *m->root)}};
    } else {
        const auto& mlp = std::get<MlpModel>(fm.model);
        json layers = json::array();
        for (const auto& l : mlp.layers)
            layers.push_back(json{{"inputs", l.inputs},
                                  {"outputs", l.outputs},
                                  {"weights", l.weights},
                                  {"bias", l.bias}});
        doc["params"] = json{{"layers", layers},
                             {"recipe", detail::recipe_to_json(mlp.recipe)},
                             {"config", json{{"hidden_layers", mlp.config.hidden_layers},
                                             {"neurons_per_hidden", mlp.config.neurons_per_hidden},
                                             {"learning_rate", mlp.config.learning_rate},
                                             {"chunk_size", mlp.config.chunk_size},
                                             {"epochs", mlp.config.epochs},
                                             {"seed", mlp.config.seed},
                                             {"stop_on_plateau", mlp.config.stop_on_plateau}}}};
    }

    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write model: " + path);
    out << doc.dump(2) << '\n';
}

inline FittedModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open model: " + path);
    detail::json doc;
    try {
        in >> doc;
    } catch (const std::exception& e) {
        throw Error(path + ": not a model document: " + e.what());
    }
    if (doc.value("schema", "") != kModelSchema)
        throw Error(path + ": unsupported model schema '" + doc.value("schema", "") + "'");

    FittedModel fm;
    fm.kind = doc.at("kind").get<std::string>();
    fm.target = doc.at("target").get<std::string>();
    const auto features = doc.at("features").get<std::vector<std::string>>();
    const auto& prov = doc.at("provenance");
    fm.dataset_label = prov.value("dataset_label", "");
    fm.tool_version = prov.value("tool_version", "");
    const auto& params = doc.at("params");

    if (fm.kind == "mlr") {
        LinearModel m;
        m.feature_names = features;
        m.intercept = params.at("intercept").get<double>();
        m.coefficients = params.at("coefficients").get<std::vector<double>>();
        m.residual_mean = params.at("residual_mean").get<double>();
        m.warnings = params.value("warnings", std::vector<std::string>{});
        if (m.coefficients.size() != features.size())
            throw Error(path + ": coefficient/feature arity mismatch");
        fm.model = std::move(m);
    } else if (fm.kind == "ret") {
        TreeModel m;
        m.feature_names = features;
        m.alpha = params.at("alpha").get<double>();
        m.root = detail::tree_node_from_json(params.at("root"), features);
        fm.model = std::move(m);
    } else if (fm.kind == "mlp") {
        MlpModel m;
        m.feature_names = features;
        m.recipe = detail::recipe_from_json(params.at("recipe"));
        const auto& cfg = params.at("config");
        m.config.hidden_layers = cfg.at("hidden_layers").get<int>();
        m.config.neurons_per_hidden = cfg.at("neurons_per_hidden").get<int>();
        m.config.learning_rate = cfg.at("learning_rate").get<double>();
        m.config.chunk_size = cfg.at("chunk_size").get<int>();
        m.config.epochs = cfg.at("epochs").get<int>();
        m.config.seed = cfg.at("seed").get<std::uint64_t>();
        m.config.stop_on_plateau = cfg.value("stop_on_plateau", true);
        for (const auto& lj : params.at("layers")) {
            MlpLayer l;
            l.inputs = lj.at("inputs").get<std::size_t>();
            l.outputs = lj.at("outputs").get<std::size_t>();
            l.weights = lj.at("weights").get<std::vector<double>>();
            l.bias = lj.at("bias").get<std::vector<double>>();
            if (l.weights.size() != l.inputs * l.outputs || l.bias.size() != l.outputs)
                throw Error(path + ": malformed layer shape");
            m.layers.push_back(std::move(l));
        }
        if (m.layers.empty()) throw Error(path + ": model has no layers");
        fm.model = std::move(m);
    } else {
        throw Error(path + ": unknown model kind '" + fm.kind + "'");
    }
    return fm;
}

/// Wraps a fitted model as a raw-feature predictor.
inline PredictFn make_predictor(std::shared_ptr<const FittedModel> fm) {
    if (fm->kind == "mlr")
        return [fm](std::span<const double> x) {
            return predict_mlr(std::get<LinearModel>(fm->model), x);
        };
    if (fm->kind == "ret")
        return [fm](std::span<const double> x) {
            return predict_ret(std::get<TreeModel>(fm->model), x);
        };
    return [fm](std::span<const double> x) {
        return predict_mlp(std::get<MlpModel>(fm->model), x);
    };
}

} // namespace procwatt
