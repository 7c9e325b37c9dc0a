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

#include "procwatt/model_io.hpp"

#include "test_support.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <memory>
#include <vector>

using namespace procwatt;
using testsupport::make_dataset;
using testsupport::TempDir;

namespace {

Dataset training_data(Rng& rng, std::size_t n) {
    std::vector<double> a(n), b(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        a[i] = rng.uniform01();
        b[i] = rng.uniform01();
        y[i] = 50.0 + 12.0 * a[i] - 4.0 * b[i] + rng.gaussian() * 0.5;
    }
    return make_dataset({"a", "b", "power_w"}, {a, b, y});
}

} // namespace

TEST_CASE("every model kind predicts bit-identically after a save/load cycle") {
    Rng rng(611);
    const Dataset d = training_data(rng, 200);
    const std::vector<std::string> features{"a", "b"};
    TempDir tmp;

    std::vector<std::vector<double>> probes;
    for (int i = 0; i < 25; ++i)
        probes.push_back({rng.uniform(-0.5, 1.5), rng.uniform(-0.5, 1.5)});

    const auto roundtrip = [&](FittedModel fm, const std::string& name) {
        std::vector<double> before;
        {
            auto shared = std::make_shared<const FittedModel>(std::move(fm));
            const auto predict = make_predictor(shared);
            for (const auto& p : probes) before.push_back(predict(p));
            save_model(*shared, tmp.file(name));
        }
        auto loaded = std::make_shared<const FittedModel>(load_model(tmp.file(name)));
        const auto predict = make_predictor(loaded);
        for (std::size_t i = 0; i < probes.size(); ++i) {
            const double after = predict(probes[i]);
            CHECK(after == before[i]); // bitwise, not approximate
        }
    };

    {
        FittedModel fm;
        fm.kind = "mlr";
        fm.target = "power_w";
        fm.dataset_label = "A1";
        fm.model = fit_mlr(d, "power_w", features);
        roundtrip(std::move(fm), "mlr.json");
    }
    {
        FittedModel fm;
        fm.kind = "ret";
        fm.target = "power_w";
        fm.model = fit_ret(d, "power_w", features, 0.005);
        roundtrip(std::move(fm), "ret.json");
    }
    {
        MlpConfig cfg;
        cfg.hidden_layers = 2;
        cfg.neurons_per_hidden = 5;
        cfg.learning_rate = 0.4;
        cfg.chunk_size = 20;
        cfg.epochs = 15;
        cfg.seed = 9;
        FittedModel fm;
        fm.kind = "mlp";
        fm.target = "power_w";
        fm.model = train_mlp(d, "power_w", features, cfg);
        roundtrip(std::move(fm), "mlp.json");
    }
}

TEST_CASE("model documents carry schema, provenance and warnings") {
    Rng rng(612);
    const Dataset d = training_data(rng, 60);
    TempDir tmp;
    FittedModel fm;
    fm.kind = "mlr";
    fm.target = "power_w";
    fm.dataset_label = "Mix";
    LinearModel m = fit_mlr(d, "power_w", {"a", "b"});
    m.warnings.push_back("synthetic warning");
    fm.model = std::move(m);
    save_model(fm, tmp.file("m.json"));

    const FittedModel back = load_model(tmp.file("m.json"));
    CHECK(back.kind == "mlr");
    CHECK(back.target == "power_w");
    CHECK(back.dataset_label == "Mix");
    CHECK(back.tool_version == kToolVersion);
    CHECK(std::get<LinearModel>(back.model).warnings ==
          std::vector<std::string>{"synthetic warning"});
}

TEST_CASE("loading rejects foreign or malformed documents") {
    TempDir tmp;
    testsupport::write_file(tmp.file("junk.json"), "{\"schema\": \"other/9\"}");
    CHECK_THROWS_WITH(load_model(tmp.file("junk.json")),
                      Catch::Matchers::ContainsSubstring("schema"));
    testsupport::write_file(tmp.file("notjson.json"), "hello");
    CHECK_THROWS_AS(load_model(tmp.file("notjson.json")), Error);
    CHECK_THROWS_AS(load_model(tmp.file("missing.json")), Error);
}

TEST_CASE("tree documents rebuild the routing structure exactly") {
    // A hand-built stump: x <= 5 -> 10 W else 30 W.
    TreeModel tree;
    tree.feature_names = {"x"};
    tree.alpha = 0.01;
    tree.root = std::make_unique<TreeNode>();
    tree.root->feature = 0;
    tree.root->split_value = 5.0;
    tree.root->n = 4;
    tree.root->left = std::make_unique<TreeNode>();
    tree.root->left->prediction = 10.0;
    tree.root->left->n = 2;
    tree.root->right = std::make_unique<TreeNode>();
    tree.root->right->prediction = 30.0;
    tree.root->right->n = 2;

    FittedModel fm;
    fm.kind = "ret";
    fm.target = "power_w";
    fm.model = std::move(tree);
    TempDir tmp;
    save_model(fm, tmp.file("t.json"));
    const FittedModel back = load_model(tmp.file("t.json"));
    const auto& t = std::get<TreeModel>(back.model);
    REQUIRE_FALSE(t.root->is_leaf());
    CHECK(t.root->split_value == 5.0);
    CHECK(t.root->left->prediction == 10.0);
    CHECK(t.root->right->prediction == 30.0);
    CHECK(t.root->n == 4);
}
