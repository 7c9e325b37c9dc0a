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

// Multilayer perceptron with tanh activation at every layer, including the
// output. Because the output unit is bounded, inputs and the target are
// min-max scaled into [-0.9, 0.9] (the margin keeps training away from the
// asymptotes) and the recipe rides along in the model.
//
// Training is mini-batch ("chunk") gradient descent on the squared error
// 0.5 * (desired - output)^2: gradients accumulate over chunk_size samples,
// then weights move by learning_rate / chunk_size times the accumulated
// loss gradient; the trailing partial chunk updates the same way. Sample
// order is reshuffled each epoch from the seeded generator, so a (seed,
// data, config) triple always reproduces the identical model.

#pragma once

#include "procwatt/dataset.hpp"
#include "procwatt/error.hpp"
#include "procwatt/normalize.hpp"
#include "procwatt/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace procwatt {

inline constexpr double kMlpNormLo = -0.9;
inline constexpr double kMlpNormHi = 0.9;

struct MlpConfig {
    int hidden_layers = 1;
    int neurons_per_hidden = 8;
    double learning_rate = 0.5;
    int chunk_size = 50;
    int epochs = 500;
    std::uint64_t seed = 0;
    // Stop early when training R^2 gained less than plateau_improvement
    // over the last plateau_window epochs.
    bool stop_on_plateau = true;
    double plateau_improvement = 1e-5;
    int plateau_window = 20;

    void validate() const {
        if (hidden_layers < 1) throw Error("mlp: hidden_layers must be >= 1");
        if (neurons_per_hidden < 1) throw Error("mlp: neurons_per_hidden must be >= 1");
        if (!(learning_rate > 0.0)) throw Error("mlp: learning_rate must be > 0");
        if (chunk_size < 1) throw Error("mlp: chunk_size must be >= 1");
        if (epochs < 1) throw Error("mlp: epochs must be >= 1");
    }
};

struct MlpLayer {
    std::size_t inputs = 0;
    std::size_t outputs = 0;
    std::vector<double> weights; // row-major: weights[j * inputs + i]
    std::vector<double> bias;    // one per output neuron
};

struct MlpModel {
    std::vector<MlpLayer> layers; // hidden layers, then the output layer
    std::vector<std::string> feature_names;
    // Normalization over feature columns in order, with the target last.
    NormalizationRecipe recipe;
    MlpConfig config; // provenance: settings and seed that produced the weights

    std::size_t input_width() const { return layers.front().inputs; }
    std::size_t output_width() const { return layers.back().outputs; }
};

struct ForwardState {
    // activations[0] is the input; activations[l + 1] is layer l's output.
    std::vector<std::vector<double>> activations;
    // locals[l] holds layer l's pre-activation (induced field) vector.
    std::vector<std::vector<double>> locals;

    double output() const { return activations.back().front(); }
};

struct MlpGradients {
    // dLoss/dWeight and dLoss/dBias, shaped like the model's layers.
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> bias;
};

namespace detail {

/// tanh pinned strictly inside (-1, 1); the true function saturates to
/// exactly +-1.0 in floating point for |v| > ~19.
inline double squash(double v) {
    const double y = std::tanh(v);
    if (y >= 1.0) return std::nextafter(1.0, 0.0);
    if (y <= -1.0) return std::nextafter(-1.0, 0.0);
    return y;
}

} // namespace detail

/// Fresh network of shape inputs -> neurons^hidden_layers -> 1. Weights and
/// biases draw from a standard Gaussian rejected into (0, 1): layer by
/// layer, weights in row-major order first, then biases.
inline MlpModel make_mlp(std::size_t inputs, int hidden_layers, int neurons_per_hidden,
                         Rng& rng) {
    if (inputs == 0) throw Error("mlp: network needs at least one input");
    MlpModel m;
    std::size_t prev = inputs;
    for (int l = 0; l < hidden_layers + 1; ++l) {
        const std::size_t width =
            l < hidden_layers ? static_cast<std::size_t>(neurons_per_hidden) : 1;
        MlpLayer layer;
        layer.inputs = prev;
        layer.outputs = width;
        layer.weights.resize(width * prev);
        layer.bias.resize(width);
        for (auto& w : layer.weights) w = rng.gaussian_unit_interval();
        for (auto& b : layer.bias) b = rng.gaussian_unit_interval();
        m.layers.push_back(std::move(layer));
        prev = width;
    }
    return m;
}

/// Propagates a normalized input through every layer, keeping activations
/// and induced fields for the backward pass.
inline ForwardState forward(const MlpModel& m, std::span<const double> x) {
    if (x.size() != m.input_width())
        throw Error("mlp forward: expected " +
                    to_text(static_cast<std::int64_t>(m.input_width())) + " inputs, got " +
                    to_text(static_cast<std::int64_t>(x.size())));
    ForwardState st;
    st.activations.reserve(m.layers.size() + 1);
    st.locals.reserve(m.layers.size());
    st.activations.emplace_back(x.begin(), x.end());
    for (const auto& layer : m.layers) {
        const auto& prev = st.activations.back();
        std::vector<double> field(layer.outputs);
        std::vector<double> act(layer.outputs);
        for (std::size_t j = 0; j < layer.outputs; ++j) {
            double v = layer.bias[j];
            const double* w = &layer.weights[j * layer.inputs];
            for (std::size_t i = 0; i < layer.inputs; ++i) v += w[i] * prev[i];
            field[j] = v;
            act[j] = detail::squash(v);
        }
        st.locals.push_back(std::move(field));
        st.activations.push_back(std::move(act));
    }
    return st;
}

inline MlpGradients make_gradients(const MlpModel& m) {
    MlpGradients g;
    for (const auto& layer : m.layers) {
        g.weights.emplace_back(layer.weights.size(), 0.0);
        g.bias.emplace_back(layer.bias.size(), 0.0);
    }
    return g;
}

inline void zero_gradients(MlpGradients& g) {
    for (auto& w : g.weights) std::fill(w.begin(), w.end(), 0.0);
    for (auto& b : g.bias) std::fill(b.begin(), b.end(), 0.0);
}

/// Accumulates the gradient of 0.5 * sum_j (desired_j - output_j)^2 with
/// respect to every weight and bias into `acc`. The error signal
/// e_j = d_j - o_j propagates backward with phi'(v) = 1 - tanh(v)^2.
inline void backward(const MlpModel& m, const ForwardState& st, std::span<const double> desired,
                     MlpGradients& acc) {
    const std::size_t layer_count = m.layers.size();
    if (desired.size() != m.output_width())
        throw Error("mlp backward: desired vector arity mismatch");

    std::vector<double> delta;  // dLoss/dField of the current layer
    std::vector<double> next_delta;

    for (std::size_t li = layer_count; li-- > 0;) {
        const auto& layer = m.layers[li];
        const auto& out = st.activations[li + 1];
        const auto& in = st.activations[li];
        next_delta.assign(layer.outputs, 0.0);

        if (li + 1 == layer_count) {
            for (std::size_t j = 0; j < layer.outputs; ++j) {
                const double err = desired[j] - out[j];
                next_delta[j] = -err * (1.0 - out[j] * out[j]);
            }
        } else {
            const auto& above = m.layers[li + 1];
            for (std::size_t j = 0; j < layer.outputs; ++j) {
                double s = 0.0;
                for (std::size_t k = 0; k < above.outputs; ++k)
                    s += delta[k] * above.weights[k * above.inputs + j];
                next_delta[j] = s * (1.0 - out[j] * out[j]);
            }
        }

        auto& gw = acc.weights[li];
        auto& gb = acc.bias[li];
        for (std::size_t j = 0; j < layer.outputs; ++j) {
            const double dj = next_delta[j];
            double* row = &gw[j * layer.inputs];
            for (std::size_t i = 0; i < layer.inputs; ++i) row[i] += dj * in[i];
            gb[j] += dj;
        }
        delta = next_delta;
    }
}

/// w -= scale * g for every weight and bias.
inline void apply_update(MlpModel& m, const MlpGradients& g, double scale) {
    for (std::size_t li = 0; li < m.layers.size(); ++li) {
        auto& layer = m.layers[li];
        for (std::size_t i = 0; i < layer.weights.size(); ++i)
            layer.weights[i] -= scale * g.weights[li][i];
        for (std::size_t i = 0; i < layer.bias.size(); ++i)
            layer.bias[i] -= scale * g.bias[li][i];
    }
}

struct MlpTrainInfo {
    std::vector<double> epoch_mse; // normalized-scale mean squared error
    std::vector<double> epoch_r2;
    int epochs_run = 0;
};

namespace detail {

/// Divergence guard, run after every epoch: a non-finite loss or any
/// non-finite parameter aborts training naming the epoch (1-based).
inline void check_training_health(double epoch_mse, const MlpModel& m, int epoch) {
    bool healthy = std::isfinite(epoch_mse);
    for (std::size_t li = 0; healthy && li < m.layers.size(); ++li) {
        for (double w : m.layers[li].weights)
            if (!std::isfinite(w)) {
                healthy = false;
                break;
            }
        for (double b : m.layers[li].bias)
            if (!std::isfinite(b)) {
                healthy = false;
                break;
            }
    }
    if (!healthy)
        throw Error("train_mlp: training diverged at epoch " +
                    to_text(static_cast<std::int64_t>(epoch)));
}

} // namespace detail

inline MlpModel train_mlp(const Dataset& d, std::string_view target,
                          const std::vector<std::string>& features, const MlpConfig& cfg,
                          MlpTrainInfo* info = nullptr) {
    cfg.validate();
    if (features.empty()) throw Error("train_mlp: empty feature list");
    for (const auto& f : features)
        if (f == target) throw Error("train_mlp: feature list contains the target");
    const std::size_t n = d.n_rows();
    if (n < static_cast<std::size_t>(cfg.chunk_size))
        throw Error("train_mlp: " + to_text(static_cast<std::int64_t>(n)) +
                    " rows is fewer than the chunk size " + to_text(static_cast<std::int64_t>(cfg.chunk_size)));

    std::vector<std::string> recipe_vars = features;
    recipe_vars.push_back(std::string(target));

    MlpModel m;
    m.feature_names = features;
    m.recipe = fit_normalizer(d, kMlpNormLo, kMlpNormHi, recipe_vars);
    m.config = cfg;

    const std::size_t f = features.size();
    std::vector<std::size_t> feat_idx(f);
    for (std::size_t j = 0; j < f; ++j) feat_idx[j] = d.variable_index(features[j]);
    const std::size_t target_idx = d.variable_index(target);

    std::vector<double> inputs(n * f);
    std::vector<double> desired(n);
    for (std::size_t r = 0; r < n; ++r) {
        const auto& row = d.rows()[r];
        for (std::size_t j = 0; j < f; ++j)
            inputs[r * f + j] = m.recipe.apply(j, row.values[feat_idx[j]]);
        desired[r] = m.recipe.apply(f, row.values[target_idx]);
    }

    Rng rng(cfg.seed);
    {
        MlpModel fresh = make_mlp(f, cfg.hidden_layers, cfg.neurons_per_hidden, rng);
        m.layers = std::move(fresh.layers);
    }

    double sst = 0.0;
    {
        const MeanSd ms = mean_sd(desired);
        for (double v : desired) sst += (v - ms.mean) * (v - ms.mean);
    }

    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    MlpGradients grads = make_gradients(m);
    std::vector<double> r2_history;
    const double chunk = static_cast<double>(cfg.chunk_size);

    int epochs_run = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        zero_gradients(grads);
        double sse = 0.0;
        std::size_t in_chunk = 0;
        for (std::size_t s = 0; s < n; ++s) {
            const std::uint32_t r = order[s];
            const std::span<const double> x(&inputs[r * f], f);
            const ForwardState st = forward(m, x);
            const double want = desired[r];
            const double err = want - st.output();
            sse += err * err;
            backward(m, st, std::span<const double>(&want, 1), grads);
            if (++in_chunk == static_cast<std::size_t>(cfg.chunk_size) || s + 1 == n) {
                apply_update(m, grads, cfg.learning_rate / chunk);
                zero_gradients(grads);
                in_chunk = 0;
            }
        }
        ++epochs_run;

        const double mse = sse / static_cast<double>(n);
        detail::check_training_health(mse, m, epoch + 1);
        const double r2 = sst > 0.0 ? 1.0 - sse / sst : 0.0;
        r2_history.push_back(r2);
        if (info) {
            info->epoch_mse.push_back(mse);
            info->epoch_r2.push_back(r2);
        }

        if (cfg.stop_on_plateau &&
            r2_history.size() > static_cast<std::size_t>(cfg.plateau_window)) {
            const double past = r2_history[r2_history.size() - 1 -
                                           static_cast<std::size_t>(cfg.plateau_window)];
            if (r2 - past < cfg.plateau_improvement) break;
        }
    }
    if (info) info->epochs_run = epochs_run;
    return m;
}

/// Normalizes a raw feature vector, runs the network, and maps the bounded
/// output back to watts through the recorded target scaling.
inline double predict_mlp(const MlpModel& m, std::span<const double> x_raw) {
    const std::size_t f = m.feature_names.size();
    if (x_raw.size() != f)
        throw Error("predict_mlp: expected " + to_text(static_cast<std::int64_t>(f)) +
                    " features, got " + to_text(static_cast<std::int64_t>(x_raw.size())));
    std::vector<double> x(f);
    for (std::size_t j = 0; j < f; ++j) x[j] = m.recipe.apply(j, x_raw[j]);
    const ForwardState st = forward(m, x);
    return m.recipe.invert(f, st.output());
}

/// Grid search over network shape and learning rate, scored by training R^2
/// on a seeded ~20% subsample. Learning rates sweep 0.25..10 in steps of
/// 0.25; neuron counts sweep v/10..2v (v = feature count) in steps of
/// ~v/10; hidden layer counts grow from 1 until the level's best score
/// drops. Diverging candidates score -inf. `budget` caps the number of
/// candidates trained; ties prefer the smaller network.
inline MlpConfig configuration_search(const Dataset& d, std::string_view target,
                                      const std::vector<std::string>& features,
                                      std::size_t budget, const MlpConfig& base) {
    if (budget == 0) throw Error("configuration_search: budget must be >= 1");
    if (features.empty()) throw Error("configuration_search: empty feature list");
    const std::size_t n = d.n_rows();

    std::size_t sub_n = static_cast<std::size_t>(std::llround(0.2 * static_cast<double>(n)));
    sub_n = std::max<std::size_t>(sub_n, static_cast<std::size_t>(base.chunk_size));
    if (sub_n > n)
        throw Error("configuration_search: dataset cannot supply a subsample of " +
                    to_text(static_cast<std::int64_t>(sub_n)) + " rows");

    Rng rng(base.seed);
    std::vector<std::uint32_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0u);
    rng.shuffle(idx);
    Dataset sub(d.variables(), d.label());
    for (std::size_t i = 0; i < sub_n; ++i) {
        const auto& row = d.rows()[idx[i]];
        sub.append_row(row.ts_ms, row.values);
    }

    const auto y = sub.column(target);
    const MeanSd ms = mean_sd(y);
    double sst = 0.0;
    for (double v : y) sst += (v - ms.mean) * (v - ms.mean);
    if (sst <= 0.0) throw Error("configuration_search: constant target on the subsample");

    const int v = static_cast<int>(features.size());
    const int neuron_lo = std::max(1, (v + 9) / 10);
    const int neuron_hi = std::max(neuron_lo, 2 * v);
    const int neuron_step = std::max(1, v / 10);
    std::vector<int> neuron_grid;
    for (int m = neuron_lo; m <= neuron_hi; m += neuron_step) neuron_grid.push_back(m);
    if (neuron_grid.back() != neuron_hi) neuron_grid.push_back(neuron_hi);

    std::vector<double> eta_grid;
    for (int i = 1; i <= 40; ++i) eta_grid.push_back(0.25 * i);

    const auto params_of = [&](const MlpConfig& c) {
        const std::size_t width = static_cast<std::size_t>(c.neurons_per_hidden);
        std::size_t total = static_cast<std::size_t>(v) * width + width; // input layer
        for (int l = 1; l < c.hidden_layers; ++l) total += width * width + width;
        total += width + 1; // output layer
        return total;
    };

    bool have_best = false;
    MlpConfig best = base;
    double best_score = -std::numeric_limits<double>::infinity();
    std::size_t evaluated = 0;
    double prev_level_best = -std::numeric_limits<double>::infinity();

    for (int h = 1;; ++h) {
        double level_best = -std::numeric_limits<double>::infinity();
        bool level_ran = false;
        for (int m_count : neuron_grid) {
            for (double eta : eta_grid) {
                if (evaluated >= budget) break;
                ++evaluated;
                level_ran = true;

                MlpConfig cand = base;
                cand.hidden_layers = h;
                cand.neurons_per_hidden = m_count;
                cand.learning_rate = eta;

                double score = -std::numeric_limits<double>::infinity();
                try {
                    const MlpModel model = train_mlp(sub, target, features, cand);
                    std::vector<std::size_t> fidx(features.size());
                    for (std::size_t j = 0; j < features.size(); ++j)
                        fidx[j] = sub.variable_index(features[j]);
                    const std::size_t tidx = sub.variable_index(target);
                    double sse = 0.0;
                    std::vector<double> x(features.size());
                    for (const auto& row : sub.rows()) {
                        for (std::size_t j = 0; j < features.size(); ++j)
                            x[j] = row.values[fidx[j]];
                        const double err = row.values[tidx] - predict_mlp(model, x);
                        sse += err * err;
                    }
                    if (std::isfinite(sse)) score = 1.0 - sse / sst;
                } catch (const Error&) {
                    // diverged; keep -inf
                }

                level_best = std::max(level_best, score);
                bool take = !have_best || score > best_score;
                if (have_best && score == best_score) {
                    // Tie: prefer the smaller network.
                    take = std::tuple(params_of(cand), cand.hidden_layers,
                                      cand.neurons_per_hidden, cand.learning_rate) <
                           std::tuple(params_of(best), best.hidden_layers,
                                      best.neurons_per_hidden, best.learning_rate);
                }
                if (take) {
                    have_best = true;
                    best = cand;
                    best_score = score;
                }
            }
            if (evaluated >= budget) break;
        }
        if (!level_ran) break;
        if (evaluated >= budget) break;
        if (h > 1 && level_best < prev_level_best) break; // precision started dropping
        prev_level_best = level_best;
    }

    if (!have_best) throw Error("configuration_search: no candidate could be evaluated");
    return best;
}

} // namespace procwatt
