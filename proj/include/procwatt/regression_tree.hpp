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

// CART-style regression tree. A split's gain is the drop in within-node sum
// of squared errors, I = e_parent - (e_left + e_right); candidates are the
// midpoints between consecutive distinct sorted values of each feature.
//
// Growth stops by a complexity rule: a node is expanded only when
// I / (n_left + n_right + 1), taken relative to the root's per-element
// impurity e_root / (N + 1), exceeds alpha. The relative form keeps alpha a
// unitless fraction (default 1%) regardless of the target's scale, matching
// the usual complexity-parameter convention for recursive partitioning.

#pragma once

#include "procwatt/dataset.hpp"
#include "procwatt/error.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace procwatt {

struct TreeNode {
    // Internal node when left && right are set; leaf otherwise.
    int feature = -1; // index into TreeModel::feature_names
    double split_value = 0.0;
    std::unique_ptr<TreeNode> left;
    std::unique_ptr<TreeNode> right;

    double prediction = 0.0; // leaf: mean of the training targets routed here
    std::size_t n = 0;       // training rows routed through this node

    bool is_leaf() const { return !left; }
};

struct TreeModel {
    std::unique_ptr<TreeNode> root;
    double alpha = 0.01;
    std::vector<std::string> feature_names;
};

struct SplitCandidate {
    bool found = false;
    std::size_t feature = 0; // index into the feature list handed to the search
    double split_value = 0.0;
    double gain = 0.0; // e_parent - (e_left + e_right)
};

namespace detail {

/// SSE gain of splitting `idx` at (feature column, split value), evaluated
/// by a plain two-pass sweep in row order. Canonical: any two candidates
/// inducing the same partition produce bit-identical gains, so cross-feature
/// tie-breaking is stable.
inline double split_gain_two_pass(const std::vector<double>& col,
                                  const std::vector<double>& target,
                                  std::span<const std::uint32_t> idx, double split,
                                  double parent_sse) {
    double sum_l = 0.0, sum_r = 0.0;
    std::size_t n_l = 0, n_r = 0;
    for (auto i : idx) {
        if (col[i] <= split) {
            sum_l += target[i];
            ++n_l;
        } else {
            sum_r += target[i];
            ++n_r;
        }
    }
    const double mean_l = sum_l / static_cast<double>(n_l);
    const double mean_r = sum_r / static_cast<double>(n_r);
    double sse_l = 0.0, sse_r = 0.0;
    for (auto i : idx) {
        if (col[i] <= split) {
            const double dv = target[i] - mean_l;
            sse_l += dv * dv;
        } else {
            const double dv = target[i] - mean_r;
            sse_r += dv * dv;
        }
    }
    return parent_sse - (sse_l + sse_r);
}

/// Best split over the rows listed in `idx`. Columns are parallel arrays of
/// all rows; idx selects the node's subset. Each feature's winner is found
/// with prefix sums, then re-scored canonically so ties across features
/// break on (feature name, lower split value) without floating-point
/// order artifacts.
inline SplitCandidate best_split_rows(const std::vector<std::vector<double>>& columns,
                                      const std::vector<std::string>& names,
                                      const std::vector<double>& target,
                                      std::span<const std::uint32_t> idx) {
    SplitCandidate best;
    const std::size_t count = idx.size();
    if (count < 2) return best;

    double mean = 0.0;
    for (auto i : idx) mean += target[i];
    mean /= static_cast<double>(count);
    double parent_sse = 0.0;
    for (auto i : idx) {
        const double dv = target[i] - mean;
        parent_sse += dv * dv;
    }
    if (parent_sse <= 0.0) return best; // constant target: nothing to gain

    std::vector<std::uint32_t> order(idx.begin(), idx.end());
    std::vector<double> prefix_sum(count + 1), prefix_sq(count + 1);

    for (std::size_t f = 0; f < columns.size(); ++f) {
        const auto& col = columns[f];
        std::stable_sort(order.begin(), order.end(),
                         [&](std::uint32_t a, std::uint32_t b) { return col[a] < col[b]; });

        // Prefix sums over mean-centered targets keep the SSE difference
        // formula well conditioned.
        prefix_sum[0] = prefix_sq[0] = 0.0;
        for (std::size_t r = 0; r < count; ++r) {
            const double cy = target[order[r]] - mean;
            prefix_sum[r + 1] = prefix_sum[r] + cy;
            prefix_sq[r + 1] = prefix_sq[r] + cy * cy;
        }
        const double total_sum = prefix_sum[count];
        const double total_sq = prefix_sq[count];

        bool feature_found = false;
        double feature_gain = 0.0, feature_split = 0.0;
        for (std::size_t r = 1; r < count; ++r) {
            if (col[order[r]] == col[order[r - 1]]) continue; // not a boundary
            const double nl = static_cast<double>(r);
            const double nr = static_cast<double>(count - r);
            const double sse_l = prefix_sq[r] - prefix_sum[r] * prefix_sum[r] / nl;
            const double rsum = total_sum - prefix_sum[r];
            const double sse_r = (total_sq - prefix_sq[r]) - rsum * rsum / nr;
            const double gain = parent_sse - (sse_l + sse_r);
            const double split = col[order[r - 1]] + (col[order[r]] - col[order[r - 1]]) / 2.0;
            if (!feature_found || gain > feature_gain) {
                feature_found = true;
                feature_gain = gain;
                feature_split = split;
            }
        }
        if (!feature_found) continue;

        const double gain = split_gain_two_pass(col, target, idx, feature_split, parent_sse);
        if (gain <= 0.0) continue;
        bool better = !best.found || gain > best.gain;
        if (best.found && gain == best.gain) {
            if (names[f] != names[best.feature])
                better = names[f] < names[best.feature];
            else
                better = feature_split < best.split_value;
        }
        if (better) {
            best.found = true;
            best.feature = f;
            best.split_value = feature_split;
            best.gain = gain;
        }
    }
    return best;
}

inline std::unique_ptr<TreeNode> grow(const std::vector<std::vector<double>>& columns,
                                      const std::vector<std::string>& names,
                                      const std::vector<double>& target,
                                      std::vector<std::uint32_t>& idx, double alpha,
                                      double root_unit_sse) {
    auto node = std::make_unique<TreeNode>();
    node->n = idx.size();

    double mean = 0.0;
    for (auto i : idx) mean += target[i];
    mean /= static_cast<double>(idx.size());
    node->prediction = mean;

    if (idx.size() < 2) return node;

    const auto split = best_split_rows(columns, names, target, idx);
    if (!split.found) return node;

    // Complexity rule: expand only when the size-scaled gain exceeds alpha
    // relative to the root's per-element impurity.
    const double complexity = split.gain / (static_cast<double>(idx.size()) + 1.0);
    if (!(complexity > alpha * root_unit_sse)) return node;

    std::vector<std::uint32_t> left_idx, right_idx;
    left_idx.reserve(idx.size());
    right_idx.reserve(idx.size());
    const auto& col = columns[split.feature];
    for (auto i : idx)
        (col[i] <= split.split_value ? left_idx : right_idx).push_back(i);

    node->feature = static_cast<int>(split.feature);
    node->split_value = split.split_value;
    node->left = grow(columns, names, target, left_idx, alpha, root_unit_sse);
    node->right = grow(columns, names, target, right_idx, alpha, root_unit_sse);
    return node;
}

} // namespace detail

/// Exhaustive best split of the whole dataset, exposed for inspection and
/// testing. Returns found=false when no split improves the SSE (e.g.
/// constant target).
inline SplitCandidate best_split(const Dataset& d, std::string_view target,
                                 const std::vector<std::string>& features) {
    if (d.n_rows() < 2) throw Error("best_split: need at least 2 rows");
    std::vector<std::vector<double>> columns;
    columns.reserve(features.size());
    for (const auto& f : features) columns.push_back(d.column(f));
    const auto y = d.column(target);
    std::vector<std::uint32_t> idx(d.n_rows());
    std::iota(idx.begin(), idx.end(), 0u);
    return detail::best_split_rows(columns, features, y, idx);
}

inline TreeModel fit_ret(const Dataset& d, std::string_view target,
                         const std::vector<std::string>& features, double alpha = 0.01) {
    if (d.n_rows() < 2) throw Error("fit_ret: need at least 2 rows");
    for (const auto& f : features)
        if (f == target) throw Error("fit_ret: feature list contains the target");

    std::vector<std::vector<double>> columns;
    columns.reserve(features.size());
    for (const auto& f : features) columns.push_back(d.column(f));
    const auto y = d.column(target);

    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    double root_sse = 0.0;
    for (double v : y) root_sse += (v - mean) * (v - mean);
    const double root_unit_sse = root_sse / (static_cast<double>(y.size()) + 1.0);

    std::vector<std::uint32_t> idx(d.n_rows());
    std::iota(idx.begin(), idx.end(), 0u);

    TreeModel m;
    m.alpha = alpha;
    m.feature_names = features;
    if (root_sse <= 0.0 || features.empty()) {
        m.root = std::make_unique<TreeNode>();
        m.root->n = d.n_rows();
        m.root->prediction = mean;
    } else {
        m.root = detail::grow(columns, features, y, idx, alpha, root_unit_sse);
    }
    return m;
}

/// Routes a feature vector (aligned with the model's feature list) to a leaf.
inline double predict_ret(const TreeModel& m, std::span<const double> x) {
    if (x.size() != m.feature_names.size())
        throw Error("predict_ret: expected " +
                    to_text(static_cast<std::int64_t>(m.feature_names.size())) +
                    " features, got " + to_text(static_cast<std::int64_t>(x.size())));
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!std::isfinite(x[i]))
            throw Error("predict_ret: missing value for feature '" + m.feature_names[i] + "'");
    const TreeNode* node = m.root.get();
    while (!node->is_leaf())
        node = x[static_cast<std::size_t>(node->feature)] <= node->split_value
                   ? node->left.get()
                   : node->right.get();
    return node->prediction;
}

inline std::size_t count_leaves(const TreeNode& node) {
    if (node.is_leaf()) return 1;
    return count_leaves(*node.left) + count_leaves(*node.right);
}

namespace detail {

inline void dump_node(const TreeModel& m, const TreeNode& node, std::ostream& out, int depth) {
    const std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
    if (node.is_leaf()) {
        out << pad << "-> " << to_text(node.prediction) << " W  (n="
            << to_text(static_cast<std::int64_t>(node.n)) << ")\n";
        return;
    }
    out << pad << m.feature_names[static_cast<std::size_t>(node.feature)]
        << " <= " << to_text(node.split_value) << "\n";
    dump_node(m, *node.left, out, depth + 1);
    out << pad << m.feature_names[static_cast<std::size_t>(node.feature)] << " > "
        << to_text(node.split_value) << "\n";
    dump_node(m, *node.right, out, depth + 1);
}

} // namespace detail

/// Indented text rendering for human inspection.
inline std::string format_tree(const TreeModel& m) {
    std::ostringstream out;
    detail::dump_node(m, *m.root, out, 0);
    return out.str();
}

} // namespace procwatt
