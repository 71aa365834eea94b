#include "imbrisk/tree.hpp"

#include <algorithm>
#include <cmath>

#include "imbrisk/errors.hpp"

namespace imbrisk {
namespace {

double gini_unchecked(double w_pos, double w_neg) {
    const double w = w_pos + w_neg;
    if (w <= 0.0) return 0.0;
    const double p = w_pos / w;
    const double q = w_neg / w;
    return 1.0 - (p * p + q * q);
}

struct NodeStats {
    double w_pos = 0.0;
    double w_neg = 0.0;
    std::size_t bearing = 0;  // rows with weight > 0
};

NodeStats node_stats(const Dataset& ds, std::span<const double> weights,
                     std::span<const std::size_t> rows) {
    NodeStats s;
    for (std::size_t i : rows) {
        const double w = weights[i];
        (ds.labels[i] == 1 ? s.w_pos : s.w_neg) += w;
        if (w > 0.0) ++s.bearing;
    }
    return s;
}

// Exhaustive best split of the given rows; decrease is normalized by the
// rows' own total weight.
std::optional<Split> best_split_rows(const Dataset& ds, std::span<const double> weights,
                                     std::span<const std::size_t> rows,
                                     const NodeStats& stats, int min_samples_leaf) {
    const double node_weight = stats.w_pos + stats.w_neg;
    if (node_weight <= 0.0) return std::nullopt;
    const double node_gini = gini_unchecked(stats.w_pos, stats.w_neg);

    std::optional<Split> best;
    std::vector<std::pair<double, std::size_t>> ordered(rows.size());
    const auto min_leaf = static_cast<std::size_t>(min_samples_leaf);

    for (std::size_t feature = 0; feature < ds.n_features(); ++feature) {
        for (std::size_t t = 0; t < rows.size(); ++t) {
            ordered[t] = {ds.features(rows[t], feature), rows[t]};
        }
        std::sort(ordered.begin(), ordered.end());

        double left_pos = 0.0;
        double left_neg = 0.0;
        std::size_t left_bearing = 0;
        for (std::size_t t = 0; t + 1 < ordered.size(); ++t) {
            const auto [value, row] = ordered[t];
            const double w = weights[row];
            (ds.labels[row] == 1 ? left_pos : left_neg) += w;
            if (w > 0.0) ++left_bearing;

            const double next_value = ordered[t + 1].first;
            if (next_value == value) continue;

            if (left_bearing < min_leaf || stats.bearing - left_bearing < min_leaf) continue;

            const double right_pos = stats.w_pos - left_pos;
            const double right_neg = stats.w_neg - left_neg;
            const double left_w = left_pos + left_neg;
            const double right_w = right_pos + right_neg;
            const double decrease =
                node_gini - (left_w * gini_unchecked(left_pos, left_neg) +
                             right_w * gini_unchecked(right_pos, right_neg)) /
                                node_weight;
            if (decrease > 0.0 && (!best || decrease > best->decrease)) {
                best = Split{feature, 0.5 * (value + next_value), decrease};
            }
        }
    }
    return best;
}

struct TreeBuilder {
    const Dataset& ds;
    std::span<const double> weights;
    TreeParams params;
    double total_weight;
    DecisionTree tree;

    // Appends the subtree for `rows` in preorder; returns its root index.
    int build(std::vector<std::size_t>& rows, int depth) {
        const NodeStats stats = node_stats(ds, weights, rows);
        const int node_index = static_cast<int>(tree.nodes.size());
        TreeNode node;
        node.weight_positive = stats.w_pos;
        node.weight_negative = stats.w_neg;
        const double w = stats.w_pos + stats.w_neg;
        node.probability = w > 0.0 ? stats.w_pos / w : 0.0;
        tree.nodes.push_back(node);

        if (depth >= params.max_depth ||
            stats.bearing < 2 * static_cast<std::size_t>(params.min_samples_leaf) ||
            gini_unchecked(stats.w_pos, stats.w_neg) == 0.0) {
            return node_index;
        }
        const auto split = best_split_rows(ds, weights, rows, stats, params.min_samples_leaf);
        if (!split) return node_index;

        tree.gini_reduction_per_feature[split->feature] +=
            (w / total_weight) * split->decrease;

        std::vector<std::size_t> left_rows;
        std::vector<std::size_t> right_rows;
        for (std::size_t i : rows) {
            (ds.features(i, split->feature) <= split->threshold ? left_rows : right_rows)
                .push_back(i);
        }
        rows.clear();
        rows.shrink_to_fit();

        tree.nodes[node_index].feature = static_cast<int>(split->feature);
        tree.nodes[node_index].threshold = split->threshold;
        const int left = build(left_rows, depth + 1);
        tree.nodes[node_index].left = left;
        const int right = build(right_rows, depth + 1);
        tree.nodes[node_index].right = right;
        return node_index;
    }
};

}  // namespace

double gini(double weight_positive, double weight_negative) {
    if (weight_positive < 0.0 || weight_negative < 0.0) {
        throw DataError("gini: negative class weight");
    }
    if (weight_positive + weight_negative <= 0.0) {
        throw DataError("gini: empty node");
    }
    return gini_unchecked(weight_positive, weight_negative);
}

std::optional<Split> best_split(const Dataset& ds, std::span<const double> weights,
                                int min_samples_leaf) {
    if (weights.size() != ds.n_rows()) throw DataError("best_split: weight count mismatch");
    if (min_samples_leaf < 1) throw ConfigError("best_split: min_samples_leaf must be >= 1");
    std::vector<std::size_t> rows(ds.n_rows());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    const NodeStats stats = node_stats(ds, weights, rows);
    return best_split_rows(ds, weights, rows, stats, min_samples_leaf);
}

DecisionTree train_tree(const Dataset& ds, std::span<const double> weights,
                        TreeParams params) {
    if (ds.n_rows() == 0) throw DataError("train_tree: empty dataset");
    if (weights.size() != ds.n_rows()) throw DataError("train_tree: weight count mismatch");
    if (params.max_depth < 0) throw ConfigError("train_tree: max_depth must be >= 0");
    if (params.min_samples_leaf < 1) {
        throw ConfigError("train_tree: min_samples_leaf must be >= 1");
    }
    double total = 0.0;
    for (double w : weights) {
        if (w < 0.0 || !std::isfinite(w)) throw NumericError("train_tree: bad sample weight");
        total += w;
    }
    if (total <= 0.0) throw NumericError("train_tree: all sample weights are zero");
    for (double v : ds.features.storage()) {
        if (!std::isfinite(v)) throw NumericError("train_tree: features must be finite");
    }

    TreeBuilder builder{ds, weights, params, total, {}};
    builder.tree.params = params;
    builder.tree.gini_reduction_per_feature.assign(ds.n_features(), 0.0);
    std::vector<std::size_t> rows(ds.n_rows());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    builder.build(rows, 0);
    return std::move(builder.tree);
}

DecisionTree train_tree(const Dataset& ds, TreeParams params) {
    const std::vector<double> unit(ds.n_rows(), 1.0);
    return train_tree(ds, unit, params);
}

double tree_predict(const DecisionTree& tree, std::span<const double> x) {
    if (x.size() != tree.n_features()) throw DataError("tree_predict: dimension mismatch");
    const TreeNode* node = &tree.nodes[0];
    while (node->feature >= 0) {
        node = &tree.nodes[x[static_cast<std::size_t>(node->feature)] <= node->threshold
                               ? node->left
                               : node->right];
    }
    return node->probability;
}

std::vector<double> tree_predict(const DecisionTree& tree, const Matrix& x) {
    std::vector<double> out(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) out[i] = tree_predict(tree, x.row(i));
    return out;
}

}  // namespace imbrisk
