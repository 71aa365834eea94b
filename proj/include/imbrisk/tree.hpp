#pragma once

#include <optional>
#include <span>
#include <vector>

#include "imbrisk/dataset.hpp"

namespace imbrisk {

struct TreeParams {
    int max_depth = 8;
    int min_samples_leaf = 5;

    bool operator==(const TreeParams&) const = default;
};

/// feature < 0 marks a leaf. "value <= threshold" goes left.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double weight_positive = 0.0;
    double weight_negative = 0.0;
    double probability = 0.0;  // weighted positive fraction at the node
};

struct DecisionTree {
    std::vector<TreeNode> nodes;  // preorder, root at index 0
    std::vector<double> gini_reduction_per_feature;
    TreeParams params;

    std::size_t n_features() const { return gini_reduction_per_feature.size(); }
};

/// Two-class Gini impurity of a weighted node, in [0, 0.5].
double gini(double weight_positive, double weight_negative);

struct Split {
    std::size_t feature = 0;
    double threshold = 0.0;
    double decrease = 0.0;  // impurity decrease, normalized by node weight
};

/// Exhaustive scan over every feature and every midpoint between consecutive
/// distinct values. Ties break toward the lower feature index, then the lower
/// threshold. Returns nothing when no split strictly decreases impurity or
/// respects min_samples_leaf on both sides.
std::optional<Split> best_split(const Dataset& ds, std::span<const double> weights,
                                int min_samples_leaf = 1);

/// Recursive Gini-split growth. Weights may be any non-negative values;
/// scaling them all by a constant leaves the tree unchanged.
DecisionTree train_tree(const Dataset& ds, std::span<const double> weights,
                        TreeParams params);
DecisionTree train_tree(const Dataset& ds, TreeParams params);  // unit weights

double tree_predict(const DecisionTree& tree, std::span<const double> x);
std::vector<double> tree_predict(const DecisionTree& tree, const Matrix& x);

}  // namespace imbrisk
