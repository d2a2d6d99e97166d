#pragma once

#include "subforest/common.hpp"

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace subforest {

struct TreeNode {
    int feature = -1; // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    int n_samples = 0;     // in-bag count, bootstrap duplicates included
    double impurity = 0.0; // mean squared deviation from `value`
    double value = 0.0;    // mean response

    [[nodiscard]] bool is_leaf() const noexcept { return feature < 0; }
};

/// Binary CART regression tree. Rows with x[feature] <= threshold go left.
class Tree {
public:
    Tree() = default;

    /// Validates the node structure and derives depth and used features.
    /// Throws ValidationError on a malformed tree.
    Tree(std::vector<TreeNode> nodes, int n_features, bool has_node_stats = true);

    [[nodiscard]] std::span<const TreeNode> nodes() const noexcept { return nodes_; }
    [[nodiscard]] int n_features() const noexcept { return n_features_; }
    [[nodiscard]] int depth() const noexcept { return depth_; }
    [[nodiscard]] std::size_t n_splits() const noexcept { return n_splits_; }
    [[nodiscard]] const std::vector<int>& used_features() const noexcept { return used_features_; }
    [[nodiscard]] bool uses(int feature) const noexcept;

    /// False for imported trees whose JSON carried no n_samples / impurity.
    [[nodiscard]] bool has_node_stats() const noexcept { return has_node_stats_; }

    /// Leaf reached by a row; `value_of(j)` returns the row's value for feature j.
    template <class ValueOf>
    [[nodiscard]] int leaf_of(ValueOf&& value_of) const
    {
        int k = 0;
        while (!nodes_[static_cast<std::size_t>(k)].is_leaf()) {
            const TreeNode& nd = nodes_[static_cast<std::size_t>(k)];
            k = value_of(nd.feature) <= nd.threshold ? nd.left : nd.right;
        }
        return k;
    }

    template <class ValueOf>
    [[nodiscard]] double predict_one(ValueOf&& value_of) const
    {
        return nodes_[static_cast<std::size_t>(leaf_of(value_of))].value;
    }

    /// Recomputes n_samples and impurity by routing the rows of X (responses y).
    /// Node values are left untouched.
    void refresh_node_stats(const Matrix& X, const Vector& y);

    /// Rewrites split features through `mapping` (local index -> global index).
    [[nodiscard]] Tree remap_features(std::span<const int> mapping, int new_width) const;

private:
    std::vector<TreeNode> nodes_;
    int n_features_ = 0;
    int depth_ = 0;
    std::size_t n_splits_ = 0;
    std::vector<int> used_features_;
    bool has_node_stats_ = true;
};

struct TreeParams {
    int max_depth = 1;
    int max_features = 0; // 0 means all features
    int min_samples_leaf = 1;
    std::uint64_t seed = 0;
};

/// Per-feature argsort of a matrix's columns; shared by all trees fitted on it.
class ColumnOrder {
public:
    ColumnOrder() = default;
    explicit ColumnOrder(const Matrix& X);

    [[nodiscard]] std::span<const int> sorted_rows(int feature) const noexcept
    {
        return {order_.data() + static_cast<std::size_t>(feature) * n_rows_, n_rows_};
    }
    [[nodiscard]] std::size_t n_rows() const noexcept { return n_rows_; }

private:
    std::vector<int> order_;
    std::size_t n_rows_ = 0;
};

/// Greedy variance-reduction CART on all rows of X.
Tree fit_tree(const Matrix& X, const Vector& y, const TreeParams& params);

/// CART on a weighted row sample: weight[i] is the multiplicity of row i
/// (0 = excluded). `order` must have been built from X.
Tree fit_tree_weighted(const Matrix& X, const ColumnOrder& order, const Vector& y, std::span<const int> weight,
                       const TreeParams& params);

Vector predict_tree(const Tree& tree, const Matrix& X);

/// Mean-decrease-in-impurity importances, normalized to sum to one
/// (all zeros if the tree has no split or no impurity decrease).
Vector tree_mdi(const Tree& tree);

} // namespace subforest
