#include "subforest/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace subforest {

Tree::Tree(std::vector<TreeNode> nodes, int n_features, bool has_node_stats)
    : nodes_(std::move(nodes)), n_features_(n_features), has_node_stats_(has_node_stats)
{
    if (nodes_.empty()) throw ValidationError("tree has no nodes");
    if (n_features_ < 1) throw ValidationError("tree feature width must be positive");

    const int n = static_cast<int>(nodes_.size());
    std::vector<int> in_degree(nodes_.size(), 0);
    for (int k = 0; k < n; ++k) {
        const TreeNode& nd = nodes_[static_cast<std::size_t>(k)];
        if (!std::isfinite(nd.value)) throw ValidationError("node " + std::to_string(k) + " has a non-finite value");
        if (nd.is_leaf()) {
            if (nd.left != -1 || nd.right != -1)
                throw ValidationError("leaf node " + std::to_string(k) + " has children");
            continue;
        }
        if (nd.feature >= n_features_)
            throw ValidationError("node " + std::to_string(k) + " splits on feature " + std::to_string(nd.feature) +
                                  " but the tree width is " + std::to_string(n_features_));
        if (!std::isfinite(nd.threshold))
            throw ValidationError("node " + std::to_string(k) + " has a non-finite threshold");
        for (int child : {nd.left, nd.right}) {
            if (child <= 0 || child >= n)
                throw ValidationError("internal node " + std::to_string(k) + " needs two children with valid indices");
            ++in_degree[static_cast<std::size_t>(child)];
        }
    }
    for (int k = 1; k < n; ++k)
        if (in_degree[static_cast<std::size_t>(k)] != 1)
            throw ValidationError("node " + std::to_string(k) + " is not referenced by exactly one parent");

    // Reachability from the root rules out detached cycles.
    std::vector<std::pair<int, int>> stack{{0, 0}};
    std::size_t visited = 0;
    std::vector<char> used(static_cast<std::size_t>(n_features_), 0);
    while (!stack.empty()) {
        const auto [k, d] = stack.back();
        stack.pop_back();
        if (++visited > nodes_.size()) break;
        const TreeNode& nd = nodes_[static_cast<std::size_t>(k)];
        if (nd.is_leaf()) {
            depth_ = std::max(depth_, d);
        } else {
            ++n_splits_;
            used[static_cast<std::size_t>(nd.feature)] = 1;
            stack.emplace_back(nd.right, d + 1);
            stack.emplace_back(nd.left, d + 1);
        }
    }
    if (visited != nodes_.size()) throw ValidationError("tree nodes are not all reachable from the root");
    for (int f = 0; f < n_features_; ++f)
        if (used[static_cast<std::size_t>(f)]) used_features_.push_back(f);
}

bool Tree::uses(int feature) const noexcept
{
    return std::binary_search(used_features_.begin(), used_features_.end(), feature);
}

void Tree::refresh_node_stats(const Matrix& X, const Vector& y)
{
    if (X.cols() != n_features_) throw ValidationError("refresh_node_stats: column count mismatch");
    std::vector<double> count(nodes_.size(), 0.0), sum(nodes_.size(), 0.0);
    std::vector<std::vector<int>> members(nodes_.size());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        int k = 0;
        while (true) {
            members[static_cast<std::size_t>(k)].push_back(static_cast<int>(i));
            const TreeNode& nd = nodes_[static_cast<std::size_t>(k)];
            if (nd.is_leaf()) break;
            k = X(i, nd.feature) <= nd.threshold ? nd.left : nd.right;
        }
    }
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
        const auto& rows = members[k];
        double mean = 0.0;
        for (int r : rows) mean += y[r];
        mean = rows.empty() ? 0.0 : mean / static_cast<double>(rows.size());
        double ss = 0.0;
        for (int r : rows) ss += (y[r] - mean) * (y[r] - mean);
        nodes_[k].n_samples = static_cast<int>(rows.size());
        nodes_[k].impurity = rows.empty() ? 0.0 : ss / static_cast<double>(rows.size());
    }
    has_node_stats_ = true;
}

Tree Tree::remap_features(std::span<const int> mapping, int new_width) const
{
    std::vector<TreeNode> nodes = nodes_;
    for (auto& nd : nodes)
        if (!nd.is_leaf()) nd.feature = mapping[static_cast<std::size_t>(nd.feature)];
    return Tree(std::move(nodes), new_width, has_node_stats_);
}

ColumnOrder::ColumnOrder(const Matrix& X) : n_rows_(static_cast<std::size_t>(X.rows()))
{
    order_.resize(n_rows_ * static_cast<std::size_t>(X.cols()));
    for (Eigen::Index f = 0; f < X.cols(); ++f) {
        auto first = order_.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(f) * n_rows_);
        std::iota(first, first + static_cast<std::ptrdiff_t>(n_rows_), 0);
        std::stable_sort(first, first + static_cast<std::ptrdiff_t>(n_rows_),
                         [&](int a, int b) { return X(a, f) < X(b, f); });
    }
}

namespace {

struct SplitChoice {
    int feature = -1;
    std::size_t left_size = 0; // unique rows going left, in sorted order of `feature`
    double threshold = 0.0;
    double gain = -1.0;
};

// Grows a tree depth-first. Every feature keeps its own copy of the node's rows,
// sorted by that feature; a node owns the same [begin, end) range in each copy.
class TreeGrower {
public:
    TreeGrower(const Matrix& X, const ColumnOrder& order, const Vector& y, std::span<const int> weight,
               const TreeParams& params)
        : X_(X), y_(y), weight_(weight), params_(params),
          n_features_(static_cast<int>(X.cols())), rng_(mix_seed(params.seed))
    {
        for (std::size_t i = 0; i < weight.size(); ++i)
            if (weight[i] > 0) ++n_unique_;
        rows_.resize(n_unique_ * static_cast<std::size_t>(n_features_));
        for (int f = 0; f < n_features_; ++f) {
            std::size_t pos = 0;
            for (int r : order.sorted_rows(f))
                if (weight_[static_cast<std::size_t>(r)] > 0) segment(f)[pos++] = r;
        }
        goes_left_.assign(weight.size(), 0);
        scratch_.resize(n_unique_);
        features_.resize(static_cast<std::size_t>(n_features_));
        std::iota(features_.begin(), features_.end(), 0);
    }

    std::vector<TreeNode> grow()
    {
        if (n_unique_ == 0) throw ValidationError("fit_tree: empty sample");
        build(0, n_unique_, 0);
        return std::move(nodes_);
    }

private:
    int* segment(int f) { return rows_.data() + static_cast<std::size_t>(f) * n_unique_; }

    int build(std::size_t begin, std::size_t end, int depth)
    {
        const int* rows = segment(0);
        double count = 0.0, sum = 0.0;
        double lo = y_[rows[begin]], hi = lo;
        for (std::size_t i = begin; i < end; ++i) {
            const int r = rows[i];
            const double w = weight_[static_cast<std::size_t>(r)];
            count += w;
            sum += w * y_[r];
            lo = std::min(lo, y_[r]);
            hi = std::max(hi, y_[r]);
        }
        const double mean = sum / count;
        double ss = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
            const int r = rows[i];
            ss += weight_[static_cast<std::size_t>(r)] * (y_[r] - mean) * (y_[r] - mean);
        }

        const int id = static_cast<int>(nodes_.size());
        TreeNode node;
        node.n_samples = static_cast<int>(count);
        node.impurity = ss / count;
        node.value = lo == hi ? lo : mean;
        nodes_.push_back(node);

        if (depth >= params_.max_depth || lo == hi || count < 2.0 * params_.min_samples_leaf) return id;

        const SplitChoice split = choose_split(begin, end, count, sum);
        if (split.feature < 0) return id;

        const int* chosen = segment(split.feature);
        for (std::size_t i = begin; i < end; ++i)
            goes_left_[static_cast<std::size_t>(chosen[i])] = i < begin + split.left_size ? 1 : 0;
        for (int f = 0; f < n_features_; ++f) partition(segment(f), begin, end);

        const std::size_t mid = begin + split.left_size;
        const int left = build(begin, mid, depth + 1);
        const int right = build(mid, end, depth + 1);
        TreeNode& nd = nodes_[static_cast<std::size_t>(id)];
        nd.feature = split.feature;
        nd.threshold = split.threshold;
        nd.left = left;
        nd.right = right;
        return id;
    }

    void partition(int* seg, std::size_t begin, std::size_t end)
    {
        std::size_t l = begin, r = 0;
        for (std::size_t i = begin; i < end; ++i) {
            const int row = seg[i];
            if (goes_left_[static_cast<std::size_t>(row)])
                seg[l++] = row;
            else
                scratch_[r++] = row;
        }
        std::copy(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(r), seg + l);
    }

    void scan_feature(int f, std::size_t begin, std::size_t end, double count, double sum, SplitChoice& best)
    {
        const int* seg = segment(f);
        const double min_leaf = params_.min_samples_leaf;
        double n_left = 0.0, sum_left = 0.0;
        for (std::size_t i = begin; i + 1 < end; ++i) {
            const int r = seg[i];
            const double w = weight_[static_cast<std::size_t>(r)];
            n_left += w;
            sum_left += w * y_[r];
            const double a = X_(r, f);
            const double b = X_(seg[i + 1], f);
            if (!(a < b)) continue;
            const double n_right = count - n_left;
            if (n_left < min_leaf) continue;
            if (n_right < min_leaf) break;
            const double diff = sum_left / n_left - (sum - sum_left) / n_right;
            const double gain = n_left * n_right / count * diff * diff;
            // Earlier candidates (lower feature, lower threshold) win ties.
            if (best.feature < 0 || gain > best.gain * (1.0 + 1e-12)) {
                double thr = 0.5 * a + 0.5 * b;
                if (!(thr < b)) thr = a;
                best = {f, i + 1 - begin, thr, gain};
            }
        }
    }

    SplitChoice choose_split(std::size_t begin, std::size_t end, double count, double sum)
    {
        SplitChoice best;
        const int mf = params_.max_features <= 0 ? n_features_ : std::min(params_.max_features, n_features_);
        if (mf >= n_features_) {
            for (int f = 0; f < n_features_; ++f) scan_feature(f, begin, end, count, sum, best);
            return best;
        }
        std::shuffle(features_.begin(), features_.end(), rng_);
        std::vector<int> first(features_.begin(), features_.begin() + mf);
        std::sort(first.begin(), first.end());
        for (int f : first) scan_feature(f, begin, end, count, sum, best);
        // Keep drawing features when the sampled ones admit no valid split.
        for (int k = mf; best.feature < 0 && k < n_features_; ++k)
            scan_feature(features_[static_cast<std::size_t>(k)], begin, end, count, sum, best);
        return best;
    }

    const Matrix& X_;
    const Vector& y_;
    std::span<const int> weight_;
    TreeParams params_;
    int n_features_;
    std::size_t n_unique_ = 0;
    std::vector<int> rows_;
    std::vector<char> goes_left_;
    std::vector<int> scratch_;
    std::vector<int> features_;
    std::vector<TreeNode> nodes_;
    std::mt19937_64 rng_;
};

void check_params(const Matrix& X, const Vector& y, const TreeParams& params)
{
    if (X.rows() == 0 || X.cols() == 0) throw ValidationError("fit_tree: empty input");
    if (y.size() != X.rows()) throw ValidationError("fit_tree: response length does not match row count");
    if (params.max_depth < 1) throw ValidationError("fit_tree: max_depth must be >= 1");
    if (params.max_features > X.cols())
        throw ValidationError("fit_tree: max_features exceeds the number of features");
    if (params.min_samples_leaf < 1) throw ValidationError("fit_tree: min_samples_leaf must be >= 1");
}

} // namespace

Tree fit_tree_weighted(const Matrix& X, const ColumnOrder& order, const Vector& y, std::span<const int> weight,
                       const TreeParams& params)
{
    check_params(X, y, params);
    if (weight.size() != static_cast<std::size_t>(X.rows()) || order.n_rows() != weight.size())
        throw ValidationError("fit_tree: weight / order size mismatch");
    TreeGrower grower(X, order, y, weight, params);
    return Tree(grower.grow(), static_cast<int>(X.cols()));
}

Tree fit_tree(const Matrix& X, const Vector& y, const TreeParams& params)
{
    check_params(X, y, params);
    const ColumnOrder order(X);
    const std::vector<int> weight(static_cast<std::size_t>(X.rows()), 1);
    return fit_tree_weighted(X, order, y, weight, params);
}

Vector predict_tree(const Tree& tree, const Matrix& X)
{
    if (X.cols() != tree.n_features())
        throw ValidationError("predict: matrix has " + std::to_string(X.cols()) + " columns, tree expects " +
                              std::to_string(tree.n_features()));
    Vector out(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        out[i] = tree.predict_one([&](int f) { return X(i, f); });
    return out;
}

Vector tree_mdi(const Tree& tree)
{
    Vector mdi = Vector::Zero(tree.n_features());
    const auto nodes = tree.nodes();
    const double root_n = nodes[0].n_samples;
    if (root_n <= 0) return mdi;
    for (const TreeNode& nd : nodes) {
        if (nd.is_leaf() || nd.n_samples <= 0) continue;
        const TreeNode& l = nodes[static_cast<std::size_t>(nd.left)];
        const TreeNode& r = nodes[static_cast<std::size_t>(nd.right)];
        const double n = nd.n_samples;
        const double child = (l.n_samples * l.impurity + r.n_samples * r.impurity) / n;
        mdi[nd.feature] += n / root_n * std::max(0.0, nd.impurity - child);
    }
    const double total = mdi.sum();
    if (total > 0.0) mdi /= total;
    return mdi;
}

} // namespace subforest
