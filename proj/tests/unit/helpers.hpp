#pragma once

#include "subforest/data.hpp"
#include "subforest/sparsify.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

namespace testing_helpers {

using subforest::Dataset;
using subforest::Matrix;
using subforest::Task;
using subforest::Vector;

inline Dataset make_dataset(Matrix X, Vector y, Task task = Task::regression)
{
    Dataset d;
    d.features = std::move(X);
    d.response = std::move(y);
    d.task = task;
    for (Eigen::Index p = 0; p < d.features.cols(); ++p) d.feature_names.push_back("x" + std::to_string(p + 1));
    if (task == Task::binary_classification) d.class_labels = {"neg", "pos"};
    return d;
}

inline Matrix uniform_matrix(std::mt19937_64& rng, Eigen::Index n, Eigen::Index p, double lo = 0.0, double hi = 1.0)
{
    std::uniform_real_distribution<double> u(lo, hi);
    return Matrix::NullaryExpr(n, p, [&] { return u(rng); });
}

inline Vector gaussian_vector(std::mt19937_64& rng, Eigen::Index n, double sd = 1.0)
{
    std::normal_distribution<double> g(0.0, sd);
    return Vector::NullaryExpr(n, [&] { return g(rng); });
}

/// Hand-made design: column t of A is a tree using `tree_features[t]`.
inline subforest::DesignMatrices make_design(Matrix A, std::vector<std::vector<int>> tree_features, int n_features,
                                             Vector u)
{
    subforest::DesignMatrices d;
    d.A = std::move(A);
    d.G = Matrix::Zero(n_features, d.A.cols());
    for (std::size_t t = 0; t < tree_features.size(); ++t) {
        for (int p : tree_features[t]) d.G(p, static_cast<Eigen::Index>(t)) = 1.0;
        d.tree_index.push_back(static_cast<int>(t));
    }
    d.tree_features = std::move(tree_features);
    d.u = std::move(u);
    return d;
}

/// One feature per column, feature t for column t.
inline subforest::DesignMatrices make_design(Matrix A, Vector u)
{
    std::vector<std::vector<int>> tf;
    for (Eigen::Index t = 0; t < A.cols(); ++t) tf.push_back({static_cast<int>(t)});
    const auto T = static_cast<int>(A.cols());
    return make_design(std::move(A), std::move(tf), T, std::move(u));
}

/// A stump on `feature` at `threshold` with leaf values lo / hi.
inline subforest::Tree stump(int feature, double threshold, int n_features, double lo = 0.0, double hi = 1.0)
{
    std::vector<subforest::TreeNode> nodes(3);
    nodes[0].feature = feature;
    nodes[0].threshold = threshold;
    nodes[0].left = 1;
    nodes[0].right = 2;
    nodes[1].value = lo;
    nodes[2].value = hi;
    return subforest::Tree(std::move(nodes), n_features, false);
}

class TempDir {
public:
    TempDir()
    {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("subforest_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] const std::filesystem::path& path() const { return path_; }
    [[nodiscard]] std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

    std::filesystem::path write(const std::string& name, const std::string& text) const
    {
        std::ofstream(path_ / name) << text;
        return path_ / name;
    }

private:
    std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p)
{
    std::ifstream in(p);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace testing_helpers
