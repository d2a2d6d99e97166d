#pragma once

#include "subforest/data.hpp"
#include "subforest/tree.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace subforest {

enum class BuildMethod { bag, bagboost, doublebagboost, custom };

std::string to_string(BuildMethod method);
BuildMethod parse_build_method(std::string_view name);

struct BuildConfig {
    int max_depth_limit = 5;
    double bag_convergence_tol = 1e-3; // relative training-error improvement per check
    int trees_per_check = 5;
    int max_trees = 500;
    int min_samples_leaf = 1;
    std::uint64_t seed = 0;
    int threads = 1;

    void validate() const;
};

/// Summary of one boosting stage (plain bagging has a single stage).
struct StageInfo {
    int depth = 0;
    int first_tree = 0;
    int n_trees = 0;
    double train_mse = 0.0; // ensemble training error after this stage
    double oob_mse = 0.0;   // oob_error(upto this stage); NaN when unavailable
};

struct Ensemble {
    int n_features = 0;
    BuildMethod method = BuildMethod::custom;
    std::vector<Tree> trees;
    std::vector<std::vector<int>> bag_indices; // in-bag rows per tree, duplicates kept, sorted
    std::vector<int> stage_of;
    std::vector<int> depth_of;
    std::vector<StageInfo> stages;

    [[nodiscard]] std::size_t size() const noexcept { return trees.size(); }
    [[nodiscard]] bool has_bags() const noexcept { return !trees.empty() && bag_indices.size() == trees.size(); }

    /// Builder prediction: sum over stages of the mean of that stage's trees.
    /// Custom ensembles without stage records are treated as one stage.
    [[nodiscard]] Vector predict(const Matrix& X) const;

    /// Number of distinct features used by at least one tree.
    [[nodiscard]] std::vector<int> used_features() const;
};

/// Incremental-depth bagging: depth-1 bootstrap trees until the training
/// error of the running mean converges, then depth + 1, up to the limit.
Ensemble build_bagging(const Dataset& data, const BuildConfig& cfg);

/// Incremental-depth bag-boosting: stage s grows a bag of depth-s trees on
/// the residual of the previous stages; stops when OOB error stops improving.
Ensemble build_bagboost(const Dataset& data, const BuildConfig& cfg);

/// Like bag-boosting, but repeats stages at a fixed depth while the OOB error
/// keeps improving before moving to the next depth.
Ensemble build_double_bagboost(const Dataset& data, const BuildConfig& cfg);

Ensemble build_ensemble(const Dataset& data, BuildMethod method, const BuildConfig& cfg);

/// OOB mean squared error using stages [0, upto_stage). Within each stage a
/// sample is scored by the mean of the stage trees whose bag excludes it; only
/// samples with an OOB tree in every counted stage contribute.
double oob_error(const Dataset& data, const Ensemble& ensemble, int upto_stage);

/// Loads an ensemble JSON file; the result has method == custom.
Ensemble import_ensemble(const std::filesystem::path& path, int n_features);
void export_ensemble(const Ensemble& ensemble, const std::filesystem::path& path);

} // namespace subforest
