#pragma once

#include "subforest/sparsify.hpp"

#include <optional>
#include <string>
#include <vector>

namespace subforest {

struct PolishOptions {
    int n_trees = 100;
    int min_samples_leaf = 5;
    std::uint64_t seed = 0;
    int threads = 1;
};

/// Bagged full-depth CART restricted to a feature subset. Trees are stored at
/// the full data width, so they split only on columns in feature_subset.
struct PolishedModel {
    std::vector<Tree> forest;
    std::vector<int> feature_subset;
    double base = 0.0; // training mean; the prediction when the forest is empty

    [[nodiscard]] Vector predict(const Matrix& X) const;
};

/// max_features = ceil(sqrt(k)) for classification, ceil(k / 3) for regression.
PolishedModel polish(const Dataset& data, std::span<const int> features, const PolishOptions& options = {});

struct FitOptions {
    BuildMethod build = BuildMethod::bagboost;
    BuildConfig build_config;
    double alpha = 0.1;
    PenaltySpec penalty;
    std::optional<double> sketch_rho;
    std::optional<int> l0_k; // best-subset selection instead of the lasso
    SolverOptions solver;
    bool polish = true;
    int polish_trees = 100;
};

struct FittedModel {
    Task task = Task::regression;
    std::vector<std::string> feature_names;
    std::vector<std::string> class_labels; // raw labels behind -1 / +1
    Ensemble ensemble;
    PenaltySpec penalty;
    std::vector<int> dropped_trees; // ensemble indices left out of the design
    Vector weights;                 // per ensemble tree, 0 for dropped trees
    double intercept = 0.0;
    double alpha = 0.0;
    double alpha_max = 0.0;
    double train_error = 0.0; // lasso (unpolished) training error on all rows
    std::optional<int> l0_k;
    LassoSolution solution; // per design column
    std::vector<int> subforest;
    std::vector<int> selected_features;
    std::optional<PolishedModel> polished;
    std::vector<std::string> warnings;

    [[nodiscard]] std::vector<std::string> selected_feature_names() const;

    /// intercept + sum_t w_t tree_t(X), ignoring the polished forest.
    [[nodiscard]] Vector lasso_predict(const Matrix& X) const;
};

FittedModel fit(const Dataset& data, const FitOptions& options);

/// Sparsifies (and polishes) an existing ensemble, e.g. an imported one.
FittedModel fit_ensemble(const Dataset& data, Ensemble ensemble, const FitOptions& options);

/// Polished prediction when present, otherwise lasso_predict.
Vector predict(const FittedModel& model, const Matrix& X);

/// Classification only: clip((s + 1) / 2, 0, 1) of the score s.
Vector predict_proba(const FittedModel& model, const Matrix& X);

/// Classification only: +1 where the score is >= 0, else -1.
Vector predict_class(const FittedModel& model, const Matrix& X);

struct CvOptions {
    int k = 5;
    double tol = 1e-3;
    int n_alphas = 100;
    int threads = 1;
};

struct CvResult {
    std::vector<double> alphas;
    std::vector<std::vector<double>> fold_errors; // k x alphas
    std::vector<double> mean_error;
    std::vector<std::size_t> path_support_sizes; // full-data path
    int best_index = 0;
    double best_alpha = 0.0;
    std::size_t support_size = 0;
    std::vector<std::vector<int>> fold_feature_sets;
    FittedModel model;
};

/// Builds one ensemble on all rows, scores the shared alpha grid by k-fold CV
/// and refits at the largest alpha whose mean error is within (1 + tol) of the
/// minimum.
CvResult fit_cv(const Dataset& data, const FitOptions& options, const CvOptions& cv);
CvResult fit_cv_ensemble(const Dataset& data, Ensemble ensemble, const FitOptions& options, const CvOptions& cv);

/// Fold id per row: seeded shuffle, then position modulo k.
std::vector<int> fold_assignment(std::size_t n, int k, std::uint64_t seed);

double mse(const Vector& y, const Vector& prediction);
double r2_score(const Vector& y, const Vector& prediction);
double accuracy(const Vector& y, const Vector& predicted_class);
/// Area under the ROC curve for +-1 labels (ties count one half).
double roc_auc(const Vector& y, const Vector& score);

} // namespace subforest
