#pragma once

#include "subforest/model.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace subforest {

/// Per-feature score sum_t w_t * MDI_t(p) over the subforest; per_group is
/// filled (indexed by group id - 1) when a grouping is supplied.
struct ImportanceReport {
    std::vector<std::string> feature_names;
    Vector per_feature;
    std::vector<double> per_group;
};

ImportanceReport weighted_importances(const FittedModel& model, const PenaltySpec* groups = nullptr);

/// Feature names of each subforest tree, in tree order.
std::vector<std::vector<std::string>> list_subforest(const FittedModel& model);

/// Piecewise-constant function of one variable: levels[i] applies on
/// (breaks[i-1], breaks[i]], levels.back() above the last break.
struct StepFunction {
    std::vector<double> breaks;
    std::vector<double> levels;

    [[nodiscard]] double operator()(double v) const;
};

/// Partial prediction of the subforest trees that split on exactly one feature.
/// Not centered: the model intercept stays global.
struct ShapeCurve {
    std::string feature;
    int feature_index = -1;
    std::vector<int> trees; // ensemble indices contributing
    std::vector<double> grid;
    std::vector<double> value;
    StepFunction exact;
};

/// Same for trees splitting on exactly the pair {f1, f2}.
struct InteractionGrid {
    std::string feature1, feature2;
    int index1 = -1, index2 = -1;
    std::vector<int> trees;
    std::vector<double> grid1, grid2;
    Matrix value; // grid1.size() x grid2.size()
    std::vector<double> breaks1, breaks2;
    Matrix levels; // (breaks1.size() + 1) x (breaks2.size() + 1)

    [[nodiscard]] double operator()(double v1, double v2) const;
};

/// n quantile points (linear interpolation) of a column, duplicates removed.
std::vector<double> quantile_grid(const Vector& column, int n);

ShapeCurve shape_function(const FittedModel& model, const Matrix& X_train, const std::string& feature, int n_grid = 256);
InteractionGrid pairwise_interaction(const FittedModel& model, const Matrix& X_train, const std::string& feature1,
                                     const std::string& feature2, int n_grid = 64);

/// Features of the single-feature subforest trees, and the feature pairs of
/// the two-feature trees (sorted, distinct).
std::vector<int> shape_terms(const FittedModel& model);
std::vector<std::pair<int, int>> interaction_terms(const FittedModel& model);

/// Row per path point, column per feature: sum_t w_t(alpha) * MDI_t(p).
Matrix path_importances(const PathResult& path, const Ensemble& ensemble, const DesignMatrices& design);

} // namespace subforest
