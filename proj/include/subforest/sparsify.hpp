#pragma once

#include "subforest/forest.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace subforest {

enum class PenaltyMode { uniform, costs, groups };

std::string to_string(PenaltyMode mode);

/// How a tree's penalty weight u_t is derived from the features it splits on.
///   uniform: u_t = |features(t)|
///   costs:   u_t = sum of costs[p] over features(t)
///   groups:  u_t = sum of group_costs[g - 1] over distinct groups touched by features(t)
struct PenaltySpec {
    PenaltyMode mode = PenaltyMode::uniform;
    std::vector<double> costs;
    std::vector<int> group_of; // group id per feature, ids contiguous from 1
    std::vector<double> group_costs;

    static PenaltySpec uniform() { return {}; }
    static PenaltySpec with_costs(std::vector<double> costs);
    static PenaltySpec with_groups(std::vector<int> group_of, std::vector<double> group_costs = {});

    void validate(int n_features) const;
    [[nodiscard]] double tree_weight(std::span<const int> features) const;
};

/// Lasso design built from an ensemble: predictions A, feature indicators G
/// and per-tree penalty weights u. Trees without a split are dropped.
struct DesignMatrices {
    Matrix A;                                    // N x T
    Matrix G;                                    // P x T, binary
    Vector u;                                    // T, strictly positive
    std::vector<std::vector<int>> tree_features; // support of G's columns
    std::vector<int> tree_index;                 // ensemble index of each column
    std::vector<int> dropped;                    // ensemble indices of zero-split trees

    [[nodiscard]] Eigen::Index n_rows() const noexcept { return A.rows(); }
    [[nodiscard]] Eigen::Index n_trees() const noexcept { return A.cols(); }
    [[nodiscard]] Eigen::Index n_features() const noexcept { return G.rows(); }
};

DesignMatrices assemble_design(const Ensemble& ensemble, const Dataset& data, const PenaltySpec& penalty);
DesignMatrices assemble_design(const Ensemble& ensemble, const Matrix& X, const PenaltySpec& penalty);

/// Same trees and weights, restricted to the given rows of A (kept in order).
DesignMatrices restrict_rows(const DesignMatrices& design, std::span<const int> rows);

struct SolverOptions {
    double tol_cd = 1e-6;     // max coordinate change and KKT violation at convergence
    int max_sweeps = 10000;
    double tol_select = 1e-8; // threshold on (Gw)_p and w_t
    bool fit_intercept = true;
};

struct LassoSolution {
    double alpha = 0.0;
    Vector w;             // per design column, >= 0
    Vector feature_usage; // G w, per feature
    double intercept = 0.0;
    std::vector<int> selected_features;
    double train_error = 0.0; // mean squared training residual
    double objective = 0.0;   // train_error + alpha * u'w
    bool converged = true;
    int sweeps = 0;

    [[nodiscard]] std::size_t support_size() const noexcept { return selected_features.size(); }
};

/// Objective after every coordinate-descent sweep (diagnostics and tests).
struct SweepTrace {
    std::vector<double> objective;
};

/// Non-negative weighted lasso
///     min_{b, w >= 0} (1/N) ||y - b - A w||^2 + alpha * u'w
/// solved through the garrote substitution x = diag(u) w, i.e. a plain
/// non-negative l1 problem on B = A diag(u)^-1, by cyclic coordinate descent
/// on the Gram matrix of B. With fit_intercept = false, b = 0 and nothing is centered.
class NnLassoSolver {
public:
    NnLassoSolver(const DesignMatrices& design, const Vector& y, SolverOptions options = {});

    /// Smallest alpha for which w = 0 is optimal.
    [[nodiscard]] double alpha_max() const noexcept { return alpha_max_; }

    [[nodiscard]] LassoSolution solve(double alpha, const Vector* warm_start = nullptr, SweepTrace* trace = nullptr) const;

    /// Builds a solution record (intercept, usage, errors) for an arbitrary w.
    [[nodiscard]] LassoSolution evaluate(const Vector& w, double alpha) const;

    [[nodiscard]] const SolverOptions& options() const noexcept { return options_; }

private:
    double gram_objective(const Vector& x, double alpha) const;

    const DesignMatrices& design_;
    SolverOptions options_;
    Vector column_mean_;
    double y_mean_ = 0.0;
    Vector y_centered_;
    Matrix gram_;  // B'B / N
    Vector corr_;  // B'y / N
    double yy_ = 0.0;
    double alpha_max_ = 0.0;
};

/// max_t max(0, (2/N) a_t'y_c) / u_t; y_centered must already have mean zero.
double alpha_max(const DesignMatrices& design, const Vector& y_centered);

LassoSolution solve_nnlasso(const DesignMatrices& design, const Vector& y, double alpha,
                            const Vector* warm_start = nullptr, const SolverOptions& options = {});

struct PathResult {
    std::vector<double> alphas;
    std::vector<LassoSolution> solutions;
};

/// n points log-spaced from alpha_max down to ratio * alpha_max.
std::vector<double> default_alpha_grid(double alpha_max, int n = 100, double ratio = 1e-3);

/// Warm-started path in decreasing alpha order.
PathResult solve_path(const DesignMatrices& design, const Vector& y,
                      const std::optional<std::vector<double>>& alphas = std::nullopt,
                      const SolverOptions& options = {});
PathResult solve_path(const NnLassoSolver& solver, const std::vector<double>& alphas);

/// Uniform row subsample of floor(N * rho) rows without replacement.
std::pair<DesignMatrices, Vector> sketch(const DesignMatrices& design, const Vector& y, double rho, std::uint64_t seed);

/// Best-subset search over features: the best non-negative least-squares fit
/// using only trees whose features lie inside a set of at most K features.
/// Exact (branch and bound on NNLS relaxations). Supports up to 63 used features.
LassoSolution solve_l0(const DesignMatrices& design, const Vector& y, int K, const SolverOptions& options = {});

/// Path export: alpha, train_error, then (Gw)_p for each feature.
void write_path_csv(const PathResult& path, std::span<const std::string> feature_names,
                    const std::filesystem::path& file);

} // namespace subforest
