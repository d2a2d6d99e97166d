#include "helpers.hpp"
#include "oracles.hpp"

#include "subforest/sparsify.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace subforest;
using testing_helpers::make_design;

namespace {

// Gradient of (1/N)||y_c - A_c w||^2 + alpha u'w with respect to w.
Vector gradient(const DesignMatrices& d, const Vector& y, const Vector& w, double alpha)
{
    Matrix Ac = d.A;
    Ac.rowwise() -= d.A.colwise().mean();
    const Vector yc = y.array() - y.mean();
    return -2.0 / static_cast<double>(y.size()) * Ac.transpose() * (yc - Ac * w) + alpha * d.u;
}

struct Problem {
    DesignMatrices design;
    Vector y;
};

Problem random_problem(std::mt19937_64& rng, int T, int N)
{
    const oracle::Instance inst = oracle::random_instance(rng, T, N);
    return {make_design(inst.A, inst.u), inst.y};
}

} // namespace

TEST(NnLasso, ClosedFormSingleTree)
{
    const DesignMatrices d = make_design((Matrix(2, 1) << 1, 1).finished(), Vector::Constant(1, 2.0));
    const Vector y = Vector::Ones(2);
    SolverOptions opt;
    opt.fit_intercept = false;
    for (double alpha : {0.0, 0.25, 0.5, 0.9}) {
        const LassoSolution s = solve_nnlasso(d, y, alpha, nullptr, opt);
        EXPECT_NEAR(s.w[0], 1.0 - alpha, 1e-12) << alpha;
        EXPECT_EQ(s.intercept, 0.0);
    }
    EXPECT_EQ(solve_nnlasso(d, y, 1.0, nullptr, opt).w[0], 0.0);
    EXPECT_EQ(solve_nnlasso(d, y, 3.0, nullptr, opt).w[0], 0.0);
    EXPECT_DOUBLE_EQ(NnLassoSolver(d, y, opt).alpha_max(), 1.0);
}

TEST(NnLasso, ZeroAtAndAboveAlphaMax)
{
    std::mt19937_64 rng(1);
    const Problem p = random_problem(rng, 5, 20);
    const NnLassoSolver solver(p.design, p.y);
    for (double f : {1.0, 1.5, 10.0}) {
        const LassoSolution s = solver.solve(f * solver.alpha_max());
        EXPECT_EQ(s.w, Vector::Zero(5));
        EXPECT_TRUE(s.selected_features.empty());
        EXPECT_NEAR(s.intercept, p.y.mean(), 1e-12);
        EXPECT_NEAR(s.train_error, oracle::variance(p.y), 1e-12);
    }
}

TEST(NnLasso, MatchesPatternOracleOnThreeTrees)
{
    std::mt19937_64 rng(2);
    for (int rep = 0; rep < 100; ++rep) {
        const oracle::Instance inst = oracle::random_instance(rng, 3, 8);
        const DesignMatrices d = make_design(inst.A, inst.u);
        const NnLassoSolver solver(d, inst.y);
        std::uniform_real_distribution<double> frac(0.0, 1.2);
        const double alpha = frac(rng) * solver.alpha_max();
        const LassoSolution s = solver.solve(alpha);
        const oracle::Result o = oracle::lasso_by_patterns(inst.A, inst.y, inst.u, alpha);
        EXPECT_NEAR(s.objective, o.objective, 1e-6) << rep;
        EXPECT_GE(s.w.minCoeff(), 0.0);
    }
}

TEST(NnLasso, KktCertificate)
{
    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 30; ++rep) {
        const Problem p = random_problem(rng, 8, 40);
        SolverOptions opt;
        const NnLassoSolver solver(p.design, p.y, opt);
        const double alpha = 0.2 * solver.alpha_max();
        const LassoSolution s = solver.solve(alpha);
        ASSERT_TRUE(s.converged);
        const Vector g = gradient(p.design, p.y, s.w, alpha);
        for (Eigen::Index t = 0; t < 8; ++t) {
            if (s.w[t] > 0)
                EXPECT_LT(std::abs(g[t]), 10 * opt.tol_cd);
            else
                EXPECT_GT(g[t], -10 * opt.tol_cd);
        }
    }
}

TEST(NnLasso, ObjectiveNonIncreasingAcrossSweeps)
{
    std::mt19937_64 rng(4);
    for (int rep = 0; rep < 20; ++rep) {
        const Problem p = random_problem(rng, 10, 30);
        const NnLassoSolver solver(p.design, p.y);
        SweepTrace trace;
        const LassoSolution s = solver.solve(0.05 * solver.alpha_max(), nullptr, &trace);
        ASSERT_GE(trace.objective.size(), 2u);
        for (std::size_t k = 1; k < trace.objective.size(); ++k)
            EXPECT_LE(trace.objective[k], trace.objective[k - 1] + 1e-12 * std::abs(trace.objective[k - 1]));
        EXPECT_NEAR(trace.objective.back(), s.objective, 1e-10);
    }
}

TEST(NnLasso, ColumnScaleAndWarmStart)
{
    std::mt19937_64 rng(5);
    const Problem p = random_problem(rng, 6, 30);
    SolverOptions opt;
    opt.tol_cd = 1e-12;
    const NnLassoSolver solver(p.design, p.y, opt);
    const double alpha = 0.1 * solver.alpha_max();
    const LassoSolution cold = solver.solve(alpha);
    const Vector start = Vector::Constant(6, 3.0);
    const LassoSolution warm = solver.solve(alpha, &start);
    EXPECT_LT((cold.w - warm.w).cwiseAbs().maxCoeff(), 1e-9);
    const Vector bad(3);
    EXPECT_THROW((void)solver.solve(alpha, &bad), ValidationError);
}

TEST(NnLasso, SolutionRecordIsConsistent)
{
    std::mt19937_64 rng(6);
    const Problem p = random_problem(rng, 6, 25);
    const NnLassoSolver solver(p.design, p.y);
    const double alpha = 0.3 * solver.alpha_max();
    const LassoSolution s = solver.solve(alpha);
    const Vector resid = p.y - (p.design.A * s.w).array().matrix() - Vector::Constant(25, s.intercept);
    EXPECT_NEAR(resid.squaredNorm() / 25.0, s.train_error, 1e-12);
    EXPECT_NEAR(resid.mean(), 0.0, 1e-12);
    EXPECT_NEAR(s.objective, s.train_error + alpha * p.design.u.dot(s.w), 1e-12);
    EXPECT_EQ(s.feature_usage, p.design.G * s.w);
    for (Eigen::Index q = 0; q < 6; ++q) {
        const bool selected = std::find(s.selected_features.begin(), s.selected_features.end(), q) !=
                              s.selected_features.end();
        EXPECT_EQ(selected, s.feature_usage[q] > solver.options().tol_select);
    }
    EXPECT_EQ(s.alpha, alpha);
}

TEST(NnLasso, DuplicateAndConstantColumns)
{
    std::mt19937_64 rng(7);
    Matrix A = testing_helpers::uniform_matrix(rng, 30, 4);
    A.col(1) = A.col(0);
    A.col(3).setConstant(2.0);
    const Vector y = 3.0 * A.col(0) + 0.1 * testing_helpers::gaussian_vector(rng, 30);
    const DesignMatrices d = make_design(A, Vector::Ones(4));
    const NnLassoSolver solver(d, y);
    const LassoSolution s = solver.solve(0.01 * solver.alpha_max());
    EXPECT_TRUE(s.converged);
    EXPECT_EQ(s.w[3], 0.0);
    const oracle::Result o = oracle::lasso_by_patterns(A, y, Vector::Ones(4), s.alpha);
    EXPECT_NEAR(s.objective, o.objective, 1e-6);
}

TEST(NnLasso, ReportsNonConvergence)
{
    std::mt19937_64 rng(8);
    const Problem p = random_problem(rng, 10, 30);
    SolverOptions opt;
    opt.max_sweeps = 1;
    opt.tol_cd = 1e-14;
    const NnLassoSolver solver(p.design, p.y, opt);
    const LassoSolution s = solver.solve(1e-4 * solver.alpha_max());
    EXPECT_FALSE(s.converged);
    EXPECT_TRUE(std::isfinite(s.objective));
}

TEST(NnLasso, InputErrors)
{
    DesignMatrices d = make_design(Matrix::Ones(4, 2), Vector::Ones(2));
    EXPECT_THROW(NnLassoSolver(d, Vector::Zero(3)), ValidationError);
    Vector y = Vector::Zero(4);
    y[1] = std::numeric_limits<double>::infinity();
    EXPECT_THROW(NnLassoSolver(d, y), ValidationError);
    d.u[0] = 0.0;
    EXPECT_THROW(NnLassoSolver(d, Vector::Zero(4)), ValidationError);
    const DesignMatrices ok = make_design(Matrix::Ones(4, 2), Vector::Ones(2));
    EXPECT_THROW((void)solve_nnlasso(ok, Vector::Zero(4), -1.0), ValidationError);
    EXPECT_THROW((void)solve_nnlasso(ok, Vector::Zero(4), std::nan("")), ValidationError);
}

TEST(Path, DefaultGrid)
{
    const auto g = default_alpha_grid(2.0, 100, 1e-3);
    ASSERT_EQ(g.size(), 100u);
    EXPECT_EQ(g.front(), 2.0);
    EXPECT_NEAR(g.back(), 2e-3, 1e-15);
    for (std::size_t i = 1; i < g.size(); ++i) {
        EXPECT_LT(g[i], g[i - 1]);
        EXPECT_NEAR(g[i] / g[i - 1], g[1] / g[0], 1e-12);
    }
    EXPECT_EQ(default_alpha_grid(0.0), std::vector<double>{0.0});
    EXPECT_THROW(default_alpha_grid(1.0, 0), ValidationError);
}

TEST(Path, StartsAtZeroAndStaysBelowVariance)
{
    std::mt19937_64 rng(9);
    const Problem p = random_problem(rng, 8, 40);
    const PathResult path = solve_path(p.design, p.y);
    ASSERT_EQ(path.alphas.size(), 100u);
    EXPECT_EQ(path.solutions.front().w, Vector::Zero(8));
    const double var = oracle::variance(p.y);
    for (std::size_t i = 0; i < path.solutions.size(); ++i) {
        EXPECT_TRUE(std::isfinite(path.solutions[i].objective));
        EXPECT_LE(path.solutions[i].train_error, var + 1e-12);
        EXPECT_EQ(path.solutions[i].alpha, path.alphas[i]);
    }
    // training error falls as the penalty weakens, since each solve is optimal
    for (std::size_t i = 1; i < path.solutions.size(); ++i)
        EXPECT_LE(path.solutions[i].train_error, path.solutions[i - 1].train_error + 1e-6);
}

TEST(Path, WarmStartChainMatchesColdSolves)
{
    std::mt19937_64 rng(10);
    const Problem p = random_problem(rng, 6, 30);
    const NnLassoSolver solver(p.design, p.y);
    const auto grid = default_alpha_grid(solver.alpha_max(), 20);
    const PathResult path = solve_path(solver, grid);
    for (std::size_t i = 0; i < grid.size(); ++i)
        EXPECT_NEAR(path.solutions[i].objective, solver.solve(grid[i]).objective, 1e-8);
}

TEST(Path, RejectsBadSequences)
{
    const DesignMatrices d = make_design(Matrix::Identity(3, 3), Vector::Ones(3));
    const Vector y = Vector::LinSpaced(3, 0, 1);
    EXPECT_THROW(solve_path(d, y, std::vector<double>{}), ValidationError);
    EXPECT_THROW(solve_path(d, y, std::vector<double>{0.1, 0.2}), ValidationError);
    EXPECT_THROW(solve_path(d, y, std::vector<double>{0.1, 0.1}), ValidationError);
    EXPECT_THROW(solve_path(d, y, std::vector<double>{0.1, -0.1}), ValidationError);
}

TEST(Path, CsvExport)
{
    std::mt19937_64 rng(11);
    const Problem p = random_problem(rng, 3, 20);
    const PathResult path = solve_path(p.design, p.y, std::vector<double>{1.0, 0.1});
    testing_helpers::TempDir dir;
    const std::vector<std::string> names{"a", "b,c", "d"};
    write_path_csv(path, names, dir / "path.csv");
    std::istringstream in(testing_helpers::read_file(dir / "path.csv"));
    std::string header, row;
    std::getline(in, header);
    EXPECT_EQ(header, "alpha,train_error,a,\"b,c\",d");
    int rows = 0;
    while (std::getline(in, row))
        if (!row.empty()) ++rows;
    EXPECT_EQ(rows, 2);
    const std::vector<std::string> short_names{"a"};
    EXPECT_THROW(write_path_csv(path, short_names, dir / "x.csv"), ValidationError);
}
