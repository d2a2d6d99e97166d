#include "subforest/sparsify.hpp"

#include <algorithm>
#include <cmath>

namespace subforest {

NnLassoSolver::NnLassoSolver(const DesignMatrices& design, const Vector& y, SolverOptions options)
    : design_(design), options_(options)
{
    const Eigen::Index n = design.n_rows();
    const Eigen::Index T = design.n_trees();
    if (y.size() != n)
        throw ValidationError("solver: response has " + std::to_string(y.size()) + " rows, design has " + std::to_string(n));
    if (n == 0) throw ValidationError("solver: empty design");
    if (design.u.size() != T || design.G.cols() != T) throw ValidationError("solver: inconsistent design dimensions");
    if (!y.allFinite() || !design.A.allFinite() || !design.u.allFinite())
        throw ValidationError("solver: non-finite input");
    if (T > 0 && !(design.u.minCoeff() > 0.0)) throw ValidationError("solver: penalty weights must be positive");
    if (!(options_.tol_cd > 0.0) || options_.max_sweeps < 1) throw ValidationError("solver: invalid options");

    const double inv_n = 1.0 / static_cast<double>(n);
    if (options_.fit_intercept) {
        column_mean_ = design.A.colwise().mean().transpose();
        y_mean_ = y.mean();
    } else {
        column_mean_ = Vector::Zero(T);
        y_mean_ = 0.0;
    }
    y_centered_ = y.array() - y_mean_;

    Matrix B = design.A;
    for (Eigen::Index t = 0; t < T; ++t) B.col(t) = (B.col(t).array() - column_mean_[t]) / design.u[t];
    gram_ = Matrix(T, T);
    gram_.setZero();
    gram_.selfadjointView<Eigen::Lower>().rankUpdate(B.transpose(), inv_n);
    gram_ = gram_.selfadjointView<Eigen::Lower>();
    corr_ = B.transpose() * y_centered_ * inv_n;
    yy_ = y_centered_.squaredNorm() * inv_n;
    alpha_max_ = T > 0 ? 2.0 * std::max(0.0, corr_.maxCoeff()) : 0.0;
}

double NnLassoSolver::gram_objective(const Vector& x, double alpha) const
{
    return yy_ - 2.0 * corr_.dot(x) + x.dot(gram_ * x) + alpha * x.sum();
}

LassoSolution NnLassoSolver::solve(double alpha, const Vector* warm_start, SweepTrace* trace) const
{
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ValidationError("solver: alpha must be finite and >= 0");
    const Eigen::Index T = design_.n_trees();
    const Vector& u = design_.u;

    Vector x = Vector::Zero(T);
    if (warm_start != nullptr) {
        if (warm_start->size() != T) throw ValidationError("solver: warm start has the wrong length");
        x = warm_start->cwiseMax(0.0).cwiseProduct(u);
    }
    if (T == 0) {
        LassoSolution s = evaluate(Vector::Zero(0), alpha);
        return s;
    }

    const double qmax = gram_.diagonal().maxCoeff();
    std::vector<char> degenerate(static_cast<std::size_t>(T));
    for (Eigen::Index j = 0; j < T; ++j) degenerate[static_cast<std::size_t>(j)] = !(gram_(j, j) > 1e-14 * qmax);

    const double half_alpha = 0.5 * alpha;
    const double snap = 1e-13 * half_alpha;
    Vector h = gram_ * x;

    auto update = [&](Eigen::Index j) {
        double xn = 0.0;
        if (!degenerate[static_cast<std::size_t>(j)]) {
            const double q = gram_(j, j);
            const double num = corr_[j] - (h[j] - q * x[j]) - half_alpha;
            xn = num > snap ? num / q : 0.0;
        }
        const double d = xn - x[j];
        if (d != 0.0) {
            x[j] = xn;
            h.noalias() += d * gram_.col(j);
        }
        return std::abs(d);
    };
    auto full_sweep = [&] {
        double m = 0.0;
        for (Eigen::Index j = 0; j < T; ++j) m = std::max(m, update(j));
        return m;
    };
    auto kkt_violation = [&] {
        double v = 0.0;
        for (Eigen::Index j = 0; j < T; ++j) {
            if (degenerate[static_cast<std::size_t>(j)]) continue;
            const double g = u[j] * (2.0 * (h[j] - corr_[j]) + alpha);
            v = std::max(v, x[j] > 0.0 ? std::abs(g) : std::max(0.0, -g));
        }
        return v;
    };
    auto record = [&] {
        if (trace != nullptr) trace->objective.push_back(gram_objective(x, alpha));
    };

    int sweeps = 0;
    bool converged = false;
    std::vector<Eigen::Index> active;
    while (sweeps < options_.max_sweeps) {
        h.noalias() = gram_ * x;
        const double change = full_sweep();
        ++sweeps;
        record();
        if (change < options_.tol_cd && kkt_violation() < options_.tol_cd) {
            converged = true;
            break;
        }
        active.clear();
        for (Eigen::Index j = 0; j < T; ++j)
            if (x[j] > 0.0) active.push_back(j);
        while (sweeps < options_.max_sweeps) {
            double m = 0.0;
            for (Eigen::Index j : active) m = std::max(m, update(j));
            ++sweeps;
            record();
            if (m < options_.tol_cd) break;
        }
    }

    LassoSolution s = evaluate(x.cwiseQuotient(u), alpha);
    s.converged = converged;
    s.sweeps = sweeps;
    return s;
}

LassoSolution NnLassoSolver::evaluate(const Vector& w, double alpha) const
{
    if (w.size() != design_.n_trees()) throw ValidationError("solver: weight vector has the wrong length");
    LassoSolution s;
    s.alpha = alpha;
    s.w = w;
    s.intercept = y_mean_ - column_mean_.dot(w);
    s.feature_usage = design_.G * w;
    for (Eigen::Index p = 0; p < s.feature_usage.size(); ++p)
        if (s.feature_usage[p] > options_.tol_select) s.selected_features.push_back(static_cast<int>(p));
    const Vector r = (y_centered_ - design_.A * w).array() + column_mean_.dot(w);
    s.train_error = r.squaredNorm() / static_cast<double>(design_.n_rows());
    s.objective = s.train_error + alpha * design_.u.dot(w);
    if (!std::isfinite(s.objective)) throw NumericalError("solver: non-finite objective");
    return s;
}

LassoSolution solve_nnlasso(const DesignMatrices& design, const Vector& y, double alpha, const Vector* warm_start,
                            const SolverOptions& options)
{
    return NnLassoSolver(design, y, options).solve(alpha, warm_start);
}

} // namespace subforest
