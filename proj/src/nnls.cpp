#include "subforest/nnls.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace subforest {

namespace {

Matrix principal(const Matrix& Q, const std::vector<Eigen::Index>& idx)
{
    const auto k = static_cast<Eigen::Index>(idx.size());
    Matrix S(k, k);
    for (Eigen::Index a = 0; a < k; ++a)
        for (Eigen::Index b = 0; b < k; ++b) S(a, b) = Q(idx[a], idx[b]);
    return S;
}

Vector gather(const Vector& v, const std::vector<Eigen::Index>& idx)
{
    Vector out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t a = 0; a < idx.size(); ++a) out[static_cast<Eigen::Index>(a)] = v[idx[a]];
    return out;
}

} // namespace

Vector nnls_gram(const Matrix& Q, const Vector& c, int max_iterations)
{
    const Eigen::Index n = c.size();
    if (Q.rows() != n || Q.cols() != n) throw ValidationError("nnls: Gram matrix and vector disagree in size");
    if (!Q.allFinite() || !c.allFinite()) throw ValidationError("nnls: non-finite input");
    Vector x = Vector::Zero(n);
    if (n == 0) return x;
    if (max_iterations <= 0) max_iterations = static_cast<int>(10 * n + 50);

    const double scale = std::max(c.cwiseAbs().maxCoeff(), Q.diagonal().cwiseAbs().maxCoeff());
    if (scale == 0.0) return x;
    const double grad_tol = 1e-13 * scale;
    const double dep_tol = 1e-11;

    std::vector<char> passive(static_cast<std::size_t>(n), 0);
    std::vector<char> banned(static_cast<std::size_t>(n), 0);
    std::vector<Eigen::Index> P;

    for (int iter = 0; iter < max_iterations; ++iter) {
        const Vector g = c - Q * x;
        Eigen::Index j = -1;
        double best = grad_tol;
        for (Eigen::Index k = 0; k < n; ++k) {
            const auto sk = static_cast<std::size_t>(k);
            if (!passive[sk] && !banned[sk] && g[k] > best) {
                best = g[k];
                j = k;
            }
        }
        if (j < 0) return x;

        if (!(Q(j, j) > 0.0)) {
            banned[static_cast<std::size_t>(j)] = 1;
            continue;
        }
        if (!P.empty()) {
            const Matrix S = principal(Q, P);
            Vector q(static_cast<Eigen::Index>(P.size()));
            for (std::size_t a = 0; a < P.size(); ++a) q[static_cast<Eigen::Index>(a)] = Q(P[a], j);
            const double schur = Q(j, j) - q.dot(S.ldlt().solve(q));
            if (!(schur > dep_tol * Q(j, j))) {
                banned[static_cast<std::size_t>(j)] = 1;
                continue;
            }
        }
        P.push_back(j);
        passive[static_cast<std::size_t>(j)] = 1;

        for (int inner = 0; inner <= static_cast<int>(n); ++inner) {
            const Vector z = principal(Q, P).ldlt().solve(gather(c, P));
            if (!z.allFinite()) throw NumericalError("nnls: singular passive system");
            if (inner == 0 && z[z.size() - 1] <= 0.0) {
                P.pop_back();
                passive[static_cast<std::size_t>(j)] = 0;
                banned[static_cast<std::size_t>(j)] = 1;
                break;
            }
            bool feasible = true;
            double step = 1.0;
            for (std::size_t a = 0; a < P.size(); ++a) {
                const double za = z[static_cast<Eigen::Index>(a)];
                if (za <= 0.0) {
                    feasible = false;
                    const double xa = x[P[a]];
                    step = std::min(step, xa / (xa - za));
                }
            }
            if (feasible) {
                for (std::size_t a = 0; a < P.size(); ++a) x[P[a]] = z[static_cast<Eigen::Index>(a)];
                break;
            }
            std::vector<Eigen::Index> keep;
            for (std::size_t a = 0; a < P.size(); ++a) {
                const Eigen::Index k = P[a];
                x[k] += step * (z[static_cast<Eigen::Index>(a)] - x[k]);
                if (x[k] <= 1e-15 * (1.0 + std::abs(z[static_cast<Eigen::Index>(a)]))) {
                    x[k] = 0.0;
                    passive[static_cast<std::size_t>(k)] = 0;
                } else {
                    keep.push_back(k);
                }
            }
            P.swap(keep);
            std::fill(banned.begin(), banned.end(), 0);
            if (P.empty()) break;
        }
    }
    throw NumericalError("nnls: iteration limit reached");
}

Vector nnls(const Matrix& A, const Vector& b)
{
    if (A.rows() != b.size()) throw ValidationError("nnls: matrix and right-hand side disagree in size");
    return nnls_gram(A.transpose() * A, A.transpose() * b);
}

} // namespace subforest
