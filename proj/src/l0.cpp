#include "subforest/nnls.hpp"
#include "subforest/sparsify.hpp"

#include <cstdint>
#include <limits>
#include <unordered_map>

namespace subforest {

namespace {

struct SubsetFit {
    double value = 0.0; // w'Qw - 2c'w at the NNLS optimum
    Vector w;           // over all design columns
};

class SubsetSearch {
public:
    SubsetSearch(const Matrix& Q, const Vector& c, std::vector<std::uint64_t> tree_mask, int n_used)
        : Q_(Q), c_(c), tree_mask_(std::move(tree_mask)), n_used_(n_used)
    {
    }

    const SubsetFit& fit(std::uint64_t allowed)
    {
        auto it = cache_.find(allowed);
        if (it != cache_.end()) return it->second;
        std::vector<Eigen::Index> cols;
        for (std::size_t t = 0; t < tree_mask_.size(); ++t)
            if ((tree_mask_[t] & ~allowed) == 0) cols.push_back(static_cast<Eigen::Index>(t));
        SubsetFit r;
        r.w = Vector::Zero(c_.size());
        if (!cols.empty()) {
            const auto k = static_cast<Eigen::Index>(cols.size());
            Matrix S(k, k);
            Vector s(k);
            for (Eigen::Index a = 0; a < k; ++a) {
                s[a] = c_[cols[a]];
                for (Eigen::Index b = 0; b < k; ++b) S(a, b) = Q_(cols[a], cols[b]);
            }
            const Vector z = nnls_gram(S, s);
            r.value = z.dot(S * z) - 2.0 * s.dot(z);
            for (Eigen::Index a = 0; a < k; ++a) r.w[cols[a]] = z[a];
        }
        return cache_.emplace(allowed, std::move(r)).first->second;
    }

    void search(int K)
    {
        best_value_ = std::numeric_limits<double>::infinity();
        best_mask_ = 0;
        K_ = K;
        recurse(0, 0, 0);
    }

    [[nodiscard]] std::uint64_t best_mask() const noexcept { return best_mask_; }

private:
    void recurse(int next, std::uint64_t included, int n_included)
    {
        const int remaining = n_used_ - next;
        if (n_included + remaining < K_) return;
        const std::uint64_t undecided = remaining == 0 ? 0 : (~std::uint64_t{0} >> (64 - n_used_)) & ~((std::uint64_t{1} << next) - 1);
        if (n_included == K_ || n_included + remaining == K_) {
            const std::uint64_t leaf = n_included == K_ ? included : (included | undecided);
            const double v = fit(leaf).value;
            if (v < best_value_) {
                best_value_ = v;
                best_mask_ = leaf;
            }
            return;
        }
        if (fit(included | undecided).value >= best_value_) return;
        const std::uint64_t bit = std::uint64_t{1} << next;
        recurse(next + 1, included | bit, n_included + 1);
        recurse(next + 1, included, n_included);
    }

    const Matrix& Q_;
    const Vector& c_;
    std::vector<std::uint64_t> tree_mask_;
    int n_used_;
    int K_ = 0;
    double best_value_ = 0.0;
    std::uint64_t best_mask_ = 0;
    std::unordered_map<std::uint64_t, SubsetFit> cache_;
};

} // namespace

LassoSolution solve_l0(const DesignMatrices& design, const Vector& y, int K, const SolverOptions& options)
{
    const NnLassoSolver solver(design, y, options);
    const Eigen::Index T = design.n_trees();
    const Eigen::Index P = design.n_features();

    std::vector<int> slot(static_cast<std::size_t>(P), -1);
    int n_used = 0;
    for (const auto& feats : design.tree_features)
        for (int f : feats)
            if (slot[static_cast<std::size_t>(f)] < 0) slot[static_cast<std::size_t>(f)] = 0;
    for (auto& s : slot)
        if (s == 0) s = n_used++;
    if (K < 0) throw ValidationError("solve_l0: K must be >= 0");
    if (K > n_used)
        throw ValidationError("solve_l0: K = " + std::to_string(K) + " exceeds the " + std::to_string(n_used) +
                              " features used by the ensemble");
    if (n_used > 63) throw ValidationError("solve_l0: at most 63 used features are supported");

    std::vector<std::uint64_t> mask(static_cast<std::size_t>(T), 0);
    for (Eigen::Index t = 0; t < T; ++t)
        for (int f : design.tree_features[static_cast<std::size_t>(t)])
            mask[static_cast<std::size_t>(t)] |= std::uint64_t{1} << slot[static_cast<std::size_t>(f)];

    const double inv_n = 1.0 / static_cast<double>(design.n_rows());
    Matrix Ac = design.A;
    Vector yc = y;
    if (options.fit_intercept) {
        Ac.rowwise() -= Ac.colwise().mean();
        yc.array() -= y.mean();
    }
    const Matrix Q = Ac.transpose() * Ac * inv_n;
    const Vector c = Ac.transpose() * yc * inv_n;

    SubsetSearch search(Q, c, std::move(mask), n_used);
    Vector w = Vector::Zero(T);
    if (K > 0) {
        search.search(K);
        w = search.fit(search.best_mask()).w;
    }
    LassoSolution s = solver.evaluate(w, 0.0);
    s.converged = true;
    return s;
}

} // namespace subforest
