#include "subforest/model.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace subforest {

namespace {

constexpr std::uint64_t kFoldStream = 21;

} // namespace

std::vector<int> fold_assignment(std::size_t n, int k, std::uint64_t seed)
{
    if (k < 2) throw ValidationError("cv: k must be >= 2");
    if (static_cast<std::size_t>(k) > n) throw ValidationError("cv: k exceeds the number of rows");
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(derive_seed(seed, kFoldStream, 0));
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<int> fold(n);
    for (std::size_t i = 0; i < n; ++i) fold[static_cast<std::size_t>(perm[i])] = static_cast<int>(i % static_cast<std::size_t>(k));
    return fold;
}

CvResult fit_cv(const Dataset& data, const FitOptions& options, const CvOptions& cv)
{
    if (options.build == BuildMethod::custom) throw ValidationError("cv: a custom build needs a supplied ensemble");
    return fit_cv_ensemble(data, build_ensemble(data, options.build, options.build_config), options, cv);
}

CvResult fit_cv_ensemble(const Dataset& data, Ensemble ensemble, const FitOptions& options, const CvOptions& cv)
{
    data.validate();
    if (options.l0_k) throw ValidationError("cv: best-subset selection is not cross-validated");
    if (cv.n_alphas < 1) throw ValidationError("cv: n_alphas must be >= 1");
    if (!(cv.tol >= 0.0)) throw ValidationError("cv: tol must be >= 0");
    const std::size_t n = data.n_rows();
    const std::vector<int> fold = fold_assignment(n, cv.k, options.build_config.seed);
    for (int f = 0; f < cv.k; ++f) {
        const auto n_train = static_cast<std::size_t>(std::count_if(fold.begin(), fold.end(), [&](int v) { return v != f; }));
        if (n_train < 2) throw ValidationError("cv: fold " + std::to_string(f) + " leaves fewer than 2 training rows");
    }
    for (Tree& t : ensemble.trees)
        if (!t.has_node_stats()) t.refresh_node_stats(data.features, data.response);

    const DesignMatrices design = assemble_design(ensemble, data, options.penalty);
    const Vector& y = data.response;
    CvResult out;
    {
        const NnLassoSolver full(design, y, options.solver);
        out.alphas = default_alpha_grid(full.alpha_max(), cv.n_alphas);
        const PathResult path = solve_path(full, out.alphas);
        for (const auto& s : path.solutions) out.path_support_sizes.push_back(s.support_size());
    }
    const std::size_t n_alpha = out.alphas.size();

    std::vector<std::vector<std::vector<int>>> fold_sets(static_cast<std::size_t>(cv.k));
    out.fold_errors.assign(static_cast<std::size_t>(cv.k), std::vector<double>(n_alpha, 0.0));
    parallel_for(static_cast<std::size_t>(cv.k), cv.threads, [&](std::size_t f) {
        std::vector<int> train, val;
        for (std::size_t i = 0; i < n; ++i) (fold[i] == static_cast<int>(f) ? val : train).push_back(static_cast<int>(i));
        const DesignMatrices dt = restrict_rows(design, train);
        Vector yt(static_cast<Eigen::Index>(train.size()));
        for (std::size_t i = 0; i < train.size(); ++i) yt[static_cast<Eigen::Index>(i)] = y[train[i]];
        const DesignMatrices dv = restrict_rows(design, val);
        Vector yv(static_cast<Eigen::Index>(val.size()));
        for (std::size_t i = 0; i < val.size(); ++i) yv[static_cast<Eigen::Index>(i)] = y[val[i]];

        const NnLassoSolver solver(dt, yt, options.solver);
        const PathResult path = solve_path(solver, out.alphas);
        for (std::size_t a = 0; a < n_alpha; ++a) {
            const LassoSolution& s = path.solutions[a];
            const Vector pred = (dv.A * s.w).array() + s.intercept;
            out.fold_errors[f][a] = (yv - pred).squaredNorm() / static_cast<double>(yv.size());
            fold_sets[f].push_back(s.selected_features);
        }
    });

    out.mean_error.assign(n_alpha, 0.0);
    for (std::size_t a = 0; a < n_alpha; ++a) {
        for (const auto& fe : out.fold_errors) out.mean_error[a] += fe[a];
        out.mean_error[a] /= cv.k;
    }
    const double best = *std::min_element(out.mean_error.begin(), out.mean_error.end());
    for (std::size_t a = 0; a < n_alpha; ++a) {
        if (out.mean_error[a] <= (1.0 + cv.tol) * best) {
            out.best_index = static_cast<int>(a);
            break;
        }
    }
    out.best_alpha = out.alphas[static_cast<std::size_t>(out.best_index)];

    FitOptions refit = options;
    refit.alpha = out.best_alpha;
    refit.sketch_rho.reset();
    out.model = fit_ensemble(data, std::move(ensemble), refit);
    out.support_size = out.model.selected_features.size();

    for (const auto& sets : fold_sets) {
        auto it = std::find_if(sets.begin(), sets.end(), [&](const std::vector<int>& s) { return s.size() == out.support_size; });
        out.fold_feature_sets.push_back(it != sets.end() ? *it : sets[static_cast<std::size_t>(out.best_index)]);
    }
    return out;
}

} // namespace subforest
