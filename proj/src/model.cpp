#include "subforest/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace subforest {

namespace {

constexpr std::uint64_t kPolishBootstrapStream = 11;
constexpr std::uint64_t kPolishTreeStream = 12;
constexpr std::uint64_t kSketchStream = 13;

} // namespace

Vector PolishedModel::predict(const Matrix& X) const
{
    if (forest.empty()) return Vector::Constant(X.rows(), base);
    Vector s = Vector::Zero(X.rows());
    for (const Tree& t : forest) s += predict_tree(t, X);
    return s / static_cast<double>(forest.size());
}

PolishedModel polish(const Dataset& data, std::span<const int> features, const PolishOptions& options)
{
    if (features.empty()) throw ValidationError("polish: empty feature set");
    if (options.n_trees < 1) throw ValidationError("polish: n_trees must be >= 1");
    std::vector<int> subset(features.begin(), features.end());
    std::sort(subset.begin(), subset.end());
    if (std::adjacent_find(subset.begin(), subset.end()) != subset.end())
        throw ValidationError("polish: duplicate feature index");
    if (subset.front() < 0 || subset.back() >= static_cast<int>(data.n_features()))
        throw ValidationError("polish: feature index out of range");

    Matrix Xs(data.features.rows(), static_cast<Eigen::Index>(subset.size()));
    for (std::size_t j = 0; j < subset.size(); ++j) Xs.col(static_cast<Eigen::Index>(j)) = data.features.col(subset[j]);
    const ColumnOrder order(Xs);
    const auto k = static_cast<double>(subset.size());
    TreeParams params;
    params.max_depth = std::numeric_limits<int>::max();
    params.min_samples_leaf = options.min_samples_leaf;
    params.max_features = static_cast<int>(data.task == Task::binary_classification ? std::ceil(std::sqrt(k))
                                                                                     : std::ceil(k / 3.0));

    PolishedModel model;
    model.feature_subset = subset;
    model.base = data.response.mean();
    model.forest.resize(static_cast<std::size_t>(options.n_trees));
    const std::size_t n = data.n_rows();
    const int width = static_cast<int>(data.n_features());
    parallel_for(model.forest.size(), options.threads, [&](std::size_t t) {
        std::mt19937_64 rng(derive_seed(options.seed, kPolishBootstrapStream, t));
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        std::vector<int> weight(n, 0);
        for (std::size_t i = 0; i < n; ++i) ++weight[pick(rng)];
        TreeParams p = params;
        p.seed = derive_seed(options.seed, kPolishTreeStream, t);
        model.forest[t] = fit_tree_weighted(Xs, order, data.response, weight, p).remap_features(subset, width);
    });
    return model;
}

std::vector<std::string> FittedModel::selected_feature_names() const
{
    std::vector<std::string> out;
    for (int p : selected_features) out.push_back(feature_names[static_cast<std::size_t>(p)]);
    return out;
}

Vector FittedModel::lasso_predict(const Matrix& X) const
{
    if (X.cols() != ensemble.n_features)
        throw ValidationError("predict: data has " + std::to_string(X.cols()) + " features, model expects " +
                              std::to_string(ensemble.n_features));
    Vector s = Vector::Constant(X.rows(), intercept);
    for (int t : subforest) s += weights[t] * predict_tree(ensemble.trees[static_cast<std::size_t>(t)], X);
    return s;
}

FittedModel fit(const Dataset& data, const FitOptions& options)
{
    if (options.build == BuildMethod::custom)
        throw ValidationError("fit: a custom build needs a supplied ensemble");
    return fit_ensemble(data, build_ensemble(data, options.build, options.build_config), options);
}

FittedModel fit_ensemble(const Dataset& data, Ensemble ensemble, const FitOptions& options)
{
    data.validate();
    if (ensemble.n_features != static_cast<int>(data.n_features()))
        throw ValidationError("fit: ensemble width " + std::to_string(ensemble.n_features) + " does not match " +
                              std::to_string(data.n_features()) + " data columns");
    for (Tree& t : ensemble.trees)
        if (!t.has_node_stats()) t.refresh_node_stats(data.features, data.response);

    FittedModel m;
    m.task = data.task;
    m.feature_names = data.feature_names;
    m.class_labels = data.class_labels;
    m.penalty = options.penalty;
    m.l0_k = options.l0_k;

    const DesignMatrices design = assemble_design(ensemble, data, options.penalty);
    m.dropped_trees = design.dropped;
    const Vector& y = data.response;

    std::optional<std::pair<DesignMatrices, Vector>> sketched;
    if (options.sketch_rho) sketched = sketch(design, y, *options.sketch_rho, derive_seed(options.build_config.seed, kSketchStream, 0));
    const DesignMatrices& D = sketched ? sketched->first : design;
    const Vector& yD = sketched ? sketched->second : y;

    const NnLassoSolver solver(D, yD, options.solver);
    m.alpha_max = solver.alpha_max();
    if (options.l0_k) {
        m.solution = solve_l0(D, yD, *options.l0_k, options.solver);
        m.alpha = 0.0;
    } else {
        m.solution = solver.solve(options.alpha);
        m.alpha = options.alpha;
        if (!m.solution.converged)
            m.warnings.push_back("solver did not converge within " + std::to_string(options.solver.max_sweeps) + " sweeps");
    }

    m.intercept = m.solution.intercept;
    m.weights = Vector::Zero(static_cast<Eigen::Index>(ensemble.size()));
    for (Eigen::Index k = 0; k < design.n_trees(); ++k) {
        const int t = design.tree_index[static_cast<std::size_t>(k)];
        m.weights[t] = m.solution.w[k];
        if (m.solution.w[k] > options.solver.tol_select) m.subforest.push_back(t);
    }
    m.selected_features = m.solution.selected_features;
    m.ensemble = std::move(ensemble);

    const Vector fitted = (design.A * m.solution.w).array() + m.intercept;
    m.train_error = (y - fitted).squaredNorm() / static_cast<double>(y.size());

    if (m.selected_features.empty()) m.warnings.push_back("empty selection: the model predicts the training mean");
    if (options.polish) {
        if (m.selected_features.empty()) {
            PolishedModel pm;
            pm.base = y.mean();
            m.polished = std::move(pm);
        } else {
            PolishOptions po;
            po.n_trees = options.polish_trees;
            po.seed = options.build_config.seed;
            po.threads = options.build_config.threads;
            m.polished = polish(data, m.selected_features, po);
        }
    }
    return m;
}

Vector predict(const FittedModel& model, const Matrix& X)
{
    if (X.cols() != static_cast<Eigen::Index>(model.feature_names.size()))
        throw ValidationError("predict: data has " + std::to_string(X.cols()) + " features, model expects " +
                              std::to_string(model.feature_names.size()));
    return model.polished ? model.polished->predict(X) : model.lasso_predict(X);
}

Vector predict_proba(const FittedModel& model, const Matrix& X)
{
    if (model.task != Task::binary_classification) throw ValidationError("predict_proba: model is not a classifier");
    return ((predict(model, X).array() + 1.0) * 0.5).cwiseMax(0.0).cwiseMin(1.0);
}

Vector predict_class(const FittedModel& model, const Matrix& X)
{
    if (model.task != Task::binary_classification) throw ValidationError("predict_class: model is not a classifier");
    return predict(model, X).unaryExpr([](double s) { return s >= 0.0 ? 1.0 : -1.0; });
}

} // namespace subforest
