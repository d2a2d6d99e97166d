#include "subforest/interpret.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace subforest {

namespace {

int feature_of(const FittedModel& model, const std::string& name)
{
    const auto it = std::find(model.feature_names.begin(), model.feature_names.end(), name);
    if (it == model.feature_names.end()) throw ValidationError("unknown feature '" + name + "'");
    return static_cast<int>(it - model.feature_names.begin());
}

void require_selected(const FittedModel& model, int p)
{
    if (!std::binary_search(model.selected_features.begin(), model.selected_features.end(), p))
        throw ValidationError("feature '" + model.feature_names[static_cast<std::size_t>(p)] + "' is not selected");
}

// Sorted distinct thresholds of the given trees' splits on `feature`.
std::vector<double> breaks_of(const FittedModel& model, const std::vector<int>& trees, int feature)
{
    std::vector<double> b;
    for (int t : trees)
        for (const TreeNode& nd : model.ensemble.trees[static_cast<std::size_t>(t)].nodes())
            if (!nd.is_leaf() && nd.feature == feature) b.push_back(nd.threshold);
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    return b;
}

// A point inside the i-th interval of a break list: (b[i-1], b[i]].
double representative(const std::vector<double>& b, std::size_t i)
{
    if (b.empty()) return 0.0;
    return i < b.size() ? b[i] : std::nextafter(b.back(), std::numeric_limits<double>::infinity());
}

std::size_t interval_of(const std::vector<double>& b, double v)
{
    return static_cast<std::size_t>(std::lower_bound(b.begin(), b.end(), v) - b.begin());
}

} // namespace

ImportanceReport weighted_importances(const FittedModel& model, const PenaltySpec* groups)
{
    const auto P = static_cast<Eigen::Index>(model.feature_names.size());
    ImportanceReport r;
    r.feature_names = model.feature_names;
    r.per_feature = Vector::Zero(P);
    for (int t : model.subforest) r.per_feature += model.weights[t] * tree_mdi(model.ensemble.trees[static_cast<std::size_t>(t)]);
    if (groups != nullptr) {
        if (groups->mode != PenaltyMode::groups) throw ValidationError("importances: grouping must be a groups penalty");
        groups->validate(static_cast<int>(P));
        r.per_group.assign(groups->group_costs.size(), 0.0);
        for (Eigen::Index p = 0; p < P; ++p)
            r.per_group[static_cast<std::size_t>(groups->group_of[static_cast<std::size_t>(p)] - 1)] += r.per_feature[p];
    }
    return r;
}

std::vector<std::vector<std::string>> list_subforest(const FittedModel& model)
{
    std::vector<std::vector<std::string>> out;
    for (int t : model.subforest) {
        std::vector<std::string> names;
        for (int f : model.ensemble.trees[static_cast<std::size_t>(t)].used_features())
            names.push_back(model.feature_names[static_cast<std::size_t>(f)]);
        out.push_back(std::move(names));
    }
    return out;
}

double StepFunction::operator()(double v) const
{
    return levels[interval_of(breaks, v)];
}

double InteractionGrid::operator()(double v1, double v2) const
{
    return levels(static_cast<Eigen::Index>(interval_of(breaks1, v1)), static_cast<Eigen::Index>(interval_of(breaks2, v2)));
}

std::vector<double> quantile_grid(const Vector& column, int n)
{
    if (column.size() == 0) throw ValidationError("quantile grid: empty column");
    if (n < 1) throw ValidationError("quantile grid: need at least one point");
    std::vector<double> v(column.data(), column.data() + column.size());
    std::sort(v.begin(), v.end());
    std::vector<double> g;
    const double last = static_cast<double>(v.size() - 1);
    for (int i = 0; i < n; ++i) {
        const double pos = n == 1 ? 0.5 * last : last * i / (n - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const std::size_t hi = std::min(lo + 1, v.size() - 1);
        const double frac = pos - static_cast<double>(lo);
        g.push_back(frac == 0.0 ? v[lo] : v[lo] + frac * (v[hi] - v[lo]));
    }
    g.erase(std::unique(g.begin(), g.end()), g.end());
    return g;
}

std::vector<int> shape_terms(const FittedModel& model)
{
    std::set<int> s;
    for (int t : model.subforest) {
        const auto& f = model.ensemble.trees[static_cast<std::size_t>(t)].used_features();
        if (f.size() == 1) s.insert(f[0]);
    }
    return {s.begin(), s.end()};
}

std::vector<std::pair<int, int>> interaction_terms(const FittedModel& model)
{
    std::set<std::pair<int, int>> s;
    for (int t : model.subforest) {
        const auto& f = model.ensemble.trees[static_cast<std::size_t>(t)].used_features();
        if (f.size() == 2) s.emplace(f[0], f[1]);
    }
    return {s.begin(), s.end()};
}

ShapeCurve shape_function(const FittedModel& model, const Matrix& X_train, const std::string& feature, int n_grid)
{
    const int p = feature_of(model, feature);
    require_selected(model, p);
    if (X_train.cols() != static_cast<Eigen::Index>(model.feature_names.size()))
        throw ValidationError("shape function: training data width does not match the model");
    ShapeCurve c;
    c.feature = feature;
    c.feature_index = p;
    for (int t : model.subforest) {
        const auto& f = model.ensemble.trees[static_cast<std::size_t>(t)].used_features();
        if (f.size() == 1 && f[0] == p) c.trees.push_back(t);
    }
    if (c.trees.empty()) throw ValidationError("no single-feature tree in the subforest uses '" + feature + "'");

    c.exact.breaks = breaks_of(model, c.trees, p);
    for (std::size_t i = 0; i <= c.exact.breaks.size(); ++i) {
        const double r = representative(c.exact.breaks, i);
        double s = 0.0;
        for (int t : c.trees)
            s += model.weights[t] * model.ensemble.trees[static_cast<std::size_t>(t)].predict_one([&](int) { return r; });
        c.exact.levels.push_back(s);
    }
    c.grid = quantile_grid(X_train.col(p), n_grid);
    for (double v : c.grid) c.value.push_back(c.exact(v));
    return c;
}

InteractionGrid pairwise_interaction(const FittedModel& model, const Matrix& X_train, const std::string& feature1,
                                     const std::string& feature2, int n_grid)
{
    const int p1 = feature_of(model, feature1);
    const int p2 = feature_of(model, feature2);
    if (p1 == p2) throw ValidationError("interaction: the two features must differ");
    require_selected(model, p1);
    require_selected(model, p2);
    if (X_train.cols() != static_cast<Eigen::Index>(model.feature_names.size()))
        throw ValidationError("interaction: training data width does not match the model");
    InteractionGrid g;
    g.feature1 = feature1;
    g.feature2 = feature2;
    g.index1 = p1;
    g.index2 = p2;
    const std::vector<int> pair{std::min(p1, p2), std::max(p1, p2)};
    for (int t : model.subforest)
        if (model.ensemble.trees[static_cast<std::size_t>(t)].used_features() == pair) g.trees.push_back(t);
    if (g.trees.empty())
        throw ValidationError("no tree in the subforest splits on exactly '" + feature1 + "' and '" + feature2 + "'");

    g.breaks1 = breaks_of(model, g.trees, p1);
    g.breaks2 = breaks_of(model, g.trees, p2);
    const auto n1 = static_cast<Eigen::Index>(g.breaks1.size() + 1);
    const auto n2 = static_cast<Eigen::Index>(g.breaks2.size() + 1);
    g.levels = Matrix::Zero(n1, n2);
    for (Eigen::Index a = 0; a < n1; ++a) {
        const double r1 = representative(g.breaks1, static_cast<std::size_t>(a));
        for (Eigen::Index b = 0; b < n2; ++b) {
            const double r2 = representative(g.breaks2, static_cast<std::size_t>(b));
            double s = 0.0;
            for (int t : g.trees)
                s += model.weights[t] *
                     model.ensemble.trees[static_cast<std::size_t>(t)].predict_one([&](int f) { return f == p1 ? r1 : r2; });
            g.levels(a, b) = s;
        }
    }
    g.grid1 = quantile_grid(X_train.col(p1), n_grid);
    g.grid2 = quantile_grid(X_train.col(p2), n_grid);
    g.value.resize(static_cast<Eigen::Index>(g.grid1.size()), static_cast<Eigen::Index>(g.grid2.size()));
    for (std::size_t a = 0; a < g.grid1.size(); ++a)
        for (std::size_t b = 0; b < g.grid2.size(); ++b)
            g.value(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = g(g.grid1[a], g.grid2[b]);
    return g;
}

Matrix path_importances(const PathResult& path, const Ensemble& ensemble, const DesignMatrices& design)
{
    const Eigen::Index T = design.n_trees();
    Matrix mdi(design.n_features(), T);
    for (Eigen::Index k = 0; k < T; ++k)
        mdi.col(k) = tree_mdi(ensemble.trees[static_cast<std::size_t>(design.tree_index[static_cast<std::size_t>(k)])]);
    Matrix out(static_cast<Eigen::Index>(path.solutions.size()), design.n_features());
    for (std::size_t i = 0; i < path.solutions.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = (mdi * path.solutions[i].w).transpose();
    return out;
}

} // namespace subforest
