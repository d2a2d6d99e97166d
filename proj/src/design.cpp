#include "subforest/sparsify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

namespace subforest {

std::string to_string(PenaltyMode mode)
{
    switch (mode) {
    case PenaltyMode::uniform: return "uniform";
    case PenaltyMode::costs: return "costs";
    case PenaltyMode::groups: return "groups";
    }
    return "uniform";
}

PenaltySpec PenaltySpec::with_costs(std::vector<double> costs)
{
    PenaltySpec p;
    p.mode = PenaltyMode::costs;
    p.costs = std::move(costs);
    return p;
}

PenaltySpec PenaltySpec::with_groups(std::vector<int> group_of, std::vector<double> group_costs)
{
    PenaltySpec p;
    p.mode = PenaltyMode::groups;
    const int n_groups = group_of.empty() ? 0 : *std::max_element(group_of.begin(), group_of.end());
    if (group_costs.empty()) group_costs.assign(static_cast<std::size_t>(std::max(n_groups, 0)), 1.0);
    p.group_of = std::move(group_of);
    p.group_costs = std::move(group_costs);
    return p;
}

void PenaltySpec::validate(int n_features) const
{
    switch (mode) {
    case PenaltyMode::uniform: return;
    case PenaltyMode::costs:
        if (static_cast<int>(costs.size()) != n_features)
            throw ValidationError("penalty: expected " + std::to_string(n_features) + " feature costs, got " +
                                  std::to_string(costs.size()));
        for (double c : costs)
            if (!(c > 0.0) || !std::isfinite(c)) throw ValidationError("penalty: feature costs must be positive");
        return;
    case PenaltyMode::groups: {
        if (static_cast<int>(group_of.size()) != n_features)
            throw ValidationError("penalty: expected " + std::to_string(n_features) + " group ids, got " +
                                  std::to_string(group_of.size()));
        const std::set<int> ids(group_of.begin(), group_of.end());
        if (ids.empty() || *ids.begin() != 1 || *ids.rbegin() != static_cast<int>(ids.size()))
            throw ValidationError("penalty: group ids must be contiguous from 1");
        if (group_costs.size() != ids.size())
            throw ValidationError("penalty: expected " + std::to_string(ids.size()) + " group costs, got " +
                                  std::to_string(group_costs.size()));
        for (double c : group_costs)
            if (!(c > 0.0) || !std::isfinite(c)) throw ValidationError("penalty: group costs must be positive");
        return;
    }
    }
}

double PenaltySpec::tree_weight(std::span<const int> features) const
{
    switch (mode) {
    case PenaltyMode::uniform: return static_cast<double>(features.size());
    case PenaltyMode::costs: {
        double u = 0.0;
        for (int f : features) u += costs[static_cast<std::size_t>(f)];
        return u;
    }
    case PenaltyMode::groups: {
        std::set<int> touched;
        for (int f : features) touched.insert(group_of[static_cast<std::size_t>(f)]);
        double u = 0.0;
        for (int g : touched) u += group_costs[static_cast<std::size_t>(g - 1)];
        return u;
    }
    }
    return 0.0;
}

DesignMatrices assemble_design(const Ensemble& ensemble, const Matrix& X, const PenaltySpec& penalty)
{
    if (X.cols() != ensemble.n_features)
        throw ValidationError("assemble_design: data has " + std::to_string(X.cols()) + " features, ensemble expects " +
                              std::to_string(ensemble.n_features));
    penalty.validate(ensemble.n_features);

    DesignMatrices d;
    for (std::size_t t = 0; t < ensemble.trees.size(); ++t) {
        if (ensemble.trees[t].n_splits() == 0)
            d.dropped.push_back(static_cast<int>(t));
        else
            d.tree_index.push_back(static_cast<int>(t));
    }
    const auto T = static_cast<Eigen::Index>(d.tree_index.size());
    d.A.resize(X.rows(), T);
    d.G = Matrix::Zero(ensemble.n_features, T);
    d.u.resize(T);
    for (Eigen::Index k = 0; k < T; ++k) {
        const Tree& tree = ensemble.trees[static_cast<std::size_t>(d.tree_index[static_cast<std::size_t>(k)])];
        d.A.col(k) = predict_tree(tree, X);
        for (int f : tree.used_features()) d.G(f, k) = 1.0;
        d.tree_features.push_back(tree.used_features());
        d.u[k] = penalty.tree_weight(tree.used_features());
    }
    return d;
}

DesignMatrices assemble_design(const Ensemble& ensemble, const Dataset& data, const PenaltySpec& penalty)
{
    return assemble_design(ensemble, data.features, penalty);
}

DesignMatrices restrict_rows(const DesignMatrices& design, std::span<const int> rows)
{
    DesignMatrices d;
    d.A.resize(static_cast<Eigen::Index>(rows.size()), design.A.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) d.A.row(static_cast<Eigen::Index>(i)) = design.A.row(rows[i]);
    d.G = design.G;
    d.u = design.u;
    d.tree_features = design.tree_features;
    d.tree_index = design.tree_index;
    d.dropped = design.dropped;
    return d;
}

std::pair<DesignMatrices, Vector> sketch(const DesignMatrices& design, const Vector& y, double rho, std::uint64_t seed)
{
    if (!(rho > 0.0 && rho <= 1.0)) throw ValidationError("sketch: rho must lie in (0, 1]");
    const auto n = static_cast<std::size_t>(design.n_rows());
    const auto eta = static_cast<std::size_t>(std::floor(static_cast<double>(n) * rho));
    if (eta < 1) throw ValidationError("sketch: floor(N * rho) must be at least 1");

    std::vector<int> rows(n);
    std::iota(rows.begin(), rows.end(), 0);
    if (eta < n) {
        std::mt19937_64 rng(mix_seed(seed));
        std::shuffle(rows.begin(), rows.end(), rng);
        rows.resize(eta);
        std::sort(rows.begin(), rows.end());
    }
    Vector ys(static_cast<Eigen::Index>(eta));
    for (std::size_t i = 0; i < eta; ++i) ys[static_cast<Eigen::Index>(i)] = y[rows[i]];
    return {restrict_rows(design, rows), std::move(ys)};
}

double alpha_max(const DesignMatrices& design, const Vector& y_centered)
{
    const double n = static_cast<double>(design.n_rows());
    double best = 0.0;
    for (Eigen::Index t = 0; t < design.n_trees(); ++t) {
        const double corr = 2.0 / n * design.A.col(t).dot(y_centered);
        best = std::max(best, std::max(0.0, corr) / design.u[t]);
    }
    return best;
}

} // namespace subforest
