#include "subforest/forest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace subforest {

std::string to_string(BuildMethod method)
{
    switch (method) {
    case BuildMethod::bag: return "bag";
    case BuildMethod::bagboost: return "bagboost";
    case BuildMethod::doublebagboost: return "doublebagboost";
    case BuildMethod::custom: return "custom";
    }
    return "custom";
}

BuildMethod parse_build_method(std::string_view name)
{
    if (name == "bag") return BuildMethod::bag;
    if (name == "bagboost") return BuildMethod::bagboost;
    if (name == "doublebagboost") return BuildMethod::doublebagboost;
    if (name == "custom") return BuildMethod::custom;
    throw ValidationError("unknown build method '" + std::string(name) + "'");
}

void BuildConfig::validate() const
{
    if (max_depth_limit < 1) throw ValidationError("max_depth_limit must be >= 1");
    if (!(bag_convergence_tol > 0.0)) throw ValidationError("bag_convergence_tol must be positive");
    if (trees_per_check < 1) throw ValidationError("trees_per_check must be >= 1");
    if (max_trees < 1) throw ValidationError("max_trees must be >= 1");
    if (min_samples_leaf < 1) throw ValidationError("min_samples_leaf must be >= 1");
}

Vector Ensemble::predict(const Matrix& X) const
{
    if (X.cols() != n_features) throw ValidationError("ensemble predict: column count mismatch");
    Vector out = Vector::Zero(X.rows());
    if (trees.empty()) return out;
    const int n_stages = stage_of.empty() ? 1 : *std::max_element(stage_of.begin(), stage_of.end()) + 1;
    for (int s = 0; s < n_stages; ++s) {
        Vector stage_sum = Vector::Zero(X.rows());
        int count = 0;
        for (std::size_t t = 0; t < trees.size(); ++t) {
            if (!stage_of.empty() && stage_of[t] != s) continue;
            stage_sum += predict_tree(trees[t], X);
            ++count;
        }
        if (count > 0) out += stage_sum / count;
    }
    return out;
}

std::vector<int> Ensemble::used_features() const
{
    std::vector<char> used(static_cast<std::size_t>(n_features), 0);
    for (const auto& t : trees)
        for (int f : t.used_features()) used[static_cast<std::size_t>(f)] = 1;
    std::vector<int> out;
    for (int f = 0; f < n_features; ++f)
        if (used[static_cast<std::size_t>(f)]) out.push_back(f);
    return out;
}

namespace {

constexpr std::uint64_t kBootstrapStream = 1;
constexpr std::uint64_t kTreeStream = 2;

// Relative OOB improvement (against the zero-model error) below which a stage
// counts as "no improvement"; absorbs round-off on already-exact fits.
constexpr double kOobRelativeFloor = 1e-12;

struct GrownTree {
    Tree tree;
    std::vector<int> bag;
    std::vector<int> weight;
    Vector train_pred;
};

struct BuildContext {
    const Matrix& X;
    ColumnOrder order;
    BuildConfig cfg;
    int next_tree = 0;

    BuildContext(const Matrix& X_, const BuildConfig& cfg_) : X(X_), order(X_), cfg(cfg_) {}

    std::vector<GrownTree> fit_batch(const Vector& target, int depth, int count)
    {
        std::vector<GrownTree> batch(static_cast<std::size_t>(count));
        const int first = next_tree;
        next_tree += count;
        const auto n = static_cast<std::size_t>(X.rows());
        parallel_for(batch.size(), cfg.threads, [&](std::size_t k) {
            const auto index = static_cast<std::uint64_t>(first) + k;
            std::mt19937_64 rng(derive_seed(cfg.seed, kBootstrapStream, index));
            std::uniform_int_distribution<std::size_t> pick(0, n - 1);
            GrownTree g;
            g.weight.assign(n, 0);
            g.bag.resize(n);
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t r = pick(rng);
                g.bag[i] = static_cast<int>(r);
                ++g.weight[r];
            }
            std::sort(g.bag.begin(), g.bag.end());
            TreeParams params;
            params.max_depth = depth;
            params.max_features = 0;
            params.min_samples_leaf = cfg.min_samples_leaf;
            params.seed = derive_seed(cfg.seed, kTreeStream, index);
            g.tree = fit_tree_weighted(X, order, target, g.weight, params);
            g.train_pred = predict_tree(g.tree, X);
            batch[k] = std::move(g);
        });
        return batch;
    }
};

double mse(const Vector& a, const Vector& b)
{
    return (a - b).squaredNorm() / static_cast<double>(a.size());
}

bool converged(double previous, double current, double tol)
{
    if (current <= 0.0) return true;
    if (!(previous > 0.0) || !std::isfinite(previous)) return false;
    return (previous - current) / previous < tol;
}

// One bag of depth-`depth` trees fitted to `target`, grown until the bag mean's
// training error converges or the tree budget runs out.
struct Stage {
    int depth = 0;
    std::vector<GrownTree> trees;
    Vector mean_pred;
    // Per-sample OOB sums and counts over this stage's trees.
    Vector oob_sum;
    Vector oob_count;
};

Stage grow_stage(BuildContext& ctx, const Vector& target, int depth, int budget)
{
    const auto n = ctx.X.rows();
    Stage st;
    st.depth = depth;
    Vector sum = Vector::Zero(n);
    double prev = target.squaredNorm() / static_cast<double>(n);
    while (static_cast<int>(st.trees.size()) < budget) {
        const int count = std::min(ctx.cfg.trees_per_check, budget - static_cast<int>(st.trees.size()));
        auto batch = ctx.fit_batch(target, depth, count);
        for (auto& g : batch) {
            sum += g.train_pred;
            st.trees.push_back(std::move(g));
        }
        const double err = mse(target, sum / static_cast<double>(st.trees.size()));
        if (converged(prev, err, ctx.cfg.bag_convergence_tol)) break;
        prev = err;
    }
    st.mean_pred = sum / static_cast<double>(st.trees.size());
    st.oob_sum = Vector::Zero(n);
    st.oob_count = Vector::Zero(n);
    for (const auto& g : st.trees)
        for (Eigen::Index i = 0; i < n; ++i)
            if (g.weight[static_cast<std::size_t>(i)] == 0) {
                st.oob_sum[i] += g.train_pred[i];
                st.oob_count[i] += 1.0;
            }
    return st;
}

// OOB error over a list of per-stage (sum, count) records; NaN if no sample
// has an OOB tree in every stage.
double staged_oob_error(const Vector& y, const std::vector<const Stage*>& stages)
{
    double total = 0.0;
    std::size_t used = 0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        double pred = 0.0;
        bool ok = true;
        for (const Stage* st : stages) {
            if (st->oob_count[i] <= 0.0) {
                ok = false;
                break;
            }
            pred += st->oob_sum[i] / st->oob_count[i];
        }
        if (!ok) continue;
        total += (y[i] - pred) * (y[i] - pred);
        ++used;
    }
    return used == 0 ? std::numeric_limits<double>::quiet_NaN() : total / static_cast<double>(used);
}

// OOB errors without and with the last stage of `stages`, both over the
// samples that have an OOB tree in every stage of the list.
std::pair<double, double> oob_delta_pair(const Vector& y, const std::vector<const Stage*>& stages)
{
    double before = 0.0, after = 0.0;
    std::size_t used = 0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        double pred = 0.0;
        bool ok = true;
        for (const Stage* st : stages) {
            if (st->oob_count[i] <= 0.0) {
                ok = false;
                break;
            }
            if (st == stages.back()) {
                const double r = y[i] - pred;
                before += r * r;
            }
            pred += st->oob_sum[i] / st->oob_count[i];
        }
        if (!ok) continue;
        after += (y[i] - pred) * (y[i] - pred);
        ++used;
    }
    if (used == 0) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
    return {before / static_cast<double>(used), after / static_cast<double>(used)};
}

void append_stage(Ensemble& ens, Stage& st, const Vector& y, const Vector& fitted, double oob)
{
    StageInfo info;
    info.depth = st.depth;
    info.first_tree = static_cast<int>(ens.trees.size());
    info.n_trees = static_cast<int>(st.trees.size());
    info.train_mse = mse(y, fitted);
    info.oob_mse = oob;
    const int stage_id = static_cast<int>(ens.stages.size());
    for (auto& g : st.trees) {
        ens.trees.push_back(std::move(g.tree));
        ens.bag_indices.push_back(std::move(g.bag));
        ens.stage_of.push_back(stage_id);
        ens.depth_of.push_back(st.depth);
    }
    ens.stages.push_back(info);
}

Ensemble build_boosted(const Dataset& data, const BuildConfig& cfg, bool repeat_depth)
{
    data.validate();
    cfg.validate();
    BuildContext ctx(data.features, cfg);
    const Vector& y = data.response;

    Ensemble ens;
    ens.n_features = static_cast<int>(data.n_features());
    ens.method = repeat_depth ? BuildMethod::doublebagboost : BuildMethod::bagboost;

    std::vector<Stage> accepted;
    Vector fitted = Vector::Zero(y.size());
    const double floor = kOobRelativeFloor * y.squaredNorm() / static_cast<double>(y.size());
    int depth = 1;
    int stages_at_depth = 0;

    while (depth <= cfg.max_depth_limit) {
        const int budget = cfg.max_trees - static_cast<int>(ens.trees.size());
        if (budget <= 0) break;
        Stage st = grow_stage(ctx, y - fitted, depth, budget);

        std::vector<const Stage*> view;
        for (const auto& s : accepted) view.push_back(&s);
        view.push_back(&st);
        const double oob_new = staged_oob_error(y, view);
        const auto [oob_before, oob_after] = oob_delta_pair(y, view);
        const bool first_stage = accepted.empty();
        const bool improves = std::isfinite(oob_after) && oob_before - oob_after > floor;

        if (first_stage || improves) {
            fitted += st.mean_pred;
            append_stage(ens, st, y, fitted, oob_new);
            accepted.push_back(std::move(st));
            ++stages_at_depth;
            if (!repeat_depth) {
                ++depth;
                stages_at_depth = 0;
            }
            continue;
        }
        // The candidate stage is discarded.
        if (!repeat_depth || stages_at_depth == 0) break;
        ++depth;
        stages_at_depth = 0;
    }
    return ens;
}

} // namespace

Ensemble build_bagging(const Dataset& data, const BuildConfig& cfg)
{
    data.validate();
    cfg.validate();
    BuildContext ctx(data.features, cfg);
    const Vector& y = data.response;
    const auto n = y.size();

    Ensemble ens;
    ens.n_features = static_cast<int>(data.n_features());
    ens.method = BuildMethod::bag;

    Vector sum = Vector::Zero(n);
    double prev = y.squaredNorm() / static_cast<double>(n);
    int depth = 1;
    double err = prev;
    while (depth <= cfg.max_depth_limit && static_cast<int>(ens.trees.size()) < cfg.max_trees) {
        const int count = std::min(cfg.trees_per_check, cfg.max_trees - static_cast<int>(ens.trees.size()));
        auto batch = ctx.fit_batch(y, depth, count);
        for (auto& g : batch) {
            sum += g.train_pred;
            ens.trees.push_back(std::move(g.tree));
            ens.bag_indices.push_back(std::move(g.bag));
            ens.stage_of.push_back(0);
            ens.depth_of.push_back(depth);
        }
        err = mse(y, sum / static_cast<double>(ens.trees.size()));
        if (err <= 0.0) break;
        if (converged(prev, err, cfg.bag_convergence_tol)) ++depth;
        prev = err;
    }

    StageInfo info;
    info.depth = ens.depth_of.empty() ? 0 : ens.depth_of.back();
    info.n_trees = static_cast<int>(ens.trees.size());
    info.train_mse = err;
    info.oob_mse = std::numeric_limits<double>::quiet_NaN();
    ens.stages.push_back(info);
    try {
        ens.stages.back().oob_mse = oob_error(data, ens, 1);
    } catch (const ValidationError&) {
    }
    return ens;
}

Ensemble build_bagboost(const Dataset& data, const BuildConfig& cfg)
{
    return build_boosted(data, cfg, false);
}

Ensemble build_double_bagboost(const Dataset& data, const BuildConfig& cfg)
{
    return build_boosted(data, cfg, true);
}

Ensemble build_ensemble(const Dataset& data, BuildMethod method, const BuildConfig& cfg)
{
    switch (method) {
    case BuildMethod::bag: return build_bagging(data, cfg);
    case BuildMethod::bagboost: return build_bagboost(data, cfg);
    case BuildMethod::doublebagboost: return build_double_bagboost(data, cfg);
    case BuildMethod::custom: break;
    }
    throw ValidationError("custom ensembles are imported, not built");
}

double oob_error(const Dataset& data, const Ensemble& ensemble, int upto_stage)
{
    if (!ensemble.has_bags()) throw ValidationError("oob_error: ensemble has no bag records");
    const int n_stages =
        ensemble.stage_of.empty() ? 1 : *std::max_element(ensemble.stage_of.begin(), ensemble.stage_of.end()) + 1;
    if (upto_stage < 0 || upto_stage > n_stages) throw ValidationError("oob_error: stage index out of range");

    const Vector& y = data.response;
    const auto n = y.size();
    std::vector<Stage> stages(static_cast<std::size_t>(upto_stage));
    for (auto& st : stages) {
        st.oob_sum = Vector::Zero(n);
        st.oob_count = Vector::Zero(n);
    }
    for (std::size_t t = 0; t < ensemble.trees.size(); ++t) {
        const int s = ensemble.stage_of.empty() ? 0 : ensemble.stage_of[t];
        if (s >= upto_stage) continue;
        std::vector<char> in_bag(static_cast<std::size_t>(n), 0);
        for (int r : ensemble.bag_indices[t]) in_bag[static_cast<std::size_t>(r)] = 1;
        const Vector pred = predict_tree(ensemble.trees[t], data.features);
        Stage& st = stages[static_cast<std::size_t>(s)];
        for (Eigen::Index i = 0; i < n; ++i)
            if (!in_bag[static_cast<std::size_t>(i)]) {
                st.oob_sum[i] += pred[i];
                st.oob_count[i] += 1.0;
            }
    }
    std::vector<const Stage*> view;
    for (const auto& st : stages) view.push_back(&st);
    const double err = staged_oob_error(y, view);
    if (!std::isfinite(err)) throw ValidationError("oob_error: no OOB sample available");
    return err;
}

} // namespace subforest
