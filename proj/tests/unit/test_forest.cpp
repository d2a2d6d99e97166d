#include "helpers.hpp"

#include "subforest/forest.hpp"
#include "subforest/json_io.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace subforest;
using testing_helpers::make_dataset;
using testing_helpers::TempDir;

namespace {

Dataset additive(std::uint64_t seed, int n = 300)
{
    std::mt19937_64 rng(seed);
    Matrix X = testing_helpers::uniform_matrix(rng, n, 4, -1.0, 1.0);
    Vector y = (2.0 * X.col(0).array()).sin().matrix() + X.col(1).array().square().matrix() +
               (X.col(2).array() > 0.3).cast<double>().matrix() + 0.1 * testing_helpers::gaussian_vector(rng, n);
    return make_dataset(std::move(X), std::move(y));
}

Dataset product_on_cube(std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution coin(0.5);
    Matrix X(200, 2);
    for (Eigen::Index i = 0; i < 200; ++i)
        for (int p = 0; p < 2; ++p) X(i, p) = coin(rng) ? 1.0 : -1.0;
    Vector y = X.col(0).cwiseProduct(X.col(1));
    return make_dataset(std::move(X), std::move(y));
}

Vector stage_prediction(const Ensemble& ens, int stage, const Matrix& X)
{
    Vector sum = Vector::Zero(X.rows());
    int count = 0;
    for (std::size_t t = 0; t < ens.size(); ++t)
        if (ens.stage_of[t] == stage) {
            sum += predict_tree(ens.trees[t], X);
            ++count;
        }
    return sum / count;
}

void expect_same(const Ensemble& a, const Ensemble& b)
{
    ASSERT_EQ(a.size(), b.size());
    EXPECT_EQ(ensemble_to_json(a), ensemble_to_json(b));
    EXPECT_EQ(a.bag_indices, b.bag_indices);
    EXPECT_EQ(a.stage_of, b.stage_of);
}

} // namespace

TEST(BuildConfig, Validate)
{
    BuildConfig c;
    EXPECT_NO_THROW(c.validate());
    c.max_trees = 0;
    EXPECT_THROW(c.validate(), ValidationError);
    c = {};
    c.bag_convergence_tol = 0.0;
    EXPECT_THROW(c.validate(), ValidationError);
    c = {};
    c.max_depth_limit = 0;
    EXPECT_THROW(c.validate(), ValidationError);
    EXPECT_EQ(parse_build_method("doublebagboost"), BuildMethod::doublebagboost);
    EXPECT_EQ(parse_build_method(to_string(BuildMethod::bag)), BuildMethod::bag);
    EXPECT_THROW(parse_build_method("boost"), ValidationError);
}

TEST(Bagging, ConstantResponse)
{
    std::mt19937_64 rng(1);
    const Dataset d = make_dataset(testing_helpers::uniform_matrix(rng, 30, 2), Vector::Constant(30, 2.5));
    const Ensemble e = build_bagging(d, {});
    EXPECT_EQ(e.size(), 5u);
    for (const auto& t : e.trees) EXPECT_EQ(t.n_splits(), 0u);
    EXPECT_EQ((e.predict(d.features) - d.response).squaredNorm(), 0.0);
}

TEST(Bagging, SingleFeatureOnly)
{
    std::mt19937_64 rng(2);
    Matrix X = testing_helpers::uniform_matrix(rng, 80, 1);
    Vector y = X.col(0);
    BuildConfig cfg;
    cfg.max_depth_limit = 2;
    const Ensemble e = build_bagging(make_dataset(X, y), cfg);
    EXPECT_EQ(e.used_features(), std::vector<int>{0});
    EXPECT_LE(*std::max_element(e.depth_of.begin(), e.depth_of.end()), 2);
}

TEST(Bagging, DepthOneTreesAreSingletons)
{
    const Dataset d = additive(3);
    const Ensemble e = build_bagging(d, {});
    bool saw_depth_one = false;
    for (std::size_t t = 0; t < e.size(); ++t)
        if (e.depth_of[t] == 1) {
            saw_depth_one = true;
            EXPECT_EQ(e.trees[t].used_features().size(), 1u);
        }
    EXPECT_TRUE(saw_depth_one);
    EXPECT_LE(static_cast<int>(e.size()), BuildConfig{}.max_trees);
}

TEST(Bagboost, ConstantResponseStopsAfterOneStage)
{
    std::mt19937_64 rng(1);
    const Dataset d = make_dataset(testing_helpers::uniform_matrix(rng, 30, 2), Vector::Constant(30, -1.0));
    for (BuildMethod m : {BuildMethod::bagboost, BuildMethod::doublebagboost}) {
        const Ensemble e = build_ensemble(d, m, {});
        EXPECT_EQ(e.stages.size(), 1u);
        for (const auto& t : e.trees) EXPECT_EQ(t.n_splits(), 0u);
        EXPECT_EQ((e.predict(d.features) - d.response).squaredNorm(), 0.0);
    }
    expect_same(build_bagboost(d, {}), [&] {
        Ensemble e = build_double_bagboost(d, {});
        e.method = BuildMethod::bagboost;
        return e;
    }());
}

TEST(Bagboost, ProductSignalNeedsTwoStages)
{
    const Dataset d = product_on_cube(5);
    const Ensemble e = build_bagboost(d, {});
    ASSERT_EQ(e.stages.size(), 2u);
    EXPECT_EQ(e.stages[0].depth, 1);
    EXPECT_EQ(e.stages[1].depth, 2);
    EXPECT_LT(e.stages[1].oob_mse, e.stages[0].oob_mse);
    // stage one cannot represent x1 * x2
    const Vector r1 = d.response - stage_prediction(e, 0, d.features);
    EXPECT_GT(r1.squaredNorm() / 200.0, 0.5);
}

TEST(DoubleBagboost, StaircaseRepeatsDepthOne)
{
    std::mt19937_64 rng(7);
    Matrix X = testing_helpers::uniform_matrix(rng, 400, 3);
    Vector y = (X.col(0).array() * 6.0).floor().matrix() + 0.05 * testing_helpers::gaussian_vector(rng, 400);
    const Ensemble e = build_double_bagboost(make_dataset(X, y), {});
    ASSERT_GE(e.stages.size(), 2u);
    EXPECT_EQ(std::min(e.stages[0].depth, e.stages[1].depth), 1);
    EXPECT_EQ(e.stages[1].depth, 1);
}

TEST(Builders, DepthScheduleMonotone)
{
    const Dataset d = additive(11);
    for (BuildMethod m : {BuildMethod::bag, BuildMethod::bagboost, BuildMethod::doublebagboost}) {
        const Ensemble e = build_ensemble(d, m, {});
        ASSERT_EQ(e.depth_of.size(), e.size());
        ASSERT_EQ(e.bag_indices.size(), e.size());
        for (std::size_t t = 1; t < e.size(); ++t) {
            EXPECT_LE(e.depth_of[t - 1], e.depth_of[t]);
            EXPECT_LE(e.stage_of[t - 1], e.stage_of[t]);
        }
        for (std::size_t t = 0; t < e.size(); ++t) {
            EXPECT_LE(e.trees[t].depth(), e.depth_of[t]);
            EXPECT_EQ(e.bag_indices[t].size(), d.n_rows());
            EXPECT_TRUE(std::is_sorted(e.bag_indices[t].begin(), e.bag_indices[t].end()));
        }
    }
}

TEST(Builders, Deterministic)
{
    const Dataset d = additive(12, 150);
    for (BuildMethod m : {BuildMethod::bag, BuildMethod::bagboost, BuildMethod::doublebagboost}) {
        BuildConfig cfg;
        cfg.seed = 99;
        const Ensemble a = build_ensemble(d, m, cfg);
        const Ensemble b = build_ensemble(d, m, cfg);
        expect_same(a, b);
        cfg.threads = 3;
        expect_same(a, build_ensemble(d, m, cfg));
    }
}

TEST(Builders, SeedChangesBags)
{
    const Dataset d = additive(13, 100);
    BuildConfig a, b;
    a.seed = 1;
    b.seed = 2;
    EXPECT_NE(build_bagboost(d, a).bag_indices.front(), build_bagboost(d, b).bag_indices.front());
}

TEST(Builders, ResidualTelescoping)
{
    const Dataset d = additive(14);
    for (BuildMethod m : {BuildMethod::bagboost, BuildMethod::doublebagboost}) {
        const Ensemble e = build_ensemble(d, m, {});
        Vector F = Vector::Zero(static_cast<Eigen::Index>(d.n_rows()));
        for (int s = 0; s < static_cast<int>(e.stages.size()); ++s) {
            const Vector target = d.response - F;
            // every leaf value is the bag mean of this stage's target
            for (std::size_t t = 0; t < e.size(); ++t) {
                if (e.stage_of[t] != s) continue;
                const Tree& tree = e.trees[t];
                std::vector<double> sum(tree.nodes().size(), 0.0), cnt(tree.nodes().size(), 0.0);
                for (int i : e.bag_indices[t]) {
                    const int leaf = tree.leaf_of([&](int f) { return d.features(i, f); });
                    sum[static_cast<std::size_t>(leaf)] += target[i];
                    cnt[static_cast<std::size_t>(leaf)] += 1.0;
                }
                for (std::size_t k = 0; k < tree.nodes().size(); ++k)
                    if (tree.nodes()[k].is_leaf() && cnt[k] > 0)
                        EXPECT_NEAR(tree.nodes()[k].value, sum[k] / cnt[k], 1e-9);
            }
            const Vector next = F + stage_prediction(e, s, d.features);
            EXPECT_NEAR((d.response - next).squaredNorm() / static_cast<double>(d.n_rows()), e.stages[s].train_mse,
                        1e-12);
            F = next;
        }
        EXPECT_LT((e.predict(d.features) - F).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Builders, MaxTreesCap)
{
    const Dataset d = additive(15);
    BuildConfig cfg;
    cfg.max_trees = 12;
    for (BuildMethod m : {BuildMethod::bag, BuildMethod::bagboost, BuildMethod::doublebagboost})
        EXPECT_LE(build_ensemble(d, m, cfg).size(), 12u);
    EXPECT_THROW(build_ensemble(d, BuildMethod::custom, cfg), ValidationError);
}

TEST(Builders, DiverseOnAdditiveSignal)
{
    const Dataset d = additive(21);
    for (BuildMethod m : {BuildMethod::bag, BuildMethod::bagboost}) {
        const Ensemble e = build_ensemble(d, m, {});
        std::size_t single = 0;
        for (const auto& t : e.trees) single += t.used_features().size() == 1 ? 1 : 0;
        EXPECT_GE(static_cast<double>(single) / static_cast<double>(e.size()), 0.5) << to_string(m);
    }
}

TEST(OobError, SingleTreeExcludingOneSample)
{
    std::mt19937_64 rng(3);
    const Dataset d = make_dataset(testing_helpers::uniform_matrix(rng, 6, 1), testing_helpers::gaussian_vector(rng, 6));
    Ensemble e;
    e.n_features = 1;
    e.method = BuildMethod::custom;
    e.trees.push_back(fit_tree(d.features, d.response, {.max_depth = 1}));
    e.bag_indices.push_back({1, 2, 3, 4, 5, 5});
    e.stage_of = {0};
    e.depth_of = {1};
    const double tree_out = predict_tree(e.trees[0], d.features)[0];
    EXPECT_DOUBLE_EQ(oob_error(d, e, 1), (d.response[0] - tree_out) * (d.response[0] - tree_out));
}

TEST(OobError, Errors)
{
    std::mt19937_64 rng(3);
    const Dataset d = make_dataset(testing_helpers::uniform_matrix(rng, 5, 1), testing_helpers::gaussian_vector(rng, 5));
    Ensemble e;
    e.n_features = 1;
    e.trees.push_back(fit_tree(d.features, d.response, {.max_depth = 1}));
    e.stage_of = {0};
    EXPECT_THROW(oob_error(d, e, 1), ValidationError);
    e.bag_indices.push_back({0, 1, 2, 3, 4});
    EXPECT_THROW(oob_error(d, e, 1), ValidationError);
    EXPECT_THROW(oob_error(d, e, 3), ValidationError);
}

TEST(OobError, MatchesStageRecords)
{
    const Dataset d = additive(31, 200);
    const Ensemble e = build_double_bagboost(d, {});
    for (int s = 0; s < static_cast<int>(e.stages.size()); ++s)
        EXPECT_DOUBLE_EQ(oob_error(d, e, s + 1), e.stages[static_cast<std::size_t>(s)].oob_mse);
    // OOB deltas are positive for every accepted stage after the first
    for (std::size_t s = 1; s < e.stages.size(); ++s) EXPECT_LT(e.stages[s].oob_mse, e.stages[s - 1].oob_mse);
}

TEST(EnsembleJson, ImportStump)
{
    TempDir dir;
    const auto file = dir.write("stump.json", R"({"n_features":3,"trees":[{"nodes":[
        {"feature":0,"threshold":0.5,"left":1,"right":2,"value":0},
        {"feature":null,"threshold":null,"left":null,"right":null,"value":-1},
        {"feature":null,"threshold":null,"left":null,"right":null,"value":1}]}]})");
    const Ensemble e = import_ensemble(file, 3);
    EXPECT_EQ(e.size(), 1u);
    EXPECT_EQ(e.method, BuildMethod::custom);
    EXPECT_EQ(e.used_features(), std::vector<int>{0});
    EXPECT_FALSE(e.has_bags());
    Matrix X(2, 3);
    X << 0, 9, 9, 1, 9, 9;
    EXPECT_EQ(e.predict(X), (Vector(2) << -1, 1).finished());
}

TEST(EnsembleJson, ImportErrors)
{
    TempDir dir;
    const auto bad_child = dir.write("bad.json", R"({"n_features":1,"trees":[{"nodes":[
        {"feature":null,"threshold":null,"left":1,"right":2,"value":0},
        {"feature":null,"threshold":null,"left":null,"right":null,"value":-1},
        {"feature":null,"threshold":null,"left":null,"right":null,"value":1}]}]})");
    EXPECT_THROW(import_ensemble(bad_child, 1), ValidationError);
    const auto wide = dir.write("wide.json", R"({"n_features":1,"trees":[{"nodes":[
        {"feature":4,"threshold":0,"left":1,"right":2,"value":0},
        {"feature":null,"threshold":null,"left":null,"right":null,"value":-1},
        {"feature":null,"threshold":null,"left":null,"right":null,"value":1}]}]})");
    EXPECT_THROW(import_ensemble(wide, 5), ValidationError);
    EXPECT_THROW(import_ensemble(dir.write("junk.json", "{not json"), 1), ValidationError);
    EXPECT_THROW(import_ensemble(dir.write("none.json", R"({"n_features":1})"), 1), ValidationError);
    EXPECT_THROW(import_ensemble(dir / "missing.json", 1), ValidationError);
}

TEST(EnsembleJson, ExportRoundTrip)
{
    const Dataset d = additive(41, 120);
    const Ensemble e = build_bagboost(d, {});
    TempDir dir;
    export_ensemble(e, dir / "e.json");
    const Ensemble back = import_ensemble(dir / "e.json", 4);
    ASSERT_EQ(back.size(), e.size());
    for (std::size_t t = 0; t < e.size(); ++t)
        EXPECT_EQ(predict_tree(back.trees[t], d.features), predict_tree(e.trees[t], d.features));
    EXPECT_TRUE(back.trees.front().has_node_stats());
}
