#include "helpers.hpp"

#include "subforest/cli.hpp"
#include "subforest/interpret.hpp"
#include "subforest/model_io.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

using namespace subforest;
using testing_helpers::TempDir;
using testing_helpers::read_file;

namespace {

int run_cli(std::vector<std::string> args)
{
    args.insert(args.begin(), "subforest");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return cli::run(static_cast<int>(argv.size()), argv.data());
}

// y = 3 [x1 > 0.5] + x2, x3 is noise
std::string synthetic_csv(int n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::ostringstream s;
    s.precision(17);
    s << "x1,x2,x3,y\n";
    for (int i = 0; i < n; ++i) {
        const double a = u(rng), b = u(rng), c = u(rng);
        s << a << ',' << b << ',' << c << ',' << (a > 0.5 ? 3.0 : 0.0) + b << '\n';
    }
    return s.str();
}

std::vector<std::string> quick_fit(const TempDir& dir, const std::string& out)
{
    return {"fit",          "--data",          (dir / "train.csv").string(), "--target", "y", "--max-depth", "2",
            "--max-trees",  "20",              "--polish-trees",      "5",        "--alpha", "0.05",
            "--out-dir",    (dir / out).string()};
}

json read_json(const std::string& path)
{
    return json::parse(read_file(path));
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override { dir.write("train.csv", synthetic_csv(80, 1)); }
    TempDir dir;
};

} // namespace

TEST_F(Cli, HelpAndUsageErrors)
{
    EXPECT_EQ(run_cli({"--help"}), 0);
    EXPECT_EQ(run_cli({"fit", "--help"}), 0);
    EXPECT_EQ(run_cli({}), 1);
    EXPECT_EQ(run_cli({"frobnicate"}), 1);
    EXPECT_EQ(run_cli({"fit", "--data", (dir / "train.csv").string()}), 1);
    EXPECT_EQ(run_cli({"fit", "--data", (dir / "train.csv").string(), "--target", "y", "--alpha", "-1"}), 1);
    EXPECT_EQ(run_cli({"fit", "--data", (dir / "missing.csv").string(), "--target", "y"}), 1);
    EXPECT_EQ(run_cli({"fit", "--data", (dir / "train.csv").string(), "--target", "nope"}), 1);
    EXPECT_EQ(run_cli({"cv", "--data", (dir / "train.csv").string(), "--target", "y", "--l0", "1"}), 1);
    EXPECT_EQ(run_cli({"predict", "--data", (dir / "train.csv").string()}), 1);
}

TEST_F(Cli, FitWritesModelAndReport)
{
    ASSERT_EQ(run_cli(quick_fit(dir, "fit")), 0);
    const json report = read_json((dir / "fit/report.json").string());
    EXPECT_EQ(report["command"], "fit");
    EXPECT_EQ(report["config"]["max_depth"], 2);
    EXPECT_EQ(report["ensemble"]["method"], "bagboost");
    const std::string selected = read_file((dir / "fit/selected_features.txt").string());
    EXPECT_NE(selected.find("x1"), std::string::npos);
    const FittedModel m = load_model((dir / "fit/model.json").string());
    EXPECT_EQ(m.feature_names, (std::vector<std::string>{"x1", "x2", "x3"}));
    EXPECT_FALSE(m.selected_features.empty());
}

TEST_F(Cli, HugeAlphaGivesEmptySelectionAndMeanPredictions)
{
    auto args = quick_fit(dir, "empty");
    args[12] = "1e9";
    ASSERT_EQ(args[11], "--alpha");
    ASSERT_EQ(run_cli(args), 0);
    const json report = read_json((dir / "empty/report.json").string());
    EXPECT_TRUE(report.at("selected_features").empty());
    EXPECT_FALSE(report.at("warnings").empty());
    EXPECT_EQ(read_file((dir / "empty/selected_features.txt").string()), "");

    ASSERT_EQ(run_cli({"predict", "--data", (dir / "train.csv").string(), "--model", (dir / "empty/model.json").string(),
                       "--output", (dir / "pred.csv").string()}),
              0);
    const Dataset d = load_csv((dir / "train.csv").string(), "y", Task::regression);
    std::istringstream lines(read_file((dir / "pred.csv").string()));
    std::string line;
    std::getline(lines, line);
    EXPECT_EQ(line, "prediction");
    int n = 0;
    while (std::getline(lines, line)) {
        EXPECT_NEAR(std::stod(line), d.response.mean(), 1e-12);
        ++n;
    }
    EXPECT_EQ(n, 80);
}

TEST_F(Cli, ConfigReplayReproducesOutputs)
{
    ASSERT_EQ(run_cli(quick_fit(dir, "a")), 0);
    ASSERT_EQ(run_cli({"fit", "--config", (dir / "a/report.json").string(), "--out-dir", (dir / "b").string()}), 0);
    EXPECT_EQ(read_file((dir / "a/model.json").string()), read_file((dir / "b/model.json").string()));
    EXPECT_EQ(read_file((dir / "a/selected_features.txt").string()), read_file((dir / "b/selected_features.txt").string()));
    json ra = read_json((dir / "a/report.json").string());
    json rb = read_json((dir / "b/report.json").string());
    EXPECT_EQ(rb["config"]["out_dir"], (dir / "b").string());
    ra["config"].erase("out_dir");
    rb["config"].erase("out_dir");
    EXPECT_EQ(ra, rb);
}

TEST_F(Cli, ExplicitFlagsOverrideConfig)
{
    ASSERT_EQ(run_cli(quick_fit(dir, "a")), 0);
    ASSERT_EQ(run_cli({"fit", "--config", (dir / "a/report.json").string(), "--alpha", "1e9", "--out-dir", (dir / "b").string()}), 0);
    const json rb = read_json((dir / "b/report.json").string());
    EXPECT_EQ(rb["config"]["alpha"], 1e9);
    EXPECT_EQ(rb["config"]["max_depth"], 2);
}

TEST_F(Cli, UnknownConfigKeysAreRejected)
{
    dir.write("bad.json", R"({"data": "x.csv", "target": "y", "learning_rate": 0.1})");
    EXPECT_EQ(run_cli({"fit", "--config", (dir / "bad.json").string()}), 1);
    dir.write("wrong_type.json", R"({"data": "x.csv", "target": "y", "max_depth": "deep"})");
    EXPECT_EQ(run_cli({"fit", "--config", (dir / "wrong_type.json").string()}), 1);
    EXPECT_THROW(cli::config_from_json(json{{"alpha", 1.0}, {"nope", 1}}), ValidationError);
    EXPECT_EQ(cli::config_from_json(json{{"alpha", 0.5}}).alpha, 0.5);
}

TEST_F(Cli, NumericalFailureExitsTwo)
{
    std::ostringstream s;
    s << "x1,y\n";
    for (int i = 0; i < 20; ++i) s << i << ',' << (i % 2 ? 1e160 : -1e160) * (1 + i) << '\n';
    dir.write("huge.csv", s.str());
    EXPECT_EQ(run_cli({"fit", "--data", (dir / "huge.csv").string(), "--target", "y", "--max-depth", "1", "--max-trees",
                       "5", "--no-polish", "--out-dir", (dir / "huge").string()}),
              2);
}

TEST(CliPenaltyFiles, CostsAndGroups)
{
    TempDir dir;
    const std::vector<std::string> names{"a", "b", "c"};
    dir.write("costs.csv", "feature,cost\nb,4\n");
    const PenaltySpec c = cli::read_costs_csv((dir / "costs.csv").string(), names);
    EXPECT_EQ(c.costs, (std::vector<double>{1.0, 4.0, 1.0}));
    dir.write("dup.csv", "b,4\nb,5\n");
    EXPECT_THROW(cli::read_costs_csv((dir / "dup.csv").string(), names), ValidationError);
    dir.write("unknown.csv", "z,4\n");
    EXPECT_THROW(cli::read_costs_csv((dir / "unknown.csv").string(), names), ValidationError);
    dir.write("neg.csv", "a,-1\n");
    EXPECT_THROW(cli::read_costs_csv((dir / "neg.csv").string(), names), ValidationError);

    dir.write("groups.csv", "feature,group,group_cost\na,geo,2.5\nc,geo,\n");
    const PenaltySpec g = cli::read_groups_csv((dir / "groups.csv").string(), names);
    EXPECT_EQ(g.group_of, (std::vector<int>{1, 2, 1}));
    EXPECT_EQ(g.group_costs, (std::vector<double>{2.5, 1.0}));
    dir.write("conflict.csv", "a,geo,2\nc,geo,3\n");
    EXPECT_THROW(cli::read_groups_csv((dir / "conflict.csv").string(), names), ValidationError);
}

TEST_F(Cli, PathCvInterpretPredict)
{
    const std::string data = (dir / "train.csv").string();
    const std::vector<std::string> small{"--max-depth", "2", "--max-trees", "20", "--n-alphas", "10"};
    auto with = [&](std::vector<std::string> a) {
        a.insert(a.end(), small.begin(), small.end());
        return a;
    };
    ASSERT_EQ(run_cli(with({"path", "--data", data, "--target", "y", "--out-dir", (dir / "p").string()})), 0);
    EXPECT_EQ(read_file((dir / "p/path.csv").string()).substr(0, 18), "alpha,train_error,");
    EXPECT_FALSE(read_file((dir / "p/path_importances.csv").string()).empty());
    EXPECT_EQ(read_json((dir / "p/report.json").string())["command"], "path");

    ASSERT_EQ(run_cli(with({"cv", "--data", data, "--target", "y", "--k", "4", "--polish-trees", "5", "--out-dir",
                            (dir / "c").string()})),
              0);
    const json cvj = read_json((dir / "c/cv.json").string());
    EXPECT_EQ(cvj["alphas"].size(), 10u);
    EXPECT_EQ(cvj["fold_feature_sets"].size(), 4u);
    EXPECT_EQ(read_file((dir / "c/cv_errors.csv").string()).substr(0, 48),
              "alpha,mean_error,fold_1,fold_2,fold_3,fold_4,sup");
    const FittedModel m = load_model((dir / "c/model.json").string());
    EXPECT_EQ(m.selected_features.size(), cvj["selected_features"].size());

    ASSERT_EQ(run_cli({"interpret", "--data", data, "--model", (dir / "c/model.json").string(), "--grid", "16",
                       "--pair-grid", "8", "--svg", "--out-dir", (dir / "i").string()}),
              0);
    const json ir = read_json((dir / "i/report.json").string());
    for (const auto& f : ir.at("files")) EXPECT_TRUE(std::filesystem::exists(dir / "i" / f.get<std::string>())) << f;
    for (const char* f : {"importances.csv", "importances.json", "importances.svg", "subforest.json", "shape_x1.csv",
                          "shape_x1.json", "shape_x1.svg"})
        EXPECT_TRUE(std::filesystem::exists(dir / (std::string("i/") + f))) << f;
    for (auto [a, b] : interaction_terms(m)) {
        const std::string stem = "i/interaction_" + m.feature_names[static_cast<std::size_t>(a)] + "__" +
                                 m.feature_names[static_cast<std::size_t>(b)];
        EXPECT_TRUE(std::filesystem::exists(dir / (stem + ".csv"))) << stem;
        EXPECT_TRUE(std::filesystem::exists(dir / (stem + ".svg"))) << stem;
    }
    EXPECT_EQ(run_cli({"interpret", "--data", data, "--model", (dir / "c/model.json").string(), "--pair", "x1",
                       "--out-dir", (dir / "i").string()}),
              1);
    EXPECT_EQ(read_json((dir / "i/shape_x1.json").string())["feature"], "x1");

    ASSERT_EQ(run_cli({"predict", "--data", data, "--model", (dir / "c/model.json").string(), "--out-dir", (dir / "i").string()}), 0);
    const Vector expected = predict(m, load_feature_columns(data, m.feature_names));
    std::istringstream lines(read_file((dir / "i/predictions.csv").string()));
    std::string line;
    std::getline(lines, line);
    for (Eigen::Index i = 0; i < expected.size(); ++i) {
        ASSERT_TRUE(std::getline(lines, line));
        EXPECT_DOUBLE_EQ(std::stod(line), expected[i]);
    }
}

TEST_F(Cli, ClassificationPredictionsCarryLabels)
{
    std::ostringstream s;
    s << "x1,x2,label\n";
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 60; ++i) {
        const double a = u(rng), b = u(rng);
        s << a << ',' << b << ',' << (a > 0.5 ? "yes" : "no") << '\n';
    }
    dir.write("clf.csv", s.str());
    ASSERT_EQ(run_cli({"fit", "--data", (dir / "clf.csv").string(), "--target", "label", "--task", "classification",
                       "--max-depth", "2", "--max-trees", "20", "--polish-trees", "5", "--alpha", "0.01", "--out-dir",
                       (dir / "clf").string()}),
              0);
    ASSERT_EQ(run_cli({"predict", "--data", (dir / "clf.csv").string(), "--model", (dir / "clf/model.json").string(), "--out-dir",
                       (dir / "clf").string()}),
              0);
    const std::string out = read_file((dir / "clf/predictions.csv").string());
    EXPECT_EQ(out.substr(0, 23), "score,probability,class");
    EXPECT_NE(out.find(",yes"), std::string::npos);
    EXPECT_NE(out.find(",no"), std::string::npos);
}
