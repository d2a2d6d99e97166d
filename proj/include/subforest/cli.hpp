#pragma once

#include "subforest/json_io.hpp"
#include "subforest/model.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace subforest::cli {

/// Fully resolved settings of one run. Serialized into every run report, and
/// accepted back through --config.
struct RunConfig {
    std::string data;
    std::string target;
    std::string task = "regression";
    std::uint64_t seed = 0;
    std::string out_dir = ".";
    int threads = 1;

    std::string build = "bagboost";
    std::string custom_forest;
    int max_depth = 5;
    double bag_tol = 1e-3;
    int trees_per_check = 5;
    int max_trees = 500;
    int min_samples_leaf = 1;

    double alpha = 0.1;
    int n_alphas = 100;
    std::optional<double> sketch;
    std::optional<int> l0;
    std::string costs;
    std::string groups;
    double tol_cd = 1e-6;
    int max_sweeps = 10000;

    bool no_polish = false;
    int polish_trees = 100;

    int k = 5;
    double cv_tol = 1e-3;

    std::string model;
    std::string output;
    std::vector<std::string> shape;
    std::vector<std::string> pair;
    int grid = 256;
    int pair_grid = 64;
    bool svg = false;

    void validate(const std::string& command) const;
};

json to_json(const RunConfig& cfg);
/// Accepts a bare config object or a run report with a "config" member.
/// Unknown keys are rejected.
RunConfig config_from_json(const json& j);

/// Feature-cost CSV: feature,cost (header optional). Unlisted features cost 1.
PenaltySpec read_costs_csv(const std::filesystem::path& path, std::span<const std::string> feature_names);
/// Group CSV: feature,group[,group_cost] (header optional). Unlisted features
/// form singleton groups of cost 1.
PenaltySpec read_groups_csv(const std::filesystem::path& path, std::span<const std::string> feature_names);

int run(int argc, char** argv);

} // namespace subforest::cli
