#include "subforest/json_io.hpp"

#include <cmath>
#include <limits>

namespace subforest {

json ensemble_to_json(const Ensemble& ensemble, bool include_build_metadata)
{
    json trees = json::array();
    for (const auto& t : ensemble.trees) trees.push_back(tree_to_json(t));
    json j{{"n_features", ensemble.n_features}, {"trees", std::move(trees)}};
    if (include_build_metadata) {
        json stages = json::array();
        for (const auto& s : ensemble.stages) {
            stages.push_back({{"depth", s.depth},
                              {"first_tree", s.first_tree},
                              {"n_trees", s.n_trees},
                              {"train_mse", s.train_mse},
                              {"oob_mse", std::isfinite(s.oob_mse) ? json(s.oob_mse) : json(nullptr)}});
        }
        j["build"] = {{"method", to_string(ensemble.method)},
                      {"stage_of", ensemble.stage_of},
                      {"depth_of", ensemble.depth_of},
                      {"stages", std::move(stages)}};
    }
    return j;
}

Ensemble ensemble_from_json(const json& j, int n_features)
{
    if (!j.is_object() || !j.contains("trees") || !j["trees"].is_array())
        throw ValidationError("ensemble record must be an object with a 'trees' array");
    if (j.contains("n_features") && (!j["n_features"].is_number_integer() || j["n_features"].get<int>() != n_features))
        throw ValidationError("ensemble width does not match n_features = " + std::to_string(n_features));

    Ensemble ens;
    ens.n_features = n_features;
    ens.method = BuildMethod::custom;
    for (std::size_t t = 0; t < j["trees"].size(); ++t) {
        try {
            ens.trees.push_back(tree_from_json(j["trees"][t], n_features));
        } catch (const ValidationError& e) {
            throw ValidationError("tree " + std::to_string(t) + ": " + e.what());
        }
        ens.depth_of.push_back(ens.trees.back().depth());
    }
    if (j.contains("build") && j["build"].is_object()) {
        const auto& b = j["build"];
        if (b.contains("stage_of") && b["stage_of"].is_array() && b["stage_of"].size() == ens.trees.size())
            ens.stage_of = b["stage_of"].get<std::vector<int>>();
        if (b.contains("depth_of") && b["depth_of"].is_array() && b["depth_of"].size() == ens.trees.size())
            ens.depth_of = b["depth_of"].get<std::vector<int>>();
        if (b.contains("stages") && b["stages"].is_array()) {
            for (const auto& s : b["stages"]) {
                StageInfo info;
                info.depth = s.at("depth").get<int>();
                info.first_tree = s.at("first_tree").get<int>();
                info.n_trees = s.at("n_trees").get<int>();
                info.train_mse = s.at("train_mse").get<double>();
                info.oob_mse = s.at("oob_mse").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                                         : s.at("oob_mse").get<double>();
                ens.stages.push_back(info);
            }
        }
    }
    return ens;
}

Ensemble import_ensemble(const std::filesystem::path& path, int n_features)
{
    return ensemble_from_json(read_json_file(path), n_features);
}

void export_ensemble(const Ensemble& ensemble, const std::filesystem::path& path)
{
    write_json_file(ensemble_to_json(ensemble), path);
}

} // namespace subforest
