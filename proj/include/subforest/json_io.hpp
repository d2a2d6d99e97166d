#pragma once

// JSON interchange records. Tree record:
//   {"nodes":[{"feature":int|null,"threshold":float|null,"left":int|null,
//              "right":int|null,"value":float, "n_samples":int?, "impurity":float?}...],
//    "n_features":int}
// Ensemble record: {"n_features":int, "trees":[tree...], "build":{...}?}
// n_samples / impurity / build are optional extras written on export.

#include "subforest/forest.hpp"

#include "json.hpp"

namespace subforest {

using json = nlohmann::json;

json tree_to_json(const Tree& tree);
Tree tree_from_json(const json& j, int n_features);

json ensemble_to_json(const Ensemble& ensemble, bool include_build_metadata = true);
Ensemble ensemble_from_json(const json& j, int n_features);

json read_json_file(const std::filesystem::path& path);
void write_json_file(const json& j, const std::filesystem::path& path);

} // namespace subforest
