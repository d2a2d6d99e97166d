#pragma once

#include "subforest/json_io.hpp"
#include "subforest/model.hpp"

namespace subforest {

json penalty_to_json(const PenaltySpec& penalty);
PenaltySpec penalty_from_json(const json& j);

/// {"alpha", "intercept", "weights", "selected_features"}; weights per design column.
json solution_to_json(const LassoSolution& solution, std::span<const std::string> feature_names);

json polished_to_json(const PolishedModel& polished, std::span<const std::string> feature_names);
PolishedModel polished_from_json(const json& j, std::span<const std::string> feature_names);

json model_to_json(const FittedModel& model);
FittedModel model_from_json(const json& j);

void save_model(const FittedModel& model, const std::filesystem::path& path);
FittedModel load_model(const std::filesystem::path& path);

} // namespace subforest
