#pragma once

#include "subforest/interpret.hpp"
#include "subforest/json_io.hpp"

#include <filesystem>
#include <string>

namespace subforest {

json importances_to_json(const ImportanceReport& report);
json subforest_to_json(const std::vector<std::vector<std::string>>& listing);
json shape_to_json(const ShapeCurve& curve, double intercept);
json interaction_to_json(const InteractionGrid& grid, double intercept);

void write_importances_csv(const ImportanceReport& report, const std::filesystem::path& file);
/// Long format: feature,value,prediction
void write_shape_csv(const ShapeCurve& curve, const std::filesystem::path& file);
/// Long format: <feature1>,<feature2>,prediction
void write_interaction_csv(const InteractionGrid& grid, const std::filesystem::path& file);
/// alpha, then one column per feature.
void write_path_importances_csv(const PathResult& path, const Matrix& importances,
                                std::span<const std::string> feature_names, const std::filesystem::path& file);

/// Self-contained SVG charts (no external assets).
std::string importances_svg(const ImportanceReport& report);
std::string shape_svg(const ShapeCurve& curve);
std::string interaction_svg(const InteractionGrid& grid);

void write_text_file(const std::string& text, const std::filesystem::path& file);

} // namespace subforest
