#include "subforest/model_io.hpp"

#include <algorithm>
#include <cmath>

namespace subforest {

namespace {

int name_index(std::span<const std::string> names, const std::string& name)
{
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw ValidationError("model: unknown feature '" + name + "'");
    return static_cast<int>(it - names.begin());
}

std::vector<std::string> names_of(std::span<const int> idx, std::span<const std::string> names)
{
    std::vector<std::string> out;
    for (int p : idx) out.push_back(names[static_cast<std::size_t>(p)]);
    return out;
}

template <class T>
T required(const json& j, const char* key)
{
    if (!j.contains(key)) throw ValidationError(std::string("model: missing field '") + key + "'");
    try {
        return j[key].get<T>();
    } catch (const json::exception&) {
        throw ValidationError(std::string("model: field '") + key + "' has the wrong type");
    }
}

} // namespace

json penalty_to_json(const PenaltySpec& penalty)
{
    json j{{"mode", to_string(penalty.mode)}};
    if (penalty.mode == PenaltyMode::costs) j["costs"] = penalty.costs;
    if (penalty.mode == PenaltyMode::groups) {
        j["group_of"] = penalty.group_of;
        j["group_costs"] = penalty.group_costs;
    }
    return j;
}

PenaltySpec penalty_from_json(const json& j)
{
    const auto mode = required<std::string>(j, "mode");
    if (mode == "uniform") return PenaltySpec::uniform();
    if (mode == "costs") return PenaltySpec::with_costs(required<std::vector<double>>(j, "costs"));
    if (mode == "groups")
        return PenaltySpec::with_groups(required<std::vector<int>>(j, "group_of"),
                                        required<std::vector<double>>(j, "group_costs"));
    throw ValidationError("model: unknown penalty mode '" + mode + "'");
}

json solution_to_json(const LassoSolution& solution, std::span<const std::string> feature_names)
{
    return json{{"alpha", solution.alpha},
                {"intercept", solution.intercept},
                {"weights", std::vector<double>(solution.w.data(), solution.w.data() + solution.w.size())},
                {"selected_features", names_of(solution.selected_features, feature_names)}};
}

json polished_to_json(const PolishedModel& polished, std::span<const std::string> feature_names)
{
    json trees = json::array();
    for (const Tree& t : polished.forest) trees.push_back(tree_to_json(t));
    return json{{"feature_subset", names_of(polished.feature_subset, feature_names)},
                {"base", polished.base},
                {"trees", std::move(trees)}};
}

PolishedModel polished_from_json(const json& j, std::span<const std::string> feature_names)
{
    PolishedModel pm;
    for (const auto& name : required<std::vector<std::string>>(j, "feature_subset"))
        pm.feature_subset.push_back(name_index(feature_names, name));
    pm.base = required<double>(j, "base");
    if (!j.contains("trees") || !j["trees"].is_array()) throw ValidationError("model: polished forest needs 'trees'");
    const int width = static_cast<int>(feature_names.size());
    for (const auto& t : j["trees"]) {
        pm.forest.push_back(tree_from_json(t, width));
        for (int f : pm.forest.back().used_features())
            if (!std::binary_search(pm.feature_subset.begin(), pm.feature_subset.end(), f))
                throw ValidationError("model: polished tree uses a feature outside its subset");
    }
    return pm;
}

json model_to_json(const FittedModel& m)
{
    json j;
    j["format"] = "subforest-model";
    j["version"] = 1;
    j["task"] = to_string(m.task);
    j["feature_names"] = m.feature_names;
    if (m.task == Task::binary_classification) j["class_labels"] = m.class_labels;
    j["ensemble"] = ensemble_to_json(m.ensemble);
    j["weights"] = std::vector<double>(m.weights.data(), m.weights.data() + m.weights.size());
    j["intercept"] = m.intercept;
    j["alpha"] = m.alpha;
    j["alpha_max"] = m.alpha_max;
    j["train_error"] = m.train_error;
    j["l0_k"] = m.l0_k ? json(*m.l0_k) : json(nullptr);
    j["subforest"] = m.subforest;
    j["selected_features"] = m.selected_feature_names();
    j["dropped_trees"] = m.dropped_trees;
    j["penalty"] = penalty_to_json(m.penalty);
    j["polished"] = m.polished ? polished_to_json(*m.polished, m.feature_names) : json(nullptr);
    j["warnings"] = m.warnings;
    return j;
}

FittedModel model_from_json(const json& j)
{
    if (!j.is_object() || j.value("format", std::string()) != "subforest-model")
        throw ValidationError("not a model file");
    FittedModel m;
    m.task = parse_task(required<std::string>(j, "task"));
    m.feature_names = required<std::vector<std::string>>(j, "feature_names");
    const int P = static_cast<int>(m.feature_names.size());
    m.class_labels = j.value("class_labels", std::vector<std::string>{});
    if (!j.contains("ensemble")) throw ValidationError("model: missing field 'ensemble'");
    m.ensemble = ensemble_from_json(j["ensemble"], P);
    if (j["ensemble"].contains("build") && j["ensemble"]["build"].contains("method"))
        m.ensemble.method = parse_build_method(j["ensemble"]["build"]["method"].get<std::string>());

    const auto w = required<std::vector<double>>(j, "weights");
    if (w.size() != m.ensemble.size()) throw ValidationError("model: one weight per tree expected");
    m.weights = Eigen::Map<const Vector>(w.data(), static_cast<Eigen::Index>(w.size()));
    if (!m.weights.allFinite() || (m.weights.size() > 0 && m.weights.minCoeff() < 0.0))
        throw ValidationError("model: weights must be finite and non-negative");
    m.intercept = required<double>(j, "intercept");
    m.alpha = required<double>(j, "alpha");
    m.alpha_max = j.value("alpha_max", 0.0);
    m.train_error = j.value("train_error", 0.0);
    if (j.contains("l0_k") && !j["l0_k"].is_null()) m.l0_k = j["l0_k"].get<int>();
    m.subforest = required<std::vector<int>>(j, "subforest");
    for (int t : m.subforest)
        if (t < 0 || t >= static_cast<int>(m.ensemble.size())) throw ValidationError("model: subforest index out of range");
    for (const auto& name : required<std::vector<std::string>>(j, "selected_features"))
        m.selected_features.push_back(name_index(m.feature_names, name));
    std::sort(m.selected_features.begin(), m.selected_features.end());
    m.dropped_trees = j.value("dropped_trees", std::vector<int>{});
    m.penalty = j.contains("penalty") ? penalty_from_json(j["penalty"]) : PenaltySpec::uniform();
    if (j.contains("polished") && !j["polished"].is_null()) m.polished = polished_from_json(j["polished"], m.feature_names);
    m.warnings = j.value("warnings", std::vector<std::string>{});

    std::vector<double> kept;
    for (std::size_t t = 0; t < m.ensemble.size(); ++t)
        if (!std::binary_search(m.dropped_trees.begin(), m.dropped_trees.end(), static_cast<int>(t)))
            kept.push_back(w[t]);
    m.solution.alpha = m.alpha;
    m.solution.w = Eigen::Map<const Vector>(kept.data(), static_cast<Eigen::Index>(kept.size()));
    m.solution.intercept = m.intercept;
    m.solution.selected_features = m.selected_features;
    m.solution.train_error = m.train_error;
    return m;
}

void save_model(const FittedModel& model, const std::filesystem::path& path)
{
    write_json_file(model_to_json(model), path);
}

FittedModel load_model(const std::filesystem::path& path)
{
    return model_from_json(read_json_file(path));
}

} // namespace subforest
