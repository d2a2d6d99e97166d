#include "subforest/cli.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace subforest::cli {

namespace {

template <class T>
void read_field(const json& j, const char* key, T& dst)
{
    if (!j.contains(key)) return;
    try {
        dst = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ValidationError(std::string("config: '") + key + "' has the wrong type");
    }
}

template <class T>
void read_field(const json& j, const char* key, std::optional<T>& dst)
{
    if (!j.contains(key)) return;
    if (j.at(key).is_null()) {
        dst.reset();
        return;
    }
    T v{};
    read_field(j, key, v);
    dst = v;
}

template <class T>
json optional_json(const std::optional<T>& v)
{
    return v ? json(*v) : json(nullptr);
}

bool parse_number(const std::string& s, double& out)
{
    const char* first = s.data();
    const char* last = s.data() + s.size();
    while (first < last && *first == ' ') ++first;
    while (last > first && last[-1] == ' ') --last;
    if (first < last && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

// Rows of a small feature-keyed CSV. The first line is a header unless its
// first cell names a feature.
std::vector<std::vector<std::string>> read_pairs_file(const std::filesystem::path& path,
                                                      std::span<const std::string> feature_names, std::size_t min_cols,
                                                      std::size_t max_cols)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    auto rows = parse_csv_text(buf.str());
    double ignored = 0.0;
    if (!rows.empty() && rows.front().size() >= 2 &&
        std::find(feature_names.begin(), feature_names.end(), rows.front()[0]) == feature_names.end() &&
        !parse_number(rows.front()[1], ignored))
        rows.erase(rows.begin());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() < min_cols || rows[i].size() > max_cols)
            throw ValidationError("'" + path.string() + "' record " + std::to_string(i + 1) + ": expected " +
                                  std::to_string(min_cols) + (min_cols == max_cols ? "" : "-" + std::to_string(max_cols)) +
                                  " columns");
    }
    return rows;
}

int index_of(std::span<const std::string> names, const std::string& name, const std::filesystem::path& file)
{
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw ValidationError("'" + file.string() + "': unknown feature '" + name + "'");
    return static_cast<int>(it - names.begin());
}

} // namespace

void RunConfig::validate(const std::string& command) const
{
    const bool needs_training = command == "fit" || command == "path" || command == "cv";
    if (needs_training || command == "interpret" || command == "predict") {
        if (data.empty()) throw ValidationError("--data is required");
    }
    if (needs_training) {
        if (target.empty()) throw ValidationError("--target is required");
        (void)parse_task(task);
        const BuildMethod m = parse_build_method(build);
        if (m == BuildMethod::custom && custom_forest.empty())
            throw ValidationError("--build custom requires --custom-forest");
        if (m != BuildMethod::custom && !custom_forest.empty())
            throw ValidationError("--custom-forest requires --build custom");
    }
    if ((command == "interpret" || command == "predict") && model.empty()) throw ValidationError("--model is required");
    if (threads < 1) throw ValidationError("--threads must be >= 1");
    if (!(alpha >= 0.0)) throw ValidationError("--alpha must be >= 0");
    if (n_alphas < 1) throw ValidationError("--n-alphas must be >= 1");
    if (sketch && !(*sketch > 0.0 && *sketch <= 1.0)) throw ValidationError("--sketch must lie in (0, 1]");
    if (l0 && *l0 < 0) throw ValidationError("--l0 must be >= 0");
    if (!costs.empty() && !groups.empty()) throw ValidationError("--costs and --groups are mutually exclusive");
    if (polish_trees < 1) throw ValidationError("--polish-trees must be >= 1");
    if (k < 2) throw ValidationError("--k must be >= 2");
    if (!(cv_tol >= 0.0)) throw ValidationError("--cv-tol must be >= 0");
    if (grid < 1 || pair_grid < 1) throw ValidationError("grid sizes must be >= 1");
    if (!(tol_cd > 0.0) || max_sweeps < 1) throw ValidationError("invalid solver settings");
    if (command == "cv" && l0) throw ValidationError("--l0 cannot be combined with cv");
    for (const auto& p : pair)
        if (std::count(p.begin(), p.end(), ',') != 1) throw ValidationError("--pair expects two comma-separated features");
    BuildConfig bc;
    bc.max_depth_limit = max_depth;
    bc.bag_convergence_tol = bag_tol;
    bc.trees_per_check = trees_per_check;
    bc.max_trees = max_trees;
    bc.min_samples_leaf = min_samples_leaf;
    bc.threads = threads;
    bc.validate();
}

json to_json(const RunConfig& c)
{
    return json{{"data", c.data},
                {"target", c.target},
                {"task", c.task},
                {"seed", c.seed},
                {"out_dir", c.out_dir},
                {"threads", c.threads},
                {"build", c.build},
                {"custom_forest", c.custom_forest},
                {"max_depth", c.max_depth},
                {"bag_tol", c.bag_tol},
                {"trees_per_check", c.trees_per_check},
                {"max_trees", c.max_trees},
                {"min_samples_leaf", c.min_samples_leaf},
                {"alpha", c.alpha},
                {"n_alphas", c.n_alphas},
                {"sketch", optional_json(c.sketch)},
                {"l0", optional_json(c.l0)},
                {"costs", c.costs},
                {"groups", c.groups},
                {"tol_cd", c.tol_cd},
                {"max_sweeps", c.max_sweeps},
                {"no_polish", c.no_polish},
                {"polish_trees", c.polish_trees},
                {"k", c.k},
                {"cv_tol", c.cv_tol},
                {"model", c.model},
                {"output", c.output},
                {"shape", c.shape},
                {"pair", c.pair},
                {"grid", c.grid},
                {"pair_grid", c.pair_grid},
                {"svg", c.svg}};
}

RunConfig config_from_json(const json& input)
{
    const json& j = input.is_object() && input.contains("config") && input["config"].is_object() ? input["config"] : input;
    if (!j.is_object()) throw ValidationError("config: expected a JSON object");
    const json known = to_json(RunConfig{});
    for (const auto& [key, value] : j.items())
        if (!known.contains(key)) throw ValidationError("config: unknown key '" + key + "'");

    RunConfig c;
    read_field(j, "data", c.data);
    read_field(j, "target", c.target);
    read_field(j, "task", c.task);
    read_field(j, "seed", c.seed);
    read_field(j, "out_dir", c.out_dir);
    read_field(j, "threads", c.threads);
    read_field(j, "build", c.build);
    read_field(j, "custom_forest", c.custom_forest);
    read_field(j, "max_depth", c.max_depth);
    read_field(j, "bag_tol", c.bag_tol);
    read_field(j, "trees_per_check", c.trees_per_check);
    read_field(j, "max_trees", c.max_trees);
    read_field(j, "min_samples_leaf", c.min_samples_leaf);
    read_field(j, "alpha", c.alpha);
    read_field(j, "n_alphas", c.n_alphas);
    read_field(j, "sketch", c.sketch);
    read_field(j, "l0", c.l0);
    read_field(j, "costs", c.costs);
    read_field(j, "groups", c.groups);
    read_field(j, "tol_cd", c.tol_cd);
    read_field(j, "max_sweeps", c.max_sweeps);
    read_field(j, "no_polish", c.no_polish);
    read_field(j, "polish_trees", c.polish_trees);
    read_field(j, "k", c.k);
    read_field(j, "cv_tol", c.cv_tol);
    read_field(j, "model", c.model);
    read_field(j, "output", c.output);
    read_field(j, "shape", c.shape);
    read_field(j, "pair", c.pair);
    read_field(j, "grid", c.grid);
    read_field(j, "pair_grid", c.pair_grid);
    read_field(j, "svg", c.svg);
    return c;
}

PenaltySpec read_costs_csv(const std::filesystem::path& path, std::span<const std::string> feature_names)
{
    std::vector<double> costs(feature_names.size(), 1.0);
    std::set<int> seen;
    for (const auto& row : read_pairs_file(path, feature_names, 2, 2)) {
        const int p = index_of(feature_names, row[0], path);
        if (!seen.insert(p).second) throw ValidationError("'" + path.string() + "': feature '" + row[0] + "' listed twice");
        double v = 0.0;
        if (!parse_number(row[1], v)) throw ValidationError("'" + path.string() + "': cost '" + row[1] + "' is not a number");
        costs[static_cast<std::size_t>(p)] = v;
    }
    PenaltySpec spec = PenaltySpec::with_costs(std::move(costs));
    spec.validate(static_cast<int>(feature_names.size()));
    return spec;
}

PenaltySpec read_groups_csv(const std::filesystem::path& path, std::span<const std::string> feature_names)
{
    std::map<std::string, int> group_id;
    std::vector<std::optional<double>> group_cost;
    std::vector<int> group_of(feature_names.size(), 0);
    for (const auto& row : read_pairs_file(path, feature_names, 2, 3)) {
        const int p = index_of(feature_names, row[0], path);
        if (group_of[static_cast<std::size_t>(p)] != 0)
            throw ValidationError("'" + path.string() + "': feature '" + row[0] + "' listed twice");
        auto [it, fresh] = group_id.emplace(row[1], static_cast<int>(group_cost.size()) + 1);
        if (fresh) group_cost.emplace_back();
        group_of[static_cast<std::size_t>(p)] = it->second;
        if (row.size() == 3 && !row[2].empty()) {
            double v = 0.0;
            if (!parse_number(row[2], v))
                throw ValidationError("'" + path.string() + "': group cost '" + row[2] + "' is not a number");
            auto& slot = group_cost[static_cast<std::size_t>(it->second - 1)];
            if (slot && *slot != v)
                throw ValidationError("'" + path.string() + "': conflicting costs for group '" + row[1] + "'");
            slot = v;
        }
    }
    for (auto& g : group_of) {
        if (g == 0) {
            group_cost.emplace_back(1.0);
            g = static_cast<int>(group_cost.size());
        }
    }
    std::vector<double> costs;
    for (const auto& c : group_cost) costs.push_back(c.value_or(1.0));
    PenaltySpec spec = PenaltySpec::with_groups(std::move(group_of), std::move(costs));
    spec.validate(static_cast<int>(feature_names.size()));
    return spec;
}

} // namespace subforest::cli
