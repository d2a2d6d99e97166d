#include "subforest/json_io.hpp"

#include <fstream>

namespace subforest {

json tree_to_json(const Tree& tree)
{
    json nodes = json::array();
    for (const TreeNode& nd : tree.nodes()) {
        json n;
        if (nd.is_leaf()) {
            n["feature"] = nullptr;
            n["threshold"] = nullptr;
            n["left"] = nullptr;
            n["right"] = nullptr;
        } else {
            n["feature"] = nd.feature;
            n["threshold"] = nd.threshold;
            n["left"] = nd.left;
            n["right"] = nd.right;
        }
        n["value"] = nd.value;
        if (tree.has_node_stats()) {
            n["n_samples"] = nd.n_samples;
            n["impurity"] = nd.impurity;
        }
        nodes.push_back(std::move(n));
    }
    return json{{"nodes", std::move(nodes)}, {"n_features", tree.n_features()}};
}

namespace {

int optional_index(const json& n, const char* key, std::size_t node)
{
    if (!n.contains(key) || n[key].is_null()) return -1;
    if (!n[key].is_number_integer())
        throw ValidationError(std::string("tree node ") + std::to_string(node) + ": '" + key + "' must be an integer or null");
    return n[key].get<int>();
}

} // namespace

Tree tree_from_json(const json& j, int n_features)
{
    if (!j.is_object() || !j.contains("nodes") || !j["nodes"].is_array())
        throw ValidationError("tree record must be an object with a 'nodes' array");
    if (j.contains("n_features")) {
        if (!j["n_features"].is_number_integer() || j["n_features"].get<int>() != n_features)
            throw ValidationError("tree record width does not match n_features = " + std::to_string(n_features));
    }
    std::vector<TreeNode> nodes;
    bool stats = true;
    const auto& arr = j["nodes"];
    for (std::size_t k = 0; k < arr.size(); ++k) {
        const json& n = arr[k];
        if (!n.is_object()) throw ValidationError("tree node " + std::to_string(k) + " is not an object");
        TreeNode nd;
        nd.feature = optional_index(n, "feature", k);
        nd.left = optional_index(n, "left", k);
        nd.right = optional_index(n, "right", k);
        if (!n.contains("value") || !n["value"].is_number())
            throw ValidationError("tree node " + std::to_string(k) + " needs a numeric 'value'");
        nd.value = n["value"].get<double>();
        if (nd.feature >= 0) {
            if (!n.contains("threshold") || !n["threshold"].is_number())
                throw ValidationError("split node " + std::to_string(k) + " needs a numeric 'threshold'");
            nd.threshold = n["threshold"].get<double>();
        } else if (n.contains("feature") && !n["feature"].is_null()) {
            throw ValidationError("tree node " + std::to_string(k) + ": negative feature index");
        } else if (n.contains("threshold") && !n["threshold"].is_null()) {
            throw ValidationError("leaf node " + std::to_string(k) + " has a threshold");
        }
        if (n.contains("n_samples") && n.contains("impurity") && n["n_samples"].is_number() && n["impurity"].is_number()) {
            nd.n_samples = n["n_samples"].get<int>();
            nd.impurity = n["impurity"].get<double>();
        } else {
            stats = false;
        }
        nodes.push_back(nd);
    }
    return Tree(std::move(nodes), n_features, stats);
}

json read_json_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

void write_json_file(const json& j, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

} // namespace subforest
