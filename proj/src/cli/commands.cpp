#include "subforest/cli.hpp"
#include "subforest/interpret.hpp"
#include "subforest/model_io.hpp"
#include "subforest/report_io.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>

namespace subforest::cli {

namespace {

namespace fs = std::filesystem;

std::string safe_name(const std::string& s)
{
    std::string out;
    for (char c : s) out.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
    return out;
}

std::vector<std::string> names_of(const std::vector<int>& idx, const std::vector<std::string>& names)
{
    std::vector<std::string> out;
    for (int p : idx) out.push_back(names[static_cast<std::size_t>(p)]);
    return out;
}

Dataset load_training(const RunConfig& cfg)
{
    return load_csv(cfg.data, cfg.target, parse_task(cfg.task));
}

FitOptions fit_options(const RunConfig& cfg, const Dataset& data)
{
    FitOptions o;
    o.build = parse_build_method(cfg.build);
    o.build_config.max_depth_limit = cfg.max_depth;
    o.build_config.bag_convergence_tol = cfg.bag_tol;
    o.build_config.trees_per_check = cfg.trees_per_check;
    o.build_config.max_trees = cfg.max_trees;
    o.build_config.min_samples_leaf = cfg.min_samples_leaf;
    o.build_config.seed = cfg.seed;
    o.build_config.threads = cfg.threads;
    o.alpha = cfg.alpha;
    if (!cfg.costs.empty()) o.penalty = read_costs_csv(cfg.costs, data.feature_names);
    if (!cfg.groups.empty()) o.penalty = read_groups_csv(cfg.groups, data.feature_names);
    o.sketch_rho = cfg.sketch;
    o.l0_k = cfg.l0;
    o.solver.tol_cd = cfg.tol_cd;
    o.solver.max_sweeps = cfg.max_sweeps;
    o.polish = !cfg.no_polish;
    o.polish_trees = cfg.polish_trees;
    return o;
}

Ensemble obtain_ensemble(const RunConfig& cfg, const Dataset& data, const FitOptions& o)
{
    if (o.build == BuildMethod::custom) return import_ensemble(cfg.custom_forest, static_cast<int>(data.n_features()));
    return build_ensemble(data, o.build, o.build_config);
}

json ensemble_summary(const Ensemble& e)
{
    json stages = json::array();
    for (const auto& s : e.stages)
        stages.push_back({{"depth", s.depth},
                          {"n_trees", s.n_trees},
                          {"train_mse", s.train_mse},
                          {"oob_mse", std::isfinite(s.oob_mse) ? json(s.oob_mse) : json(nullptr)}});
    return json{{"method", to_string(e.method)}, {"n_trees", e.size()}, {"stages", std::move(stages)}};
}

json model_summary(const FittedModel& m, const Dataset& data)
{
    json j{{"alpha", m.alpha},
           {"alpha_max", m.alpha_max},
           {"train_error", m.train_error},
           {"subforest_size", m.subforest.size()},
           {"selected_features", m.selected_feature_names()},
           {"dropped_trees", m.dropped_trees.size()},
           {"warnings", m.warnings}};
    if (m.l0_k) j["l0_k"] = *m.l0_k;
    if (m.polished) j["polished_train_error"] = mse(data.response, predict(m, data.features));
    return j;
}

void write_selected(const FittedModel& m, const fs::path& file)
{
    std::ofstream out(file);
    if (!out) throw ValidationError("cannot write '" + file.string() + "'");
    for (const auto& n : m.selected_feature_names()) out << n << '\n';
}

void warn(const std::vector<std::string>& warnings)
{
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

fs::path prepare_out_dir(const RunConfig& cfg)
{
    const fs::path dir(cfg.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ValidationError("cannot create output directory '" + dir.string() + "'");
    return dir;
}

int cmd_fit(const RunConfig& cfg)
{
    const Dataset data = load_training(cfg);
    const FitOptions o = fit_options(cfg, data);
    const fs::path dir = prepare_out_dir(cfg);
    const FittedModel m = fit_ensemble(data, obtain_ensemble(cfg, data, o), o);
    save_model(m, dir / "model.json");
    write_selected(m, dir / "selected_features.txt");
    json report{{"command", "fit"}, {"config", to_json(cfg)}, {"ensemble", ensemble_summary(m.ensemble)}};
    report.update(model_summary(m, data));
    write_json_file(report, dir / "report.json");
    warn(m.warnings);
    std::cout << "selected " << m.selected_features.size() << " of " << data.n_features() << " features";
    for (const auto& n : m.selected_feature_names()) std::cout << (n == m.selected_feature_names().front() ? ": " : ", ") << n;
    std::cout << '\n';
    return 0;
}

int cmd_path(const RunConfig& cfg)
{
    const Dataset data = load_training(cfg);
    const FitOptions o = fit_options(cfg, data);
    const fs::path dir = prepare_out_dir(cfg);
    Ensemble ens = obtain_ensemble(cfg, data, o);
    for (Tree& t : ens.trees)
        if (!t.has_node_stats()) t.refresh_node_stats(data.features, data.response);
    const DesignMatrices full = assemble_design(ens, data, o.penalty);
    std::optional<std::pair<DesignMatrices, Vector>> sk;
    if (o.sketch_rho) sk = sketch(full, data.response, *o.sketch_rho, derive_seed(cfg.seed, 13, 0));
    const DesignMatrices& D = sk ? sk->first : full;
    const Vector& y = sk ? sk->second : data.response;

    const NnLassoSolver solver(D, y, o.solver);
    const PathResult path = solve_path(solver, default_alpha_grid(solver.alpha_max(), cfg.n_alphas));
    write_path_csv(path, data.feature_names, dir / "path.csv");
    write_path_importances_csv(path, path_importances(path, ens, D), data.feature_names, dir / "path_importances.csv");

    json points = json::array();
    for (std::size_t i = 0; i < path.solutions.size(); ++i) {
        const auto& s = path.solutions[i];
        points.push_back({{"alpha", path.alphas[i]},
                          {"train_error", s.train_error},
                          {"support_size", s.support_size()},
                          {"converged", s.converged},
                          {"selected_features", names_of(s.selected_features, data.feature_names)}});
    }
    json report{{"command", "path"},
                {"config", to_json(cfg)},
                {"ensemble", ensemble_summary(ens)},
                {"alpha_max", solver.alpha_max()},
                {"path", std::move(points)}};
    write_json_file(report, dir / "report.json");
    std::cout << "path of " << path.solutions.size() << " points written to " << (dir / "path.csv").string() << '\n';
    return 0;
}

int cmd_cv(const RunConfig& cfg)
{
    const Dataset data = load_training(cfg);
    const FitOptions o = fit_options(cfg, data);
    const fs::path dir = prepare_out_dir(cfg);
    CvOptions cv;
    cv.k = cfg.k;
    cv.tol = cfg.cv_tol;
    cv.n_alphas = cfg.n_alphas;
    cv.threads = cfg.threads;
    const CvResult r = fit_cv_ensemble(data, obtain_ensemble(cfg, data, o), o, cv);

    {
        std::ofstream out(dir / "cv_errors.csv");
        if (!out) throw ValidationError("cannot write '" + (dir / "cv_errors.csv").string() + "'");
        out << "alpha,mean_error";
        for (int f = 0; f < cv.k; ++f) out << ",fold_" << f + 1;
        out << ",support_size\n";
        for (std::size_t a = 0; a < r.alphas.size(); ++a) {
            out << format_double(r.alphas[a]) << ',' << format_double(r.mean_error[a]);
            for (const auto& fe : r.fold_errors) out << ',' << format_double(fe[a]);
            out << ',' << r.path_support_sizes[a] << '\n';
        }
    }
    json fold_sets = json::array();
    for (const auto& s : r.fold_feature_sets) fold_sets.push_back(names_of(s, data.feature_names));
    json cvj{{"best_alpha", r.best_alpha},
             {"best_index", r.best_index},
             {"support_size", r.support_size},
             {"selected_features", r.model.selected_feature_names()},
             {"fold_feature_sets", std::move(fold_sets)},
             {"alphas", r.alphas},
             {"mean_error", r.mean_error}};
    write_json_file(cvj, dir / "cv.json");
    save_model(r.model, dir / "model.json");
    write_selected(r.model, dir / "selected_features.txt");
    json report{{"command", "cv"}, {"config", to_json(cfg)}, {"ensemble", ensemble_summary(r.model.ensemble)}};
    report.update(model_summary(r.model, data));
    report["support_size"] = r.support_size;
    write_json_file(report, dir / "report.json");
    warn(r.model.warnings);
    std::cout << "best alpha " << format_double(r.best_alpha) << ", support_size " << r.support_size << '\n';
    return 0;
}

int cmd_interpret(const RunConfig& cfg)
{
    const FittedModel m = load_model(cfg.model);
    const Matrix X = load_feature_columns(cfg.data, m.feature_names);
    const fs::path dir = prepare_out_dir(cfg);
    json written = json::array();
    auto note = [&](const fs::path& p) { written.push_back(p.filename().string()); };

    std::optional<PenaltySpec> groups;
    if (!cfg.groups.empty()) groups = read_groups_csv(cfg.groups, m.feature_names);
    const ImportanceReport imp = weighted_importances(m, groups ? &*groups : nullptr);
    write_importances_csv(imp, dir / "importances.csv");
    note(dir / "importances.csv");
    write_json_file(importances_to_json(imp), dir / "importances.json");
    note(dir / "importances.json");
    write_json_file(subforest_to_json(list_subforest(m)), dir / "subforest.json");
    note(dir / "subforest.json");
    if (cfg.svg) {
        write_text_file(importances_svg(imp), dir / "importances.svg");
        note(dir / "importances.svg");
    }

    std::vector<std::string> shapes = cfg.shape;
    if (shapes.empty())
        for (int p : shape_terms(m)) shapes.push_back(m.feature_names[static_cast<std::size_t>(p)]);
    for (const auto& f : shapes) {
        const ShapeCurve c = shape_function(m, X, f, cfg.grid);
        const std::string stem = "shape_" + safe_name(f);
        write_shape_csv(c, dir / (stem + ".csv"));
        write_json_file(shape_to_json(c, m.intercept), dir / (stem + ".json"));
        note(dir / (stem + ".csv"));
        note(dir / (stem + ".json"));
        if (cfg.svg) {
            write_text_file(shape_svg(c), dir / (stem + ".svg"));
            note(dir / (stem + ".svg"));
        }
    }

    std::vector<std::pair<std::string, std::string>> pairs;
    for (const auto& p : cfg.pair) {
        const auto comma = p.find(',');
        pairs.emplace_back(p.substr(0, comma), p.substr(comma + 1));
    }
    if (cfg.pair.empty())
        for (const auto& [a, b] : interaction_terms(m))
            pairs.emplace_back(m.feature_names[static_cast<std::size_t>(a)], m.feature_names[static_cast<std::size_t>(b)]);
    for (const auto& [a, b] : pairs) {
        const InteractionGrid g = pairwise_interaction(m, X, a, b, cfg.pair_grid);
        const std::string stem = "interaction_" + safe_name(a) + "__" + safe_name(b);
        write_interaction_csv(g, dir / (stem + ".csv"));
        write_json_file(interaction_to_json(g, m.intercept), dir / (stem + ".json"));
        note(dir / (stem + ".csv"));
        note(dir / (stem + ".json"));
        if (cfg.svg) {
            write_text_file(interaction_svg(g), dir / (stem + ".svg"));
            note(dir / (stem + ".svg"));
        }
    }
    json report{{"command", "interpret"}, {"config", to_json(cfg)}, {"intercept", m.intercept}, {"files", written}};
    write_json_file(report, dir / "report.json");
    std::cout << written.size() << " report files written to " << dir.string() << '\n';
    return 0;
}

int cmd_predict(const RunConfig& cfg)
{
    const FittedModel m = load_model(cfg.model);
    const Matrix X = load_feature_columns(cfg.data, m.feature_names);
    const fs::path file = cfg.output.empty() ? prepare_out_dir(cfg) / "predictions.csv" : fs::path(cfg.output);
    const Vector s = predict(m, X);
    std::ofstream out(file);
    if (!out) throw ValidationError("cannot write '" + file.string() + "'");
    const bool clf = m.task == Task::binary_classification;
    out << (clf ? "score,probability,class\n" : "prediction\n");
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        out << format_double(s[i]);
        if (clf) {
            const double p = std::clamp((s[i] + 1.0) * 0.5, 0.0, 1.0);
            const bool pos = s[i] >= 0.0;
            out << ',' << format_double(p) << ',';
            if (m.class_labels.size() == 2)
                out << quote_csv(m.class_labels[pos ? 1 : 0]);
            else
                out << (pos ? "1" : "-1");
        }
        out << '\n';
    }
    std::cout << s.size() << " predictions written to " << file.string() << '\n';
    return 0;
}

class Binder {
public:
    template <class T>
    CLI::Option* option(CLI::App* app, const std::string& name, T RunConfig::*member, const std::string& help)
    {
        register_copy(name, member);
        return app->add_option("--" + name, flags_.*member, help);
    }

    CLI::Option* flag(CLI::App* app, const std::string& name, bool RunConfig::*member, const std::string& help)
    {
        register_copy(name, member);
        return app->add_flag("--" + name, flags_.*member, help);
    }

    /// Config-file values overridden by every flag given on the command line.
    RunConfig resolve(const CLI::App* sub, const std::string& config_file) const
    {
        RunConfig cfg = config_file.empty() ? RunConfig{} : config_from_json(read_json_file(config_file));
        for (const CLI::Option* o : sub->get_options()) {
            if (o->count() == 0) continue;
            auto it = copy_.find(o->get_name());
            if (it != copy_.end()) it->second(cfg, flags_);
        }
        return cfg;
    }

private:
    template <class T>
    void register_copy(const std::string& name, T RunConfig::*member)
    {
        copy_["--" + name] = [member](RunConfig& dst, const RunConfig& src) { dst.*member = src.*member; };
    }

    RunConfig flags_;
    std::map<std::string, std::function<void(RunConfig&, const RunConfig&)>> copy_;
};

void add_common(Binder& b, CLI::App* app, std::string& config_file)
{
    b.option(app, "data", &RunConfig::data, "Input CSV with a header row");
    b.option(app, "seed", &RunConfig::seed, "Seed for every random choice");
    b.option(app, "out-dir", &RunConfig::out_dir, "Output directory");
    b.option(app, "threads", &RunConfig::threads, "Worker thread cap");
    app->add_option("--config", config_file, "Run config or run report JSON; flags override it");
}

void add_training(Binder& b, CLI::App* app)
{
    b.option(app, "target", &RunConfig::target, "Response column");
    b.option(app, "task", &RunConfig::task, "regression or classification");
    b.option(app, "build", &RunConfig::build, "bag, bagboost, doublebagboost or custom");
    b.option(app, "custom-forest", &RunConfig::custom_forest, "Ensemble JSON for --build custom");
    b.option(app, "max-depth", &RunConfig::max_depth, "Depth limit of the builders");
    b.option(app, "bag-tol", &RunConfig::bag_tol, "Relative convergence tolerance of a bag");
    b.option(app, "trees-per-check", &RunConfig::trees_per_check, "Trees added between convergence checks");
    b.option(app, "max-trees", &RunConfig::max_trees, "Tree budget of the builders");
    b.option(app, "min-samples-leaf", &RunConfig::min_samples_leaf, "Minimum rows per leaf while building");
    b.option(app, "sketch", &RunConfig::sketch, "Solve on a uniform row subsample of this fraction");
    b.option(app, "costs", &RunConfig::costs, "CSV of feature,cost");
    b.option(app, "groups", &RunConfig::groups, "CSV of feature,group[,group_cost]");
    b.option(app, "n-alphas", &RunConfig::n_alphas, "Points on the regularization path");
    b.option(app, "tol-cd", &RunConfig::tol_cd, "Coordinate descent tolerance");
    b.option(app, "max-sweeps", &RunConfig::max_sweeps, "Coordinate descent sweep limit");
}

void add_fitting(Binder& b, CLI::App* app)
{
    b.flag(app, "no-polish", &RunConfig::no_polish, "Keep the lasso-weighted subforest as the predictor");
    b.option(app, "polish-trees", &RunConfig::polish_trees, "Trees in the polishing forest");
}

int dispatch(const std::string& name, const RunConfig& cfg)
{
    cfg.validate(name);
    if (name == "fit") return cmd_fit(cfg);
    if (name == "path") return cmd_path(cfg);
    if (name == "cv") return cmd_cv(cfg);
    if (name == "interpret") return cmd_interpret(cfg);
    return cmd_predict(cfg);
}

} // namespace

int run(int argc, char** argv)
{
    CLI::App app{"Feature-sparse tree ensembles: build, select, polish, interpret"};
    app.name("subforest");
    app.require_subcommand(1);
    Binder b;
    std::string config_file;

    auto* fit = app.add_subcommand("fit", "Build an ensemble, select features at one alpha and polish");
    add_common(b, fit, config_file);
    add_training(b, fit);
    add_fitting(b, fit);
    b.option(fit, "alpha", &RunConfig::alpha, "Regularization strength");
    b.option(fit, "l0", &RunConfig::l0, "Best-subset selection with at most K features");

    auto* path = app.add_subcommand("path", "Solve the whole regularization path");
    add_common(b, path, config_file);
    add_training(b, path);

    auto* cv = app.add_subcommand("cv", "Choose alpha by k-fold cross-validation and refit");
    add_common(b, cv, config_file);
    add_training(b, cv);
    add_fitting(b, cv);
    b.option(cv, "k", &RunConfig::k, "Number of folds");
    b.option(cv, "cv-tol", &RunConfig::cv_tol, "Relative tolerance above the minimum CV error");

    auto* interp = app.add_subcommand("interpret", "Importances, subforest listing, shape and interaction reports");
    add_common(b, interp, config_file);
    b.option(interp, "model", &RunConfig::model, "Model JSON from fit or cv");
    b.option(interp, "groups", &RunConfig::groups, "CSV of feature,group for group importances");
    b.option(interp, "shape", &RunConfig::shape, "Feature for a shape function (repeatable)");
    b.option(interp, "pair", &RunConfig::pair, "Feature pair a,b for an interaction grid (repeatable)");
    b.option(interp, "grid", &RunConfig::grid, "Shape function grid size");
    b.option(interp, "pair-grid", &RunConfig::pair_grid, "Interaction grid size per axis");
    b.flag(interp, "svg", &RunConfig::svg, "Also write SVG charts");

    auto* pred = app.add_subcommand("predict", "Score a CSV with a model JSON");
    add_common(b, pred, config_file);
    b.option(pred, "model", &RunConfig::model, "Model JSON from fit or cv");
    b.option(pred, "output", &RunConfig::output, "Output CSV (default <out-dir>/predictions.csv)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    const CLI::App* chosen = app.get_subcommands().front();
    try {
        return dispatch(chosen->get_name(), b.resolve(chosen, config_file));
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 2;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\nRun with --help for usage.\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "fatal: " << e.what() << '\n';
        return 2;
    }
}

} // namespace subforest::cli
