#include "subforest/data.hpp"
#include "subforest/sparsify.hpp"

#include <cmath>
#include <fstream>

namespace subforest {

std::vector<double> default_alpha_grid(double alpha_max, int n, double ratio)
{
    if (n < 1) throw ValidationError("alpha grid: need at least one point");
    if (!(ratio > 0.0 && ratio < 1.0)) throw ValidationError("alpha grid: ratio must lie in (0, 1)");
    if (!(alpha_max >= 0.0) || !std::isfinite(alpha_max)) throw ValidationError("alpha grid: invalid alpha_max");
    if (alpha_max == 0.0) return {0.0};
    std::vector<double> grid(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double e = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
        grid[static_cast<std::size_t>(i)] = alpha_max * std::pow(ratio, e);
    }
    return grid;
}

PathResult solve_path(const NnLassoSolver& solver, const std::vector<double>& alphas)
{
    if (alphas.empty()) throw ValidationError("path: empty alpha sequence");
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        if (!(alphas[i] >= 0.0) || !std::isfinite(alphas[i])) throw ValidationError("path: alphas must be finite and >= 0");
        if (i > 0 && !(alphas[i] < alphas[i - 1])) throw ValidationError("path: alphas must be strictly decreasing");
    }
    PathResult out;
    out.alphas = alphas;
    out.solutions.reserve(alphas.size());
    for (double a : alphas) {
        const Vector* warm = out.solutions.empty() ? nullptr : &out.solutions.back().w;
        out.solutions.push_back(solver.solve(a, warm));
    }
    return out;
}

PathResult solve_path(const DesignMatrices& design, const Vector& y, const std::optional<std::vector<double>>& alphas,
                      const SolverOptions& options)
{
    const NnLassoSolver solver(design, y, options);
    return solve_path(solver, alphas ? *alphas : default_alpha_grid(solver.alpha_max()));
}

void write_path_csv(const PathResult& path, std::span<const std::string> feature_names, const std::filesystem::path& file)
{
    std::ofstream out(file);
    if (!out) throw ValidationError("cannot write '" + file.string() + "'");
    out << "alpha,train_error";
    for (const auto& n : feature_names) out << ',' << quote_csv(n);
    out << '\n';
    for (std::size_t i = 0; i < path.solutions.size(); ++i) {
        const LassoSolution& s = path.solutions[i];
        if (s.feature_usage.size() != static_cast<Eigen::Index>(feature_names.size()))
            throw ValidationError("path export: feature name count does not match the design");
        out << format_double(path.alphas[i]) << ',' << format_double(s.train_error);
        for (Eigen::Index p = 0; p < s.feature_usage.size(); ++p) out << ',' << format_double(s.feature_usage[p]);
        out << '\n';
    }
}

} // namespace subforest
