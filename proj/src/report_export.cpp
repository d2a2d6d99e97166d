#include "subforest/report_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace subforest {

namespace {

std::ofstream open_out(const std::filesystem::path& file)
{
    std::ofstream out(file);
    if (!out) throw ValidationError("cannot write '" + file.string() + "'");
    return out;
}

std::string xml_escape(const std::string& s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out.push_back(c);
        }
    }
    return out;
}

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string label(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

// Blue-white-red ramp for t in [0, 1].
std::string ramp(double t)
{
    t = std::clamp(t, 0.0, 1.0);
    int r, g, b;
    if (t < 0.5) {
        const double s = t / 0.5;
        r = static_cast<int>(49 + s * (247 - 49));
        g = static_cast<int>(54 + s * (247 - 54));
        b = static_cast<int>(149 + s * (247 - 149));
    } else {
        const double s = (t - 0.5) / 0.5;
        r = static_cast<int>(247 + s * (165 - 247));
        g = static_cast<int>(247 + s * (0 - 247));
        b = static_cast<int>(247 + s * (38 - 247));
    }
    char buf[8];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
    return buf;
}

constexpr double kWidth = 640, kHeight = 400, kLeft = 70, kRight = 20, kTop = 30, kBottom = 50;

std::string svg_open(const std::string& title)
{
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">" << xml_escape(title)
      << "</text>\n";
    return s.str();
}

} // namespace

json importances_to_json(const ImportanceReport& report)
{
    json per_feature = json::object();
    for (std::size_t p = 0; p < report.feature_names.size(); ++p)
        per_feature[report.feature_names[p]] = report.per_feature[static_cast<Eigen::Index>(p)];
    json j{{"per_feature", std::move(per_feature)}};
    if (!report.per_group.empty()) {
        json g = json::object();
        for (std::size_t k = 0; k < report.per_group.size(); ++k) g[std::to_string(k + 1)] = report.per_group[k];
        j["per_group"] = std::move(g);
    }
    return j;
}

json subforest_to_json(const std::vector<std::vector<std::string>>& listing)
{
    return json(listing);
}

json shape_to_json(const ShapeCurve& curve, double intercept)
{
    return json{{"feature", curve.feature},
                {"centered", false},
                {"intercept", intercept},
                {"trees", curve.trees},
                {"grid", curve.grid},
                {"value", curve.value},
                {"breaks", curve.exact.breaks},
                {"levels", curve.exact.levels}};
}

json interaction_to_json(const InteractionGrid& grid, double intercept)
{
    json value = json::array();
    for (Eigen::Index a = 0; a < grid.value.rows(); ++a) {
        std::vector<double> row(static_cast<std::size_t>(grid.value.cols()));
        for (Eigen::Index b = 0; b < grid.value.cols(); ++b) row[static_cast<std::size_t>(b)] = grid.value(a, b);
        value.push_back(row);
    }
    json levels = json::array();
    for (Eigen::Index a = 0; a < grid.levels.rows(); ++a) {
        std::vector<double> row(static_cast<std::size_t>(grid.levels.cols()));
        for (Eigen::Index b = 0; b < grid.levels.cols(); ++b) row[static_cast<std::size_t>(b)] = grid.levels(a, b);
        levels.push_back(row);
    }
    return json{{"features", {grid.feature1, grid.feature2}},
                {"centered", false},
                {"intercept", intercept},
                {"trees", grid.trees},
                {"grid1", grid.grid1},
                {"grid2", grid.grid2},
                {"value", std::move(value)},
                {"breaks1", grid.breaks1},
                {"breaks2", grid.breaks2},
                {"levels", std::move(levels)}};
}

void write_importances_csv(const ImportanceReport& report, const std::filesystem::path& file)
{
    auto out = open_out(file);
    out << "feature,importance\n";
    for (std::size_t p = 0; p < report.feature_names.size(); ++p)
        out << quote_csv(report.feature_names[p]) << ',' << format_double(report.per_feature[static_cast<Eigen::Index>(p)])
            << '\n';
}

void write_shape_csv(const ShapeCurve& curve, const std::filesystem::path& file)
{
    auto out = open_out(file);
    out << "feature,value,prediction\n";
    for (std::size_t i = 0; i < curve.grid.size(); ++i)
        out << quote_csv(curve.feature) << ',' << format_double(curve.grid[i]) << ',' << format_double(curve.value[i]) << '\n';
}

void write_interaction_csv(const InteractionGrid& grid, const std::filesystem::path& file)
{
    auto out = open_out(file);
    out << quote_csv(grid.feature1) << ',' << quote_csv(grid.feature2) << ",prediction\n";
    for (std::size_t a = 0; a < grid.grid1.size(); ++a)
        for (std::size_t b = 0; b < grid.grid2.size(); ++b)
            out << format_double(grid.grid1[a]) << ',' << format_double(grid.grid2[b]) << ','
                << format_double(grid.value(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b))) << '\n';
}

void write_path_importances_csv(const PathResult& path, const Matrix& importances,
                                std::span<const std::string> feature_names, const std::filesystem::path& file)
{
    if (importances.rows() != static_cast<Eigen::Index>(path.alphas.size()) ||
        importances.cols() != static_cast<Eigen::Index>(feature_names.size()))
        throw ValidationError("path importances: dimensions do not match");
    auto out = open_out(file);
    out << "alpha";
    for (const auto& n : feature_names) out << ',' << quote_csv(n);
    out << '\n';
    for (Eigen::Index i = 0; i < importances.rows(); ++i) {
        out << format_double(path.alphas[static_cast<std::size_t>(i)]);
        for (Eigen::Index p = 0; p < importances.cols(); ++p) out << ',' << format_double(importances(i, p));
        out << '\n';
    }
}

std::string importances_svg(const ImportanceReport& report)
{
    std::ostringstream s;
    s << svg_open("Weighted feature importance");
    const std::size_t n = report.feature_names.size();
    const double top = n == 0 ? 0.0 : std::max(report.per_feature.maxCoeff(), 1e-300);
    const double row_h = n == 0 ? 0.0 : (kHeight - kTop - kBottom) / static_cast<double>(n);
    const double left = 160, span = kWidth - left - kRight;
    for (std::size_t p = 0; p < n; ++p) {
        const double v = report.per_feature[static_cast<Eigen::Index>(p)];
        const double y = kTop + row_h * static_cast<double>(p);
        s << "<text x=\"" << fmt(left - 6) << "\" y=\"" << fmt(y + row_h * 0.7) << "\" text-anchor=\"end\">"
          << xml_escape(report.feature_names[p]) << "</text>\n"
          << "<rect x=\"" << fmt(left) << "\" y=\"" << fmt(y + row_h * 0.1) << "\" width=\"" << fmt(span * v / top)
          << "\" height=\"" << fmt(row_h * 0.8) << "\" fill=\"#3b6ea8\"/>\n";
    }
    s << "</svg>\n";
    return s.str();
}

std::string shape_svg(const ShapeCurve& curve)
{
    std::ostringstream s;
    s << svg_open("Shape function: " + curve.feature);
    if (curve.grid.empty()) {
        s << "</svg>\n";
        return s.str();
    }
    const auto [xlo_it, xhi_it] = std::minmax_element(curve.grid.begin(), curve.grid.end());
    const auto [ylo_it, yhi_it] = std::minmax_element(curve.value.begin(), curve.value.end());
    const double xlo = *xlo_it, xhi = *xhi_it > *xlo_it ? *xhi_it : *xlo_it + 1.0;
    const double ylo = *ylo_it, yhi = *yhi_it > *ylo_it ? *yhi_it : *ylo_it + 1.0;
    const double w = kWidth - kLeft - kRight, h = kHeight - kTop - kBottom;
    auto px = [&](double v) { return kLeft + w * (v - xlo) / (xhi - xlo); };
    auto py = [&](double v) { return kTop + h * (1.0 - (v - ylo) / (yhi - ylo)); };

    s << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << w << "\" height=\"" << h
      << "\" fill=\"none\" stroke=\"#888\"/>\n<polyline fill=\"none\" stroke=\"#c0392b\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < curve.grid.size(); ++i) {
        if (i > 0) s << ' ' << fmt(px(curve.grid[i])) << ',' << fmt(py(curve.value[i - 1]));
        s << ' ' << fmt(px(curve.grid[i])) << ',' << fmt(py(curve.value[i]));
    }
    s << "\"/>\n"
      << "<text x=\"" << kLeft << "\" y=\"" << kHeight - kBottom + 16 << "\">" << label(xlo) << "</text>\n"
      << "<text x=\"" << kWidth - kRight << "\" y=\"" << kHeight - kBottom + 16 << "\" text-anchor=\"end\">" << label(xhi)
      << "</text>\n"
      << "<text x=\"" << kLeft - 6 << "\" y=\"" << kTop + 10 << "\" text-anchor=\"end\">" << label(yhi) << "</text>\n"
      << "<text x=\"" << kLeft - 6 << "\" y=\"" << kHeight - kBottom << "\" text-anchor=\"end\">" << label(ylo) << "</text>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">" << xml_escape(curve.feature)
      << "</text>\n</svg>\n";
    return s.str();
}

std::string interaction_svg(const InteractionGrid& grid)
{
    std::ostringstream s;
    s << svg_open("Interaction: " + grid.feature1 + " x " + grid.feature2);
    const Eigen::Index n1 = grid.value.rows(), n2 = grid.value.cols();
    if (n1 == 0 || n2 == 0) {
        s << "</svg>\n";
        return s.str();
    }
    const double lo = grid.value.minCoeff(), hi = grid.value.maxCoeff();
    const double range = hi > lo ? hi - lo : 1.0;
    const double w = kWidth - kLeft - kRight, h = kHeight - kTop - kBottom;
    const double cw = w / static_cast<double>(n1), ch = h / static_cast<double>(n2);
    for (Eigen::Index a = 0; a < n1; ++a)
        for (Eigen::Index b = 0; b < n2; ++b)
            s << "<rect x=\"" << fmt(kLeft + cw * static_cast<double>(a)) << "\" y=\""
              << fmt(kTop + h - ch * static_cast<double>(b + 1)) << "\" width=\"" << fmt(cw + 0.5) << "\" height=\""
              << fmt(ch + 0.5) << "\" fill=\"" << ramp((grid.value(a, b) - lo) / range) << "\"/>\n";
    s << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">" << xml_escape(grid.feature1)
      << "</text>\n"
      << "<text x=\"16\" y=\"" << kHeight / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << kHeight / 2
      << ")\">" << xml_escape(grid.feature2) << "</text>\n</svg>\n";
    return s.str();
}

void write_text_file(const std::string& text, const std::filesystem::path& file)
{
    auto out = open_out(file);
    out << text;
}

} // namespace subforest
