#pragma once

// Static report rendering: SVG Q-Q plots and calibration histograms, and
// result tables as text, CSV or JSON. Every document is a pure function of
// its inputs.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "qqgof/errors.hpp"
#include "qqgof/gof_statistics.hpp"
#include "qqgof/gof_tests.hpp"
#include "qqgof/mc_calibration.hpp"
#include "qqgof/qq_regression.hpp"

namespace qqgof {

struct PlotSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<std::pair<double, double>> points;
    std::optional<std::pair<double, double>> line;  ///< (intercept, slope)
    std::vector<std::string> annotations;
};

namespace detail {

inline std::string xml_escape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

/// Up to `max_ticks` round values (1, 2, 5 x 10^k steps) inside [lo, hi].
inline std::vector<double> nice_ticks(double lo, double hi, int max_ticks = 6) {
    std::vector<double> ticks;
    if (!(hi > lo)) return {lo};
    const double raw = (hi - lo) / std::max(1, max_ticks - 1);
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        step = m * mag;
        if ((hi - lo) / step <= max_ticks - 1) break;
    }
    for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step) {
        ticks.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
        if (ticks.size() >= static_cast<std::size_t>(max_ticks)) break;
    }
    return ticks;
}

struct Frame {
    double width = 640, height = 480;
    double left = 70, right = 20, top = 40, bottom = 55;
    double x0 = 0, x1 = 1, y0 = 0, y1 = 1;

    double px(double x) const { return left + (x - x0) / (x1 - x0) * (width - left - right); }
    double py(double y) const { return height - bottom - (y - y0) / (y1 - y0) * (height - top - bottom); }
};

inline std::pair<double, double> padded_range(double lo, double hi) {
    if (!(hi > lo)) {
        const double pad = lo == 0.0 ? 1.0 : 0.05 * std::abs(lo);
        return {lo - pad, hi + pad};
    }
    const double pad = 0.05 * (hi - lo);
    return {lo - pad, hi + pad};
}

inline void svg_open(std::string& out, const Frame& f, std::string_view title) {
    out += fmt::format(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{0}\" height=\"{1}\" "
        "viewBox=\"0 0 {0} {1}\">\n"
        "<rect x=\"0\" y=\"0\" width=\"{0}\" height=\"{1}\" fill=\"white\"/>\n"
        "<text x=\"{2}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        "font-size=\"16\">{3}</text>\n",
        f.width, f.height, f.width / 2, xml_escape(title));
}

inline void svg_axes(std::string& out, const Frame& f, std::string_view x_label,
                     std::string_view y_label) {
    const double xb = f.height - f.bottom;
    out += fmt::format("<path d=\"M{:.2f},{:.2f} H{:.2f} M{:.2f},{:.2f} V{:.2f}\" stroke=\"black\" "
                       "fill=\"none\"/>\n",
                       f.left, xb, f.width - f.right, f.left, xb, f.top);
    std::string ticks;
    for (double t : nice_ticks(f.x0, f.x1)) {
        const double x = f.px(t);
        ticks += fmt::format(" M{:.2f},{:.2f} v5", x, xb);
        out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\" "
                           "font-family=\"sans-serif\" font-size=\"11\">{:g}</text>\n",
                           x, xb + 18, t);
    }
    for (double t : nice_ticks(f.y0, f.y1)) {
        const double y = f.py(t);
        ticks += fmt::format(" M{:.2f},{:.2f} h-5", f.left, y);
        out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\" "
                           "font-family=\"sans-serif\" font-size=\"11\">{:g}</text>\n",
                           f.left - 8, y + 4, t);
    }
    if (!ticks.empty()) out += fmt::format("<path d=\"{}\" stroke=\"black\"/>\n", ticks.substr(1));
    out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\" "
                       "font-family=\"sans-serif\" font-size=\"13\">{}</text>\n",
                       (f.left + f.width - f.right) / 2, f.height - 12, xml_escape(x_label));
    const double yc = (f.top + f.height - f.bottom) / 2;
    out += fmt::format("<text x=\"18\" y=\"{0:.2f}\" text-anchor=\"middle\" "
                       "font-family=\"sans-serif\" font-size=\"13\" "
                       "transform=\"rotate(-90 18 {0:.2f})\">{1}</text>\n",
                       yc, xml_escape(y_label));
}

inline void svg_annotations(std::string& out, const Frame& f,
                            const std::vector<std::string>& lines) {
    if (lines.empty()) return;
    const double w = 190, h = 8 + 16.0 * static_cast<double>(lines.size());
    const double x = f.left + 10, y = f.top + 6;
    out += fmt::format("<g class=\"annotations\">\n<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{}\" "
                       "height=\"{:.2f}\" fill=\"white\" stroke=\"#888\"/>\n",
                       x, y, w, h);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-family=\"sans-serif\" "
                           "font-size=\"12\">{}</text>\n",
                           x + 8, y + 18 + 16.0 * static_cast<double>(i),
                           xml_escape(lines[i]));
    }
    out += "</g>\n";
}

}  // namespace detail

/// Scatter plot with an optional straight line across the x-range of the points.
inline std::string render_svg(const PlotSpec& spec) {
    if (spec.points.empty()) throw DomainError("render_svg: no points to plot");
    auto [xmin, xmax] = std::minmax_element(spec.points.begin(), spec.points.end(),
                                            [](auto& a, auto& b) { return a.first < b.first; });
    auto [ymin, ymax] = std::minmax_element(spec.points.begin(), spec.points.end(),
                                            [](auto& a, auto& b) { return a.second < b.second; });
    const double xlo = xmin->first, xhi = xmax->first;
    double ylo = ymin->second, yhi = ymax->second;
    if (spec.line) {
        const auto [a, b] = *spec.line;
        for (double x : {xlo, xhi}) {
            ylo = std::min(ylo, a + b * x);
            yhi = std::max(yhi, a + b * x);
        }
    }
    detail::Frame f;
    std::tie(f.x0, f.x1) = detail::padded_range(xlo, xhi);
    std::tie(f.y0, f.y1) = detail::padded_range(ylo, yhi);

    std::string out;
    detail::svg_open(out, f, spec.title);
    detail::svg_axes(out, f, spec.x_label, spec.y_label);
    out += "<g class=\"points\" fill=\"#1f4e9c\">\n";
    for (const auto& [x, y] : spec.points) {
        out += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3.5\"/>\n", f.px(x), f.py(y));
    }
    out += "</g>\n";
    if (spec.line) {
        const auto [a, b] = *spec.line;
        out += fmt::format("<line class=\"fit\" x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" "
                           "y2=\"{:.2f}\" stroke=\"#c0392b\" stroke-width=\"1.5\"/>\n",
                           f.px(xlo), f.py(a + b * xlo), f.px(xhi), f.py(a + b * xhi));
    }
    detail::svg_annotations(out, f, spec.annotations);
    out += "</svg>\n";
    return out;
}

struct QQPlotOptions {
    std::string title = "Q-Q plot";
    std::string x_label = "theoretical quantile";
    std::string y_label = "ordered observation";
    std::optional<GofResult> correlation;  ///< adds T_n and its p-value to the annotations
    std::vector<std::string> extra_annotations;
};

/// Q-Q plot of a fit: (q_k, X_(k)) with the line mu_hat + sigma_hat x.
inline std::string render_qq_svg(const QQFit& fit, const QQPlotOptions& opts = {}) {
    PlotSpec spec{opts.title, opts.x_label, opts.y_label, {}, std::nullopt, {}};
    for (std::size_t k = 0; k < fit.n; ++k) spec.points.emplace_back(fit.positions.q[k], fit.sorted[k]);
    spec.annotations.push_back(fmt::format("n = {}", fit.n));
    if (fit.degenerate) {
        spec.annotations.push_back("warning: degenerate sample, no fit line");
    } else {
        spec.line = std::pair{fit.mu_hat, fit.sigma_hat};
        spec.annotations.push_back(fmt::format("mu = {:.4f}, sigma = {:.4f}", fit.mu_hat, fit.sigma_hat));
        spec.annotations.push_back(fmt::format("rho = {:.4f}", *fit.rho));
    }
    if (opts.correlation) {
        spec.annotations.push_back(fmt::format("T = {:.4f}", opts.correlation->statistic));
        spec.annotations.push_back(fmt::format("p = {:.2f}%", 100.0 * opts.correlation->p_value));
    }
    for (const auto& a : opts.extra_annotations) spec.annotations.push_back(a);
    return render_svg(spec);
}

/// Histogram of a null calibration with the fitted normal density overlaid.
inline std::string render_histogram_svg(const CalibrationTable& table) {
    const auto& h = table.histogram;
    if (h.counts.empty()) throw DomainError("render_histogram_svg: empty histogram");
    const double total = static_cast<double>(table.reps);
    double dens_max = 0.0;
    for (auto c : h.counts) dens_max = std::max(dens_max, static_cast<double>(c) / (total * h.width));
    dens_max = std::max(dens_max, normal_pdf(0.0) / table.sigma_n);

    detail::Frame f;
    f.x0 = h.lo;
    f.x1 = h.lo + h.width * static_cast<double>(h.counts.size());
    f.y0 = 0.0;
    f.y1 = 1.05 * dens_max;

    std::string out;
    detail::svg_open(out, f, fmt::format("T_n under normality, n = {}", table.n));
    out += "<g class=\"bars\" fill=\"#9bb7e0\" stroke=\"#1f4e9c\" stroke-width=\"0.5\">\n";
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
        const double lo = h.lo + h.width * static_cast<double>(i);
        const double dens = static_cast<double>(h.counts[i]) / (total * h.width);
        const double x = f.px(lo), y = f.py(dens);
        out += fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\"/>\n",
                           x, y, f.px(lo + h.width) - x, f.py(0.0) - y);
    }
    out += "</g>\n";
    std::string pts;
    constexpr int steps = 200;
    for (int i = 0; i <= steps; ++i) {
        const double x = f.x0 + (f.x1 - f.x0) * i / steps;
        const double y = normal_pdf((x - table.mu_n) / table.sigma_n) / table.sigma_n;
        pts += fmt::format("{}{:.2f},{:.2f}", i ? " " : "", f.px(x), f.py(y));
    }
    out += fmt::format("<polyline class=\"normal-fit\" points=\"{}\" fill=\"none\" "
                       "stroke=\"#c0392b\" stroke-width=\"1.5\"/>\n",
                       pts);
    detail::svg_axes(out, f, "T_n", "density");
    detail::svg_annotations(out, f,
                            {fmt::format("mu = {:.4f}; sigma = {:.4f}", table.mu_n, table.sigma_n),
                             fmt::format("{} replications", table.reps),
                             fmt::format("seed {}", table.seed)});
    out += "</svg>\n";
    return out;
}

// ---------------------------------------------------------------------------
// Result tables.

struct DatasetResults {
    std::string dataset;
    std::size_t n = 0;
    std::vector<GofResult> tests;
    std::optional<double> mu_hat;
    std::optional<double> sigma_hat;
};

enum class TableFormat { Text, Csv, Json };

namespace detail {

inline std::vector<TestKind> table_columns(const std::vector<DatasetResults>& rows) {
    std::vector<TestKind> cols;
    for (const auto& r : rows)
        for (const auto& t : r.tests)
            if (std::find(cols.begin(), cols.end(), t.test) == cols.end()) cols.push_back(t.test);
    return cols;
}

inline const GofResult* find_test(const DatasetResults& r, TestKind t) {
    for (const auto& g : r.tests)
        if (g.test == t) return &g;
    return nullptr;
}

inline std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace detail

/// One row per dataset; statistic and p-value columns per test.
inline std::string render_table(const std::vector<DatasetResults>& rows, TableFormat format) {
    if (rows.empty()) throw DomainError("render_table: no results");
    for (const auto& r : rows)
        if (r.tests.empty()) throw DomainError("render_table: dataset without test results");
    const auto cols = detail::table_columns(rows);

    switch (format) {
        case TableFormat::Json: {
            auto doc = nlohmann::json::array();
            for (const auto& r : rows) {
                nlohmann::json row{{"dataset", r.dataset}, {"n", r.n}};
                if (r.mu_hat) row["mu_hat"] = *r.mu_hat;
                if (r.sigma_hat) row["sigma_hat"] = *r.sigma_hat;
                auto tests = nlohmann::json::array();
                for (const auto& t : r.tests) {
                    tests.push_back({{"name", to_string(t.test)},
                                     {"statistic", t.statistic},
                                     {"p_value", t.p_value},
                                     {"p_method", to_string(t.p_method)}});
                }
                row["tests"] = std::move(tests);
                doc.push_back(std::move(row));
            }
            return doc.dump(2) + "\n";
        }
        case TableFormat::Csv: {
            std::string out = "dataset,n";
            for (auto c : cols) out += fmt::format(",{0}_statistic,{0}_p_value", to_string(c));
            out += "\n";
            for (const auto& r : rows) {
                out += fmt::format("{},{}", detail::csv_field(r.dataset), r.n);
                for (auto c : cols) {
                    if (const auto* g = detail::find_test(r, c)) {
                        out += fmt::format(",{:.17g},{:.17g}", g->statistic, g->p_value);
                    } else {
                        out += ",,";
                    }
                }
                out += "\n";
            }
            return out;
        }
        case TableFormat::Text: {
            std::size_t name_w = 7;
            for (const auto& r : rows) name_w = std::max(name_w, r.dataset.size());
            std::string out = fmt::format("{:<{}}  {:>4}", "dataset", name_w, "n");
            for (auto c : cols) out += fmt::format("  {:>16}  {:>9}", to_string(c), "p-value");
            out += "\n";
            for (const auto& r : rows) {
                out += fmt::format("{:<{}}  {:>4}", r.dataset, name_w, r.n);
                for (auto c : cols) {
                    if (const auto* g = detail::find_test(r, c)) {
                        out += fmt::format("  {:>16.4f}  {:>8.2f}%", g->statistic, 100.0 * g->p_value);
                    } else {
                        out += fmt::format("  {:>16}  {:>9}", "-", "-");
                    }
                }
                out += "\n";
            }
            return out;
        }
    }
    return {};
}

}  // namespace qqgof
