#pragma once

// Minimal self-contained SVG charts: line series and stacked bars with axes
// and legends. All coordinates go through fixed-precision formatting so
// identical inputs give identical bytes.

#include <algorithm>
#include <string>
#include <vector>

#include "chainbench/util.hpp"

namespace chainbench::svg {

inline const std::vector<std::string>& palette() {
    static const std::vector<std::string> colors = {
        "#4878cf", "#ee854a", "#6acc65", "#d65f5f",
        "#956cb4", "#8c613c", "#dc7ec0", "#797979"};
    return colors;
}

struct Series {
    std::string name;
    std::vector<std::pair<double, double>> points;  // sorted by x by the caller
    bool dashed = false;
};

struct LineChart {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> series;
    double y_min = 0.0;
    double y_max = 1.0;
};

struct StackedBars {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<std::string> x_labels;
    std::vector<std::string> layer_names;
    // values[layer][x]; bars stack bottom-up in layer order
    std::vector<std::vector<double>> values;
    double y_max = 1.0;
};

namespace detail {

constexpr double kWidth = 720, kHeight = 440;
constexpr double kLeft = 64, kRight = 560, kTop = 48, kBottom = 392;

inline std::string f(double v) { return fmt_double(v, 2); }

inline void open_svg(std::string& out, const std::string& title) {
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + f(kWidth) +
           "\" height=\"" + f(kHeight) + "\" viewBox=\"0 0 " + f(kWidth) + " " +
           f(kHeight) + "\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out += "<text x=\"" + f((kLeft + kRight) / 2) +
           "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"16\">" + title + "</text>\n";
}

inline void axes(std::string& out, const std::string& x_label,
                 const std::string& y_label, double y_min, double y_max) {
    out += "<line x1=\"" + f(kLeft) + "\" y1=\"" + f(kBottom) + "\" x2=\"" + f(kRight) +
           "\" y2=\"" + f(kBottom) + "\" stroke=\"black\"/>\n";
    out += "<line x1=\"" + f(kLeft) + "\" y1=\"" + f(kTop) + "\" x2=\"" + f(kLeft) +
           "\" y2=\"" + f(kBottom) + "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        double frac = static_cast<double>(i) / 4.0;
        double y = kBottom - frac * (kBottom - kTop);
        double value = y_min + frac * (y_max - y_min);
        out += "<line x1=\"" + f(kLeft - 4) + "\" y1=\"" + f(y) + "\" x2=\"" + f(kLeft) +
               "\" y2=\"" + f(y) + "\" stroke=\"black\"/>\n";
        out += "<text x=\"" + f(kLeft - 8) + "\" y=\"" + f(y + 4) +
               "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
               f(value) + "</text>\n";
    }
    out += "<text x=\"" + f((kLeft + kRight) / 2) + "\" y=\"" + f(kHeight - 12) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" +
           x_label + "</text>\n";
    out += "<text x=\"16\" y=\"" + f((kTop + kBottom) / 2) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
           "transform=\"rotate(-90 16 " + f((kTop + kBottom) / 2) + ")\">" +
           y_label + "</text>\n";
}

inline void legend_entry(std::string& out, std::size_t slot, const std::string& color,
                         bool dashed, const std::string& name) {
    double y = kTop + 8 + static_cast<double>(slot) * 18;
    out += "<line x1=\"" + f(kRight + 12) + "\" y1=\"" + f(y) + "\" x2=\"" +
           f(kRight + 36) + "\" y2=\"" + f(y) + "\" stroke=\"" + color +
           "\" stroke-width=\"2\"" + (dashed ? " stroke-dasharray=\"6 3\"" : "") +
           "/>\n";
    out += "<text x=\"" + f(kRight + 42) + "\" y=\"" + f(y + 4) +
           "\" font-family=\"sans-serif\" font-size=\"11\">" + name + "</text>\n";
}

}  // namespace detail

inline std::string render(const LineChart& chart) {
    using namespace detail;
    double x_min = 0, x_max = 1;
    bool first = true;
    for (const Series& s : chart.series)
        for (const auto& [x, _] : s.points) {
            if (first) { x_min = x_max = x; first = false; }
            x_min = std::min(x_min, x);
            x_max = std::max(x_max, x);
        }
    if (x_max <= x_min) x_max = x_min + 1;

    auto px = [&](double x) {
        return kLeft + (x - x_min) / (x_max - x_min) * (kRight - kLeft);
    };
    auto py = [&](double y) {
        double clamped = std::clamp(y, chart.y_min, chart.y_max);
        return kBottom -
               (clamped - chart.y_min) / (chart.y_max - chart.y_min) * (kBottom - kTop);
    };

    std::string out;
    open_svg(out, chart.title);
    axes(out, chart.x_label, chart.y_label, chart.y_min, chart.y_max);
    // x ticks at every distinct point x
    std::vector<double> xs;
    for (const Series& s : chart.series)
        for (const auto& [x, _] : s.points) xs.push_back(x);
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    for (double x : xs) {
        out += "<line x1=\"" + f(px(x)) + "\" y1=\"" + f(kBottom) + "\" x2=\"" +
               f(px(x)) + "\" y2=\"" + f(kBottom + 4) + "\" stroke=\"black\"/>\n";
        out += "<text x=\"" + f(px(x)) + "\" y=\"" + f(kBottom + 18) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
               fmt_double(x, x == static_cast<long long>(x) ? 0 : 2) + "</text>\n";
    }
    for (std::size_t si = 0; si < chart.series.size(); ++si) {
        const Series& s = chart.series[si];
        const std::string& color = palette()[si % palette().size()];
        if (s.points.size() > 1) {
            std::string pts;
            for (const auto& [x, y] : s.points)
                pts += f(px(x)) + "," + f(py(y)) + " ";
            if (!pts.empty()) pts.pop_back();
            out += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + color +
                   "\" stroke-width=\"2\"" +
                   (s.dashed ? " stroke-dasharray=\"6 3\"" : "") + "/>\n";
        }
        for (const auto& [x, y] : s.points)
            out += "<circle cx=\"" + f(px(x)) + "\" cy=\"" + f(py(y)) +
                   "\" r=\"3\" fill=\"" + color + "\"/>\n";
        legend_entry(out, si, color, s.dashed, s.name);
    }
    out += "</svg>\n";
    return out;
}

inline std::string render(const StackedBars& chart) {
    using namespace detail;
    std::string out;
    open_svg(out, chart.title);
    axes(out, chart.x_label, chart.y_label, 0.0, chart.y_max);
    const std::size_t groups = chart.x_labels.size();
    if (groups > 0) {
        const double slot = (kRight - kLeft) / static_cast<double>(groups);
        const double bar_w = slot * 0.6;
        for (std::size_t g = 0; g < groups; ++g) {
            double x0 = kLeft + slot * (static_cast<double>(g) + 0.2);
            double acc = 0.0;
            for (std::size_t layer = 0; layer < chart.layer_names.size(); ++layer) {
                double v = layer < chart.values.size() && g < chart.values[layer].size()
                               ? chart.values[layer][g]
                               : 0.0;
                double y_lo = acc, y_hi = acc + v;
                acc = y_hi;
                double top = kBottom - std::clamp(y_hi / chart.y_max, 0.0, 1.0) *
                                           (kBottom - kTop);
                double bottom = kBottom - std::clamp(y_lo / chart.y_max, 0.0, 1.0) *
                                              (kBottom - kTop);
                if (bottom - top <= 0) continue;
                out += "<rect x=\"" + f(x0) + "\" y=\"" + f(top) + "\" width=\"" +
                       f(bar_w) + "\" height=\"" + f(bottom - top) + "\" fill=\"" +
                       palette()[layer % palette().size()] + "\"/>\n";
            }
            out += "<text x=\"" + f(x0 + bar_w / 2) + "\" y=\"" + f(kBottom + 18) +
                   "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
                   "font-size=\"11\">" + chart.x_labels[g] + "</text>\n";
        }
    }
    for (std::size_t layer = 0; layer < chart.layer_names.size(); ++layer) {
        double y = kTop + 8 + static_cast<double>(layer) * 18;
        out += "<rect x=\"" + f(kRight + 12) + "\" y=\"" + f(y - 8) +
               "\" width=\"12\" height=\"12\" fill=\"" +
               palette()[layer % palette().size()] + "\"/>\n";
        out += "<text x=\"" + f(kRight + 30) + "\" y=\"" + f(y + 2) +
               "\" font-family=\"sans-serif\" font-size=\"11\">" +
               chart.layer_names[layer] + "</text>\n";
    }
    out += "</svg>\n";
    return out;
}

}  // namespace chainbench::svg
