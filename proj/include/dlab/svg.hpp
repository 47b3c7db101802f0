#pragma once

#include "dlab/io.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

namespace dlab {

// Just enough SVG to eyeball a run: line and scatter plots with axes, ticks
// and a legend. No external plotting dependency.

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

namespace detail {

inline const char* series_color(size_t i) {
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                    "#9467bd", "#ff7f0e", "#8c564b"};
    return palette[i % (sizeof(palette) / sizeof(palette[0]))];
}

inline std::string svg_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

inline std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

inline void plot_impl(const std::filesystem::path& path, const std::string& title,
                      const std::string& xlabel, const std::string& ylabel,
                      const std::vector<Series>& series, bool lines) {
    const double W = 760, H = 500;
    const double ml = 78, mr = 24, mt = 46, mb = 56;  // margins
    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    bool any = false;
    for (const auto& s : series)
        for (size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            if (!any) {
                xmin = xmax = s.x[i];
                ymin = ymax = s.y[i];
                any = true;
            }
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    if (xmax - xmin < 1e-12) {
        xmin -= 0.5;
        xmax += 0.5;
    }
    if (ymax - ymin < 1e-12) {
        ymin -= 0.5;
        ymax += 0.5;
    }
    const double ypad = 0.04 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;
    auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (W - ml - mr); };
    auto py = [&](double y) { return H - mb - (y - ymin) / (ymax - ymin) * (H - mt - mb); };

    std::ofstream f = open_out(path);
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    f << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    f << "<text x=\"" << W / 2 << "\" y=\"26\" text-anchor=\"middle\" font-family=\"sans-serif\""
      << " font-size=\"16\">" << title << "</text>\n";

    // axes box + ticks
    f << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << W - ml - mr
      << "\" height=\"" << H - mt - mb
      << "\" fill=\"none\" stroke=\"#444\" stroke-width=\"1\"/>\n";
    const int nticks = 5;
    for (int i = 0; i <= nticks; ++i) {
        const double tx = xmin + (xmax - xmin) * i / nticks;
        const double ty = ymin + (ymax - ymin) * i / nticks;
        f << "<line x1=\"" << svg_num(px(tx)) << "\" y1=\"" << H - mb << "\" x2=\""
          << svg_num(px(tx)) << "\" y2=\"" << H - mb + 5
          << "\" stroke=\"#444\" stroke-width=\"1\"/>\n";
        f << "<text x=\"" << svg_num(px(tx)) << "\" y=\"" << H - mb + 20
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
          << tick_label(tx) << "</text>\n";
        f << "<line x1=\"" << ml - 5 << "\" y1=\"" << svg_num(py(ty)) << "\" x2=\"" << ml
          << "\" y2=\"" << svg_num(py(ty)) << "\" stroke=\"#444\" stroke-width=\"1\"/>\n";
        f << "<text x=\"" << ml - 9 << "\" y=\"" << svg_num(py(ty) + 4)
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
          << tick_label(ty) << "</text>\n";
        f << "<line x1=\"" << ml << "\" y1=\"" << svg_num(py(ty)) << "\" x2=\"" << W - mr
          << "\" y2=\"" << svg_num(py(ty))
          << "\" stroke=\"#eee\" stroke-width=\"1\"/>\n";
    }
    f << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 14
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << xlabel
      << "</text>\n";
    f << "<text x=\"20\" y=\"" << (mt + H - mb) / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\""
      << " transform=\"rotate(-90 20 " << (mt + H - mb) / 2 << ")\">" << ylabel
      << "</text>\n";

    for (size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const char* col = series_color(si);
        if (lines) {
            f << "<polyline fill=\"none\" stroke=\"" << col
              << "\" stroke-width=\"1.6\" points=\"";
            for (size_t i = 0; i < s.x.size(); ++i) {
                if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
                f << svg_num(px(s.x[i])) << ',' << svg_num(py(s.y[i])) << ' ';
            }
            f << "\"/>\n";
        } else {
            for (size_t i = 0; i < s.x.size(); ++i) {
                if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
                f << "<circle cx=\"" << svg_num(px(s.x[i])) << "\" cy=\""
                  << svg_num(py(s.y[i])) << "\" r=\"2.4\" fill=\"" << col
                  << "\" fill-opacity=\"0.65\"/>\n";
            }
        }
        // legend entry
        const double ly = mt + 16 + 16 * static_cast<double>(si);
        f << "<rect x=\"" << W - mr - 150 << "\" y=\"" << ly - 9
          << "\" width=\"12\" height=\"4\" fill=\"" << col << "\"/>\n";
        f << "<text x=\"" << W - mr - 132 << "\" y=\"" << ly - 3
          << "\" font-family=\"sans-serif\" font-size=\"11\">" << s.name << "</text>\n";
    }
    f << "</svg>\n";
}

}  // namespace detail

inline void write_line_plot(const std::filesystem::path& path, const std::string& title,
                            const std::string& xlabel, const std::string& ylabel,
                            const std::vector<Series>& series) {
    detail::plot_impl(path, title, xlabel, ylabel, series, true);
}

inline void write_scatter_plot(const std::filesystem::path& path, const std::string& title,
                               const std::string& xlabel, const std::string& ylabel,
                               const std::vector<Series>& series) {
    detail::plot_impl(path, title, xlabel, ylabel, series, false);
}

}  // namespace dlab
