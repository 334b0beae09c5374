#pragma once

// Minimal SVG line charts: one series per agent, episode on the x axis.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "tsc/sim.hpp"

namespace tsc {

struct PlotSeries {
    std::string label;
    std::vector<double> values;  // one point per episode, episodes numbered from 1
};

inline void write_svg_chart(const std::string& path, const std::string& title,
                            const std::string& y_label, const std::vector<PlotSeries>& series) {
    if (series.empty() || series.front().values.empty())
        throw SimError("refusing to plot empty metrics");
    static const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                     "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
    const double width = 760, height = 480;
    const double ml = 64, mr = 150, mt = 40, mb = 48;
    const double pw = width - ml - mr, ph = height - mt - mb;

    std::size_t n = 0;
    double ymax = 0.0;
    for (const auto& s : series) {
        n = std::max(n, s.values.size());
        for (double v : s.values) ymax = std::max(ymax, v);
    }
    if (ymax <= 0.0) ymax = 1.0;
    ymax *= 1.05;

    auto px = [&](double ep) { return ml + (n > 1 ? (ep - 1.0) / (static_cast<double>(n) - 1.0) : 0.5) * pw; };
    auto py = [&](double v) { return mt + ph - (v / ymax) * ph; };

    std::ofstream os(path);
    if (!os) throw SimError("cannot write plot: " + path);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << ml << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\">" << title
       << "</text>\n";

    // axes
    os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + ph
       << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw << "\" y2=\"" << mt + ph
       << "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 5; ++k) {
        double v = ymax * k / 5.0;
        double y = py(v);
        os << "<line x1=\"" << ml - 4 << "\" y1=\"" << y << "\" x2=\"" << ml << "\" y2=\"" << y
           << "\" stroke=\"black\"/>\n";
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", v);
        os << "<text x=\"" << ml - 8 << "\" y=\"" << y + 4
           << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << buf << "</text>\n";
    }
    std::size_t xtick = n > 12 ? (n + 11) / 12 : 1;
    for (std::size_t ep = 1; ep <= n; ep += xtick) {
        double x = px(static_cast<double>(ep));
        os << "<line x1=\"" << x << "\" y1=\"" << mt + ph << "\" x2=\"" << x << "\" y2=\"" << mt + ph + 4
           << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << x << "\" y=\"" << mt + ph + 18
           << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << ep << "</text>\n";
    }
    os << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 10
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">episode</text>\n";
    os << "<text x=\"16\" y=\"" << mt + ph / 2
       << "\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 16 " << mt + ph / 2
       << ")\" text-anchor=\"middle\">" << y_label << "</text>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = kPalette[s % 8];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < series[s].values.size(); ++i) {
            if (i) os << ' ';
            os << px(static_cast<double>(i + 1)) << ',' << py(series[s].values[i]);
        }
        os << "\"/>\n";
        double ly = mt + 16 + 18 * static_cast<double>(s);
        os << "<line x1=\"" << ml + pw + 12 << "\" y1=\"" << ly << "\" x2=\"" << ml + pw + 36 << "\" y2=\""
           << ly << "\" stroke=\"" << color << "\" stroke-width=\"1.5\"/>\n";
        os << "<text x=\"" << ml + pw + 42 << "\" y=\"" << ly + 4
           << "\" font-family=\"sans-serif\" font-size=\"12\">" << series[s].label << "</text>\n";
    }
    os << "</svg>\n";
    if (!os) throw SimError("plot write failed: " + path);
}

}  // namespace tsc
