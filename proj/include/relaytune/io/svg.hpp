#pragma once

#include <cstdio>
#include <iomanip>
#include <sstream>

#include "relaytune/core.hpp"

namespace relaytune {

struct PlotSeries {
    std::string name;
    std::vector<double> y;
};

/// One panel: series over a shared time axis, optional shaded intervals behind them.
struct PlotPanel {
    std::string title;
    std::string y_label;
    std::vector<PlotSeries> series;
    std::vector<std::pair<double, double>> shaded;
};

struct PlotSpec {
    std::vector<double> t;
    std::vector<PlotPanel> panels;
    double width = 800.0;
    double panel_height = 240.0;
};

namespace detail {

inline std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string fmt_tick(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", std::abs(v) < 1e-12 ? 0.0 : v);
    return buf;
}

inline std::string escape_xml(const std::string& s)
{
    std::string o;
    for (char c : s) {
        switch (c) {
        case '<':
            o += "&lt;";
            break;
        case '>':
            o += "&gt;";
            break;
        case '&':
            o += "&amp;";
            break;
        case '"':
            o += "&quot;";
            break;
        default:
            o += c;
        }
    }
    return o;
}

inline const char* palette(std::size_t i)
{
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};
    return colors[i % 7];
}

} // namespace detail

/// Line plot as SVG text. Only finite samples are drawn; a series without any finite
/// sample is left out of the panel and its legend. Output depends only on the input.
inline std::string render_svg(const PlotSpec& spec)
{
    require(!spec.t.empty(), "plot: empty time axis");
    require(!spec.panels.empty(), "plot: nothing to draw");
    const double ml = 70, mr = 20, mt = 30, mb = 40;
    const double w = spec.width, ph = spec.panel_height;
    const double total_h = ph * static_cast<double>(spec.panels.size());
    const double t0 = spec.t.front(), t1 = std::max(spec.t.back(), spec.t.front() + 1e-9);

    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << detail::fmt(w) << "\" height=\""
      << detail::fmt(total_h) << "\" viewBox=\"0 0 " << detail::fmt(w) << ' ' << detail::fmt(total_h)
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    for (std::size_t p = 0; p < spec.panels.size(); ++p) {
        const PlotPanel& panel = spec.panels[p];
        const double top = ph * static_cast<double>(p) + mt;
        const double h = ph - mt - mb;
        const double pw = w - ml - mr;
        std::vector<const PlotSeries*> shown;
        double lo = kInf, hi = -kInf;
        for (const auto& sr : panel.series) {
            require(sr.y.size() == spec.t.size(), "plot: series '" + sr.name + "' length does not match the time axis");
            bool any = false;
            for (double v : sr.y)
                if (std::isfinite(v)) {
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                    any = true;
                }
            if (any)
                shown.push_back(&sr);
        }
        if (shown.empty()) {
            lo = -1.0;
            hi = 1.0;
        }
        if (hi - lo < 1e-12) {
            lo -= 0.5;
            hi += 0.5;
        }
        const double pad = 0.05 * (hi - lo);
        lo -= pad;
        hi += pad;
        auto x_of = [&](double t) { return ml + (t - t0) / (t1 - t0) * pw; };
        auto y_of = [&](double v) { return top + (hi - v) / (hi - lo) * h; };

        s << "<g>\n";
        s << "<text x=\"" << detail::fmt(ml) << "\" y=\"" << detail::fmt(top - 10) << "\" font-size=\"13\">"
          << detail::escape_xml(panel.title) << "</text>\n";
        for (const auto& [a, b] : panel.shaded) {
            const double xa = x_of(std::clamp(a, t0, t1)), xb = x_of(std::clamp(b, t0, t1));
            if (xb > xa)
                s << "<rect x=\"" << detail::fmt(xa) << "\" y=\"" << detail::fmt(top) << "\" width=\""
                  << detail::fmt(xb - xa) << "\" height=\"" << detail::fmt(h) << "\" fill=\"#cccccc\" opacity=\"0.6\"/>\n";
        }
        s << "<rect x=\"" << detail::fmt(ml) << "\" y=\"" << detail::fmt(top) << "\" width=\"" << detail::fmt(pw)
          << "\" height=\"" << detail::fmt(h) << "\" fill=\"none\" stroke=\"black\"/>\n";
        for (int k = 0; k <= 4; ++k) {
            const double v = lo + (hi - lo) * k / 4.0;
            const double tv = t0 + (t1 - t0) * k / 4.0;
            s << "<text x=\"" << detail::fmt(ml - 5) << "\" y=\"" << detail::fmt(y_of(v) + 4)
              << "\" text-anchor=\"end\">" << detail::fmt_tick(v) << "</text>\n";
            s << "<text x=\"" << detail::fmt(x_of(tv)) << "\" y=\"" << detail::fmt(top + h + 15)
              << "\" text-anchor=\"middle\">" << detail::fmt_tick(tv) << "</text>\n";
        }
        s << "<text x=\"15\" y=\"" << detail::fmt(top + h / 2) << "\" transform=\"rotate(-90 15 "
          << detail::fmt(top + h / 2) << ")\" text-anchor=\"middle\">" << detail::escape_xml(panel.y_label)
          << "</text>\n";
        s << "<text x=\"" << detail::fmt(ml + pw / 2) << "\" y=\"" << detail::fmt(top + h + 30)
          << "\" text-anchor=\"middle\">t (s)</text>\n";

        for (std::size_t k = 0; k < shown.size(); ++k) {
            const auto& sr = *shown[k];
            std::string path;
            bool pen = false;
            for (std::size_t i = 0; i < sr.y.size(); ++i) {
                if (!std::isfinite(sr.y[i])) {
                    pen = false;
                    continue;
                }
                path += (pen ? " L" : " M") + detail::fmt(x_of(spec.t[i])) + ',' + detail::fmt(y_of(sr.y[i]));
                pen = true;
            }
            s << "<path d=\"" << path.substr(1) << "\" fill=\"none\" stroke=\"" << detail::palette(k)
              << "\" stroke-width=\"1.2\"/>\n";
            const double ly = top + 12 + 14 * static_cast<double>(k);
            s << "<line x1=\"" << detail::fmt(ml + pw - 120) << "\" y1=\"" << detail::fmt(ly - 4) << "\" x2=\""
              << detail::fmt(ml + pw - 100) << "\" y2=\"" << detail::fmt(ly - 4) << "\" stroke=\""
              << detail::palette(k) << "\" stroke-width=\"2\"/>\n";
            s << "<text x=\"" << detail::fmt(ml + pw - 95) << "\" y=\"" << detail::fmt(ly) << "\">"
              << detail::escape_xml(sr.name) << "</text>\n";
        }
        s << "</g>\n";
    }
    s << "</svg>\n";
    return s.str();
}

} // namespace relaytune
