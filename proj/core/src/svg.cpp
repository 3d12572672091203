#include "mechanic/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace mechanic {

namespace {

std::string escape_xml(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        if (c == '&') out += "&amp;";
        else if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else out += c;
    }
    return out;
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    void add(double v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    bool empty() const { return !(lo <= hi); }
    void pad() {
        if (lo == hi) {
            lo -= 1.0;
            hi += 1.0;
        }
    }
};

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

} // namespace

std::string render_line_plot(const std::vector<PlotSeries>& series, const PlotOptionsSvg& options) {
    for (const auto& s : series)
        if (s.x.size() != s.y.size())
            throw std::invalid_argument("render_line_plot: series '" + s.name +
                                        "' has mismatched x/y lengths");

    const auto usable = [&](double x, double y) {
        if (!std::isfinite(x) || !std::isfinite(y))
            return false;
        return !options.log_y || y > 0.0;
    };

    Range xr, yr;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i)
            if (usable(s.x[i], s.y[i])) {
                xr.add(s.x[i]);
                yr.add(options.log_y ? std::log10(s.y[i]) : s.y[i]);
            }
    if (xr.empty() || yr.empty())
        throw std::invalid_argument("render_line_plot: no plottable points");
    xr.pad();
    yr.pad();

    const double w = options.width, h = options.height;
    const double ml = 70, mr = 20, mt = options.title.empty() ? 20 : 44, mb = 46;
    const double pw = w - ml - mr, ph = h - mt - mb;
    const auto px = [&](double x) { return ml + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
    const auto py = [&](double y) { return mt + ph - (y - yr.lo) / (yr.hi - yr.lo) * ph; };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << options.width
        << "\" height=\"" << options.height << "\" viewBox=\"0 0 " << options.width << " "
        << options.height << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
    if (!options.title.empty())
        out << "<text x=\"" << num(w / 2) << "\" y=\"24\" text-anchor=\"middle\" "
               "font-family=\"sans-serif\" font-size=\"16\">"
            << escape_xml(options.title) << "</text>\n";

    // Grid and tick labels, 5 divisions per axis (log axis labels show 10^v).
    const int ticks = 5;
    for (int i = 0; i <= ticks; ++i) {
        const double fx = xr.lo + (xr.hi - xr.lo) * i / ticks;
        const double fy = yr.lo + (yr.hi - yr.lo) * i / ticks;
        const double gx = px(fx), gy = py(fy);
        out << "<line x1=\"" << num(gx) << "\" y1=\"" << num(mt) << "\" x2=\"" << num(gx)
            << "\" y2=\"" << num(mt + ph) << "\" stroke=\"#e0e0e0\" stroke-width=\"1\"/>\n";
        out << "<line x1=\"" << num(ml) << "\" y1=\"" << num(gy) << "\" x2=\"" << num(ml + pw)
            << "\" y2=\"" << num(gy) << "\" stroke=\"#e0e0e0\" stroke-width=\"1\"/>\n";
        out << "<text x=\"" << num(gx) << "\" y=\"" << num(mt + ph + 18)
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << num(fx)
            << "</text>\n";
        out << "<text x=\"" << num(ml - 6) << "\" y=\"" << num(gy + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
            << (options.log_y ? "1e" + num(fy) : num(fy)) << "</text>\n";
    }

    // Axes.
    out << "<line x1=\"" << num(ml) << "\" y1=\"" << num(mt) << "\" x2=\"" << num(ml)
        << "\" y2=\"" << num(mt + ph) << "\" stroke=\"#000\" stroke-width=\"1.2\"/>\n";
    out << "<line x1=\"" << num(ml) << "\" y1=\"" << num(mt + ph) << "\" x2=\"" << num(ml + pw)
        << "\" y2=\"" << num(mt + ph) << "\" stroke=\"#000\" stroke-width=\"1.2\"/>\n";
    if (!options.x_label.empty())
        out << "<text x=\"" << num(ml + pw / 2) << "\" y=\"" << num(h - 8)
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
            << escape_xml(options.x_label) << "</text>\n";
    if (!options.y_label.empty())
        out << "<text x=\"14\" y=\"" << num(mt + ph / 2)
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
               "transform=\"rotate(-90 14 "
            << num(mt + ph / 2) << ")\">" << escape_xml(options.y_label) << "</text>\n";

    // One polyline per series; gaps where points were dropped start a new
    // polyline so holes stay visible.
    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const char* color = kPalette[si % (sizeof kPalette / sizeof kPalette[0])];
        std::string points;
        std::size_t emitted = 0;
        const auto flush = [&]() {
            if (points.empty())
                return;
            if (emitted == 1) {
                // Lone point: polyline would be invisible.
                const std::size_t sp = points.find(',');
                out << "<circle cx=\"" << points.substr(0, sp) << "\" cy=\""
                    << points.substr(sp + 1) << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
            } else {
                out << "<polyline fill=\"none\" stroke=\"" << color
                    << "\" stroke-width=\"1.6\" points=\"" << points << "\"/>\n";
            }
            points.clear();
            emitted = 0;
        };
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!usable(s.x[i], s.y[i])) {
                flush();
                continue;
            }
            const double yv = options.log_y ? std::log10(s.y[i]) : s.y[i];
            if (!points.empty())
                points += ' ';
            points += num(px(s.x[i])) + "," + num(py(yv));
            ++emitted;
        }
        flush();

        // Legend entry.
        const double ly = mt + 16 + 18 * static_cast<double>(si);
        out << "<line x1=\"" << num(ml + pw - 150) << "\" y1=\"" << num(ly) << "\" x2=\""
            << num(ml + pw - 126) << "\" y2=\"" << num(ly) << "\" stroke=\"" << color
            << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << num(ml + pw - 120) << "\" y=\"" << num(ly + 4)
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << escape_xml(s.name)
            << "</text>\n";
    }

    out << "</svg>\n";
    return out.str();
}

} // namespace mechanic
