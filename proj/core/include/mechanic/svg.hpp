#pragma once

#include <string>
#include <vector>

namespace mechanic {

struct PlotSeries {
    std::string name;
    std::vector<double> x;
    std::vector<double> y; // same length as x
};

struct PlotOptionsSvg {
    std::string title;
    std::string x_label = "step";
    std::string y_label;
    bool log_y = false; // log10 axis; nonpositive points are dropped
    int width = 860;
    int height = 520;
};

// Standalone SVG line chart, one polyline per series, no external assets.
// Non-finite points (and nonpositive ones on a log axis) are skipped;
// throws std::invalid_argument when nothing plottable remains.
std::string render_line_plot(const std::vector<PlotSeries>& series, const PlotOptionsSvg& options);

} // namespace mechanic
