#pragma once

#include <string>
#include <vector>

namespace rblab {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct LineChart {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> series;
    int width = 720;
    int height = 440;
};

/// Static SVG with axes, ticks, labels and a legend. Output depends only on
/// the chart contents.
std::string render_svg(const LineChart& chart);

}  // namespace rblab
