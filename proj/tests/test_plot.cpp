#include "plot.hpp"

#include <doctest.h>

using namespace rblab;

TEST_CASE("svg output is deterministic and labelled")
{
    LineChart chart;
    chart.title = "Regret";
    chart.x_label = "t";
    chart.y_label = "R(t)";
    chart.series = {{"rb-tsde", {0, 1, 2, 3}, {0, 1, 1.5, 1.8}}, {"qwi", {0, 1, 2, 3}, {0, 2, 4, 6}}};
    const auto a = render_svg(chart);
    const auto b = render_svg(chart);
    CHECK(a == b);
    CHECK(a.rfind("<svg", 0) == 0);
    CHECK(a.find("rb-tsde") != std::string::npos);
    CHECK(a.find("qwi") != std::string::npos);
    CHECK(a.find("R(t)") != std::string::npos);
    CHECK(a.find("</svg>") != std::string::npos);
}

TEST_CASE("degenerate series still render")
{
    LineChart chart;
    chart.series = {{"flat", {1, 1}, {0, 0}}};
    CHECK(render_svg(chart).find("</svg>") != std::string::npos);
    chart.series.clear();
    CHECK(render_svg(chart).find("</svg>") != std::string::npos);
}
