#include "plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace rblab {
namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

std::string fmt(const char* f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, v);
    return buf;
}

std::string escape(const std::string& s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

// Round step to 1, 2 or 5 times a power of ten.
double nice_step(double span, int target)
{
    if (!(span > 0.0))
        return 1.0;
    const double raw = span / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double f = raw / mag;
    return (f < 1.5 ? 1.0 : f < 3.5 ? 2.0 : f < 7.5 ? 5.0 : 10.0) * mag;
}

}  // namespace

std::string render_svg(const LineChart& chart)
{
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
    for (const auto& s : chart.series)
        for (std::size_t k = 0; k < std::min(s.x.size(), s.y.size()); ++k) {
            if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k]))
                continue;
            xmin = std::min(xmin, s.x[k]);
            xmax = std::max(xmax, s.x[k]);
            ymin = std::min(ymin, s.y[k]);
            ymax = std::max(ymax, s.y[k]);
        }
    if (!std::isfinite(xmin)) {
        xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
    }
    if (xmax == xmin)
        xmax = xmin + 1.0;
    if (ymax == ymin)
        ymax = ymin + 1.0;
    const double ystep = nice_step(ymax - ymin, 6);
    ymin = std::floor(ymin / ystep) * ystep;
    ymax = std::ceil(ymax / ystep) * ystep;
    const double xstep = nice_step(xmax - xmin, 6);

    const double left = 80, right = 170, top = 40, bottom = 60;
    const double pw = chart.width - left - right, ph = chart.height - top - bottom;
    auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double y) { return top + (ymax - y) / (ymax - ymin) * ph; };

    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(chart.width) + "\" height=\"" +
           std::to_string(chart.height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out += "<text x=\"" + fmt("%.1f", left + pw / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" +
           escape(chart.title) + "</text>\n";

    for (double y = ymin; y <= ymax + 0.5 * ystep; y += ystep) {
        const std::string yy = fmt("%.1f", py(y));
        out += "<line x1=\"" + fmt("%.1f", left) + "\" y1=\"" + yy + "\" x2=\"" + fmt("%.1f", left + pw) + "\" y2=\"" +
               yy + "\" stroke=\"#e0e0e0\"/>\n";
        out += "<text x=\"" + fmt("%.1f", left - 6) + "\" y=\"" + yy + "\" text-anchor=\"end\" dy=\"4\">" +
               fmt("%g", std::abs(y) < 1e-12 * ystep ? 0.0 : y) + "</text>\n";
    }
    for (double x = std::ceil(xmin / xstep) * xstep; x <= xmax + 1e-9 * xstep; x += xstep) {
        const std::string xx = fmt("%.1f", px(x));
        out += "<line x1=\"" + xx + "\" y1=\"" + fmt("%.1f", top + ph) + "\" x2=\"" + xx + "\" y2=\"" +
               fmt("%.1f", top + ph + 5) + "\" stroke=\"black\"/>\n";
        out += "<text x=\"" + xx + "\" y=\"" + fmt("%.1f", top + ph + 18) + "\" text-anchor=\"middle\">" +
               fmt("%g", x) + "</text>\n";
    }
    out += "<rect x=\"" + fmt("%.1f", left) + "\" y=\"" + fmt("%.1f", top) + "\" width=\"" + fmt("%.1f", pw) +
           "\" height=\"" + fmt("%.1f", ph) + "\" fill=\"none\" stroke=\"black\"/>\n";
    out += "<text x=\"" + fmt("%.1f", left + pw / 2) + "\" y=\"" + fmt("%.1f", top + ph + 42.0) +
           "\" text-anchor=\"middle\">" + escape(chart.x_label) + "</text>\n";
    out += "<text transform=\"translate(20," + fmt("%.1f", top + ph / 2) +
           ") rotate(-90)\" text-anchor=\"middle\">" + escape(chart.y_label) + "</text>\n";

    for (std::size_t k = 0; k < chart.series.size(); ++k) {
        const auto& s = chart.series[k];
        const char* colour = kPalette[k % (sizeof(kPalette) / sizeof(kPalette[0]))];
        std::string pts;
        for (std::size_t j = 0; j < std::min(s.x.size(), s.y.size()); ++j) {
            if (!std::isfinite(s.x[j]) || !std::isfinite(s.y[j]))
                continue;
            if (!pts.empty())
                pts += ' ';
            pts += fmt("%.2f", px(s.x[j])) + "," + fmt("%.2f", py(s.y[j]));
        }
        out += "<polyline fill=\"none\" stroke=\"" + std::string(colour) + "\" stroke-width=\"1.5\" points=\"" + pts +
               "\"/>\n";
        const double ly = top + 14 + 18 * static_cast<double>(k);
        out += "<line x1=\"" + fmt("%.1f", left + pw + 12) + "\" y1=\"" + fmt("%.1f", ly) + "\" x2=\"" +
               fmt("%.1f", left + pw + 32) + "\" y2=\"" + fmt("%.1f", ly) + "\" stroke=\"" + colour +
               "\" stroke-width=\"2\"/>\n";
        out += "<text x=\"" + fmt("%.1f", left + pw + 38) + "\" y=\"" + fmt("%.1f", ly) + "\" dy=\"4\">" +
               escape(s.label) + "</text>\n";
    }
    out += "</svg>\n";
    return out;
}

}  // namespace rblab
