#pragma once

// Minimal SVG emitters for the plot subcommand.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

namespace mwfock::svg {

inline std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

/// Viridis-like ramp through five anchors, t in [0, 1].
inline std::string color(double t)
{
    static const double anchors[5][3] = {
        {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}};
    t = std::clamp(std::isfinite(t) ? t : 0.0, 0.0, 1.0) * 4.0;
    const int k = std::min(3, static_cast<int>(t));
    const double f = t - k;
    char buf[16];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x",
                  static_cast<int>(std::lround(anchors[k][0] + f * (anchors[k + 1][0] - anchors[k][0]))),
                  static_cast<int>(std::lround(anchors[k][1] + f * (anchors[k + 1][1] - anchors[k][1]))),
                  static_cast<int>(std::lround(anchors[k][2] + f * (anchors[k + 1][2] - anchors[k][2]))));
    return buf;
}

struct Cell {
    double x, y, value;
};

/// Square cells of side `side` centred at (x, y), coloured by value.
inline void heatmap(std::ostream& os, const std::vector<Cell>& cells, double side, const std::string& title)
{
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300, v0 = 1e300, v1 = -1e300;
    for (const auto& c : cells) {
        x0 = std::min(x0, c.x - side / 2);
        x1 = std::max(x1, c.x + side / 2);
        y0 = std::min(y0, c.y - side / 2);
        y1 = std::max(y1, c.y + side / 2);
        if (std::isfinite(c.value)) {
            v0 = std::min(v0, c.value);
            v1 = std::max(v1, c.value);
        }
    }
    if (v0 > v1)
        v0 = v1 = 0.0;
    const double plot = 400.0, margin = 50.0;
    const double scale = plot / std::max(x1 - x0, y1 - y0);
    const double width = 2 * margin + plot + 80.0, height = 2 * margin + plot;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(height)
       << "\">\n";
    os << "<text x=\"" << num(margin) << "\" y=\"30\" font-family=\"sans-serif\" font-size=\"14\">" << title
       << "</text>\n";
    for (const auto& c : cells) {
        const double t = v1 > v0 ? (c.value - v0) / (v1 - v0) : 0.5;
        os << "<rect x=\"" << num(margin + (c.x - side / 2 - x0) * scale) << "\" y=\""
           << num(margin + (y1 - c.y - side / 2) * scale) << "\" width=\"" << num(side * scale) << "\" height=\""
           << num(side * scale) << "\" fill=\"" << color(t) << "\"><title>" << num(c.value)
           << "</title></rect>\n";
    }
    const double lx = margin + plot + 20.0;
    for (int k = 0; k < 20; ++k)
        os << "<rect x=\"" << num(lx) << "\" y=\"" << num(margin + plot * (19 - k) / 20.0) << "\" width=\"15\" height=\""
           << num(plot / 20.0) << "\" fill=\"" << color(k / 19.0) << "\"/>\n";
    os << "<text x=\"" << num(lx + 20) << "\" y=\"" << num(margin + 10) << "\" font-size=\"11\">" << num(v1)
       << "</text>\n";
    os << "<text x=\"" << num(lx + 20) << "\" y=\"" << num(margin + plot) << "\" font-size=\"11\">" << num(v0)
       << "</text>\n";
    os << "</svg>\n";
}

struct Series {
    std::string name;
    std::vector<double> x, y;
};

/// Polylines of y against x with point markers.
inline void line_chart(std::ostream& os, const std::vector<Series>& series, const std::string& xlabel,
                       const std::string& title)
{
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i)
            if (std::isfinite(s.y[i])) {
                x0 = std::min(x0, s.x[i]);
                x1 = std::max(x1, s.x[i]);
                y0 = std::min(y0, s.y[i]);
                y1 = std::max(y1, s.y[i]);
            }
    if (x0 > x1)
        x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 == x0)
        x0 -= 0.5, x1 += 0.5;
    if (y1 == y0)
        y0 -= 0.5, y1 += 0.5;
    const double w = 500, h = 320, m = 60;
    auto px = [&](double x) { return m + (x - x0) / (x1 - x0) * w; };
    auto py = [&](double y) { return m + (y1 - y) / (y1 - y0) * h; };
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(w + 2 * m + 140) << "\" height=\""
       << num(h + 2 * m) << "\">\n";
    os << "<text x=\"" << num(m) << "\" y=\"30\" font-family=\"sans-serif\" font-size=\"14\">" << title
       << "</text>\n";
    os << "<rect x=\"" << num(m) << "\" y=\"" << num(m) << "\" width=\"" << num(w) << "\" height=\"" << num(h)
       << "\" fill=\"none\" stroke=\"#888\"/>\n";
    os << "<text x=\"" << num(m + w / 2) << "\" y=\"" << num(h + 2 * m - 15) << "\" font-size=\"12\">" << xlabel
       << "</text>\n";
    os << "<text x=\"5\" y=\"" << num(m + 5) << "\" font-size=\"11\">" << num(y1) << "</text>\n";
    os << "<text x=\"5\" y=\"" << num(m + h) << "\" font-size=\"11\">" << num(y0) << "</text>\n";
    os << "<text x=\"" << num(m) << "\" y=\"" << num(m + h + 15) << "\" font-size=\"11\">" << num(x0) << "</text>\n";
    os << "<text x=\"" << num(m + w - 30) << "\" y=\"" << num(m + h + 15) << "\" font-size=\"11\">" << num(x1)
       << "</text>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const std::string col = color(series.size() == 1 ? 0.2 : static_cast<double>(k) / (series.size() - 1) * 0.85);
        os << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i)
            if (std::isfinite(s.y[i]))
                os << num(px(s.x[i])) << "," << num(py(s.y[i])) << " ";
        os << "\"/>\n";
        for (std::size_t i = 0; i < s.x.size(); ++i)
            if (std::isfinite(s.y[i]))
                os << "<circle cx=\"" << num(px(s.x[i])) << "\" cy=\"" << num(py(s.y[i])) << "\" r=\"3\" fill=\""
                   << col << "\"/>\n";
        os << "<text x=\"" << num(m + w + 10) << "\" y=\"" << num(m + 15 + 18 * k) << "\" font-size=\"12\" fill=\""
           << col << "\">" << s.name << "</text>\n";
    }
    os << "</svg>\n";
}

} // namespace mwfock::svg
