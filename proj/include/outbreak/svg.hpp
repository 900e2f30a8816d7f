#pragma once

// Minimal SVG line chart: a few columns of a table against its first column.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "outbreak/errors.hpp"
#include "outbreak/experiments.hpp"

namespace outbreak {

inline std::string short_fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

inline std::string svg_chart(const Table& t, const std::vector<std::string>& series, const std::string& title) {
    constexpr double W = 800, H = 480, L = 60, R = 140, T = 40, B = 50;
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2"};

    std::vector<std::size_t> idx;
    for (const auto& s : series) {
        auto it = std::find(t.columns.begin(), t.columns.end(), s);
        if (it != t.columns.end()) idx.push_back(static_cast<std::size_t>(it - t.columns.begin()));
    }
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& row : t.rows) {
        x0 = std::min(x0, row[0]);
        x1 = std::max(x1, row[0]);
        for (auto c : idx)
            if (std::isfinite(row[c])) {
                y0 = std::min(y0, row[c]);
                y1 = std::max(y1, row[c]);
            }
    }
    if (!(x1 > x0)) x1 = x0 + 1.0;
    if (!(y1 > y0)) y1 = y0 + 1.0;
    auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
       << title << "</text>\n";
    os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    os << "<text x=\"" << L << "\" y=\"" << H - B + 18 << "\" font-family=\"sans-serif\" font-size=\"12\">" << short_fmt(x0) << "</text>\n";
    os << "<text x=\"" << W - R << "\" y=\"" << H - B + 18 << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">"
       << short_fmt(x1) << "</text>\n";
    os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
       << t.columns[0] << "</text>\n";
    os << "<text x=\"" << L - 4 << "\" y=\"" << T + 10 << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << short_fmt(y1) << "</text>\n";
    os << "<text x=\"" << L - 4 << "\" y=\"" << H - B << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << short_fmt(y0) << "</text>\n";
    for (std::size_t s = 0; s < idx.size(); ++s) {
        const char* color = colors[s % std::size(colors)];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (const auto& row : t.rows)
            if (std::isfinite(row[idx[s]])) os << px(row[0]) << "," << py(row[idx[s]]) << " ";
        os << "\"/>\n";
        os << "<text x=\"" << W - R + 10 << "\" y=\"" << T + 16 * (s + 1) << "\" fill=\"" << color
           << "\" font-family=\"sans-serif\" font-size=\"12\">" << t.columns[idx[s]] << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

inline void write_svg_file(const std::string& path, const std::string& svg) {
    std::ofstream f(path);
    if (!f) throw config_error("cannot open output file '" + path + "'");
    f << svg;
}

} // namespace outbreak
