#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "caudal/errors.hpp"

namespace caudal::svg {

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;  // (x, y)
};

namespace detail {

inline std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

}  // namespace detail

/// Writes a self-contained SVG line chart. Output is deterministic for
/// identical input.
inline void write_line_chart(const std::string& path, const std::string& title,
                             const std::string& x_label,
                             const std::string& y_label,
                             std::span<const Series> series, int width = 960,
                             int height = 540) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open " + path + " for writing");

  double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
  double y_min = x_min, y_max = -x_min;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
      y_min = std::min(y_min, y);
      y_max = std::max(y_max, y);
    }
  if (!(x_min <= x_max)) {  // nothing to draw
    x_min = 0;
    x_max = 1;
    y_min = 0;
    y_max = 1;
  }
  if (x_max == x_min) x_max = x_min + 1.0;
  if (y_max == y_min) {
    y_max += 0.5;
    y_min -= 0.5;
  }
  const double y_pad = 0.05 * (y_max - y_min);
  y_min -= y_pad;
  y_max += y_pad;

  const double ml = 70, mr = 20, mt = 40, mb = 50;
  const double pw = width - ml - mr, ph = height - mt - mb;
  auto sx = [&](double x) { return ml + pw * (x - x_min) / (x_max - x_min); };
  auto sy = [&](double y) {
    return mt + ph * (1.0 - (y - y_min) / (y_max - y_min));
  };

  static const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                   "#ff7f0e", "#9467bd", "#8c564b"};

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << ' '
      << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"16\">" << title
      << "</text>\n";

  const int n_ticks = 6;
  for (int i = 0; i < n_ticks; ++i) {
    const double fx = x_min + (x_max - x_min) * i / (n_ticks - 1);
    const double fy = y_min + (y_max - y_min) * i / (n_ticks - 1);
    const double gx = sx(fx), gy = sy(fy);
    out << "<line x1=\"" << detail::px(gx) << "\" y1=\"" << detail::px(mt)
        << "\" x2=\"" << detail::px(gx) << "\" y2=\"" << detail::px(mt + ph)
        << "\" stroke=\"#dddddd\"/>\n";
    out << "<line x1=\"" << detail::px(ml) << "\" y1=\"" << detail::px(gy)
        << "\" x2=\"" << detail::px(ml + pw) << "\" y2=\"" << detail::px(gy)
        << "\" stroke=\"#dddddd\"/>\n";
    out << "<text x=\"" << detail::px(gx) << "\" y=\""
        << detail::px(mt + ph + 18)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << detail::tick_label(fx) << "</text>\n";
    out << "<text x=\"" << detail::px(ml - 8) << "\" y=\""
        << detail::px(gy + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << detail::tick_label(fy) << "</text>\n";
  }
  out << "<rect x=\"" << detail::px(ml) << "\" y=\"" << detail::px(mt)
      << "\" width=\"" << detail::px(pw) << "\" height=\"" << detail::px(ph)
      << "\" fill=\"none\" stroke=\"#333333\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"" << height - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\">"
      << x_label << "</text>\n";
  out << "<text x=\"18\" y=\"" << mt + ph / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\" transform=\"rotate(-90 18 "
      << mt + ph / 2 << ")\">" << y_label << "</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = kPalette[i % std::size(kPalette)];
    out << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& [x, y] : series[i].points)
      out << detail::px(sx(x)) << ',' << detail::px(sy(y)) << ' ';
    out << "\"/>\n";
    const double lx = ml + 12, ly = mt + 16 + 18.0 * static_cast<double>(i);
    out << "<line x1=\"" << detail::px(lx) << "\" y1=\"" << detail::px(ly - 4)
        << "\" x2=\"" << detail::px(lx + 22) << "\" y2=\""
        << detail::px(ly - 4) << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << detail::px(lx + 28) << "\" y=\"" << detail::px(ly)
        << "\" font-family=\"sans-serif\" font-size=\"12\">"
        << series[i].label << "</text>\n";
  }
  out << "</svg>\n";
  if (!out) throw io_error("write failed on " + path);
}

}  // namespace caudal::svg
