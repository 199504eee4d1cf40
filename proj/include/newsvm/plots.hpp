#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "newsvm/common.hpp"

namespace newsvm::plots {

// Minimal static SVG output for report figures.

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

namespace detail {
inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}
inline const char* color(std::size_t k) {
  static const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  return kPalette[k % 6];
}
}  // namespace detail

inline std::string line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                              const std::vector<Series>& series) {
  constexpr double W = 640, H = 400, L = 60, R = 150, T = 40, B = 50;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      xmin = std::min(xmin, s.x[i]), xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]), ymax = std::max(ymax, s.y[i]);
    }
  if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  auto px = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - ymin) / (ymax - ymin) * (H - T - B); };

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\">\n";
  svg += "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
  svg += "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" + title + "</text>\n";
  svg += "<line x1=\"" + detail::num(L) + "\" y1=\"" + detail::num(H - B) + "\" x2=\"" + detail::num(W - R) +
         "\" y2=\"" + detail::num(H - B) + "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + detail::num(L) + "\" y1=\"" + detail::num(T) + "\" x2=\"" + detail::num(L) + "\" y2=\"" +
         detail::num(H - B) + "\" stroke=\"black\"/>\n";
  svg += "<text x=\"" + detail::num((L + W - R) / 2) + "\" y=\"" + detail::num(H - 12) +
         "\" text-anchor=\"middle\" font-size=\"12\">" + x_label + "</text>\n";
  svg += "<text x=\"14\" y=\"" + detail::num((T + H - B) / 2) + "\" font-size=\"12\" transform=\"rotate(-90 14 " +
         detail::num((T + H - B) / 2) + ")\" text-anchor=\"middle\">" + y_label + "</text>\n";
  for (int k = 0; k <= 4; ++k) {
    const double yv = ymin + (ymax - ymin) * k / 4.0, xv = xmin + (xmax - xmin) * k / 4.0;
    svg += "<text x=\"" + detail::num(L - 4) + "\" y=\"" + detail::num(py(yv) + 4) +
           "\" text-anchor=\"end\" font-size=\"10\">" + detail::num(yv) + "</text>\n";
    svg += "<text x=\"" + detail::num(px(xv)) + "\" y=\"" + detail::num(H - B + 14) +
           "\" text-anchor=\"middle\" font-size=\"10\">" + detail::num(xv) + "</text>\n";
  }
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    std::string pts;
    for (std::size_t i = 0; i < s.x.size(); ++i)
      if (std::isfinite(s.y[i])) pts += detail::num(px(s.x[i])) + "," + detail::num(py(s.y[i])) + " ";
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(detail::color(k)) + "\" stroke-width=\"2\" points=\"" +
           pts + "\"/>\n";
    svg += "<text x=\"" + detail::num(W - R + 10) + "\" y=\"" + detail::num(T + 16 * (k + 1)) + "\" fill=\"" +
           detail::color(k) + "\" font-size=\"12\">" + s.label + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

// Cell (i, j) of `values` is drawn at column i (x axis), row j (y axis).
inline std::string heatmap(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<double>& xs, const std::vector<double>& ys,
                           const std::vector<std::vector<double>>& values) {
  constexpr double L = 60, T = 40, W = 520, H = 360;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& col : values)
    for (double v : col)
      if (std::isfinite(v)) lo = std::min(lo, v), hi = std::max(hi, v);
  if (!std::isfinite(lo)) lo = 0, hi = 1;
  if (hi == lo) hi = lo + 1;
  const double cw = W / std::max<std::size_t>(1, xs.size()), ch = H / std::max<std::size_t>(1, ys.size());
  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"460\">\n";
  svg += "<rect width=\"640\" height=\"460\" fill=\"white\"/>\n";
  svg += "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" + title + "</text>\n";
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < ys.size(); ++j) {
      const double v = values[i][j];
      const double u = std::isfinite(v) ? (v - lo) / (hi - lo) : 0.0;
      const int r = static_cast<int>(255 * u), b = static_cast<int>(255 * (1 - u));
      char fill[16];
      std::snprintf(fill, sizeof fill, "#%02x40%02x", r, b);
      svg += "<rect x=\"" + detail::num(L + i * cw) + "\" y=\"" + detail::num(T + H - (j + 1) * ch) + "\" width=\"" +
             detail::num(cw) + "\" height=\"" + detail::num(ch) + "\" fill=\"" + fill + "\"/>\n";
    }
  svg += "<text x=\"" + detail::num(L + W / 2) + "\" y=\"" + detail::num(T + H + 36) +
         "\" text-anchor=\"middle\" font-size=\"12\">" + x_label + " [" + detail::num(xs.empty() ? 0 : xs.front()) +
         ", " + detail::num(xs.empty() ? 0 : xs.back()) + "]</text>\n";
  svg += "<text x=\"14\" y=\"" + detail::num(T + H / 2) + "\" font-size=\"12\" transform=\"rotate(-90 14 " +
         detail::num(T + H / 2) + ")\" text-anchor=\"middle\">" + y_label + " [" +
         detail::num(ys.empty() ? 0 : ys.front()) + ", " + detail::num(ys.empty() ? 0 : ys.back()) + "]</text>\n";
  svg += "<text x=\"" + detail::num(L + W + 8) + "\" y=\"" + detail::num(T + 12) + "\" font-size=\"10\">max " +
         detail::num(hi) + "</text>\n";
  svg += "<text x=\"" + detail::num(L + W + 8) + "\" y=\"" + detail::num(T + H) + "\" font-size=\"10\">min " +
         detail::num(lo) + "</text>\n";
  svg += "</svg>\n";
  return svg;
}

inline std::string bar_chart(const std::string& title, const std::vector<std::string>& labels,
                             const std::vector<double>& values) {
  constexpr double L = 60, T = 40, W = 560, H = 320;
  double hi = 0, lo = 0;
  for (double v : values) hi = std::max(hi, v), lo = std::min(lo, v);
  if (hi == lo) hi = lo + 1;
  const double bw = W / std::max<std::size_t>(1, values.size());
  auto py = [&](double y) { return T + (hi - y) / (hi - lo) * H; };
  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"660\" height=\"420\">\n";
  svg += "<rect width=\"660\" height=\"420\" fill=\"white\"/>\n";
  svg += "<text x=\"330\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" + title + "</text>\n";
  for (std::size_t k = 0; k < values.size(); ++k) {
    const double top = py(std::max(values[k], 0.0)), bottom = py(std::min(values[k], 0.0));
    svg += "<rect x=\"" + detail::num(L + k * bw + 2) + "\" y=\"" + detail::num(top) + "\" width=\"" +
           detail::num(bw - 4) + "\" height=\"" + detail::num(bottom - top) + "\" fill=\"#1f77b4\"/>\n";
    svg += "<text x=\"" + detail::num(L + (k + 0.5) * bw) + "\" y=\"" + detail::num(T + H + 14) +
           "\" text-anchor=\"middle\" font-size=\"9\">" + labels[k] + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace newsvm::plots
