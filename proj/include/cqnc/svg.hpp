#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "cqnc/covariance.hpp"

// Minimal static SVG renderings for quick inspection of CLI runs; axes,
// polylines and ellipses only, no interactivity.

namespace cqnc {

struct SvgSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f6fb4";
};

namespace detail {
[[nodiscard]] inline std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}
}  // namespace detail

// Line plot with linear or log10 x mapping; y is always linear (the caller
// passes dB values already).  Non-finite points break the polyline.
[[nodiscard]] inline std::string svg_line_plot(
    const std::string& title, const std::string& x_label,
    const std::string& y_label, const std::vector<SvgSeries>& series,
    bool log_x = false) {
  const double w = 860.0, h = 480.0, ml = 70.0, mr = 160.0, mt = 40.0,
               mb = 55.0;
  double x_lo = 0.0, x_hi = 1.0, y_lo = 0.0, y_hi = 1.0;
  bool first = true;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      const double xv = log_x ? std::log10(s.x[i]) : s.x[i];
      if (first) {
        x_lo = x_hi = xv;
        y_lo = y_hi = s.y[i];
        first = false;
      } else {
        x_lo = std::min(x_lo, xv);
        x_hi = std::max(x_hi, xv);
        y_lo = std::min(y_lo, s.y[i]);
        y_hi = std::max(y_hi, s.y[i]);
      }
    }
  }
  if (first) throw std::invalid_argument("svg_line_plot: no finite data");
  if (x_hi == x_lo) x_hi = x_lo + 1.0;
  if (y_hi == y_lo) y_hi = y_lo + 1.0;
  const double pad = 0.05 * (y_hi - y_lo);
  y_lo -= pad;
  y_hi += pad;
  const auto px = [&](double xv) {
    const double t = ((log_x ? std::log10(xv) : xv) - x_lo) / (x_hi - x_lo);
    return ml + t * (w - ml - mr);
  };
  const auto py = [&](double yv) {
    return h - mb - (yv - y_lo) / (y_hi - y_lo) * (h - mt - mb);
  };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         detail::svg_num(w) + "\" height=\"" + detail::svg_num(h) + "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + detail::svg_num(w / 2) + "\" y=\"24\" "
         "text-anchor=\"middle\" font-size=\"16\">" + title + "</text>\n";
  out += "<rect x=\"" + detail::svg_num(ml) + "\" y=\"" + detail::svg_num(mt) +
         "\" width=\"" + detail::svg_num(w - ml - mr) + "\" height=\"" +
         detail::svg_num(h - mt - mb) +
         "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double yv = y_lo + (y_hi - y_lo) * i / 4.0;
    out += "<line x1=\"" + detail::svg_num(ml) + "\" y1=\"" +
           detail::svg_num(py(yv)) + "\" x2=\"" + detail::svg_num(w - mr) +
           "\" y2=\"" + detail::svg_num(py(yv)) +
           "\" stroke=\"#ddd\" stroke-dasharray=\"3,4\"/>\n";
    out += "<text x=\"" + detail::svg_num(ml - 8) + "\" y=\"" +
           detail::svg_num(py(yv) + 4) +
           "\" text-anchor=\"end\" font-size=\"11\">" + detail::svg_num(yv) +
           "</text>\n";
  }
  for (int i = 0; i <= 4; ++i) {
    const double xv = x_lo + (x_hi - x_lo) * i / 4.0;
    const double xd = log_x ? std::pow(10.0, xv) : xv;
    const double xp = ml + (xv - x_lo) / (x_hi - x_lo) * (w - ml - mr);
    out += "<text x=\"" + detail::svg_num(xp) + "\" y=\"" +
           detail::svg_num(h - mb + 18) +
           "\" text-anchor=\"middle\" font-size=\"11\">" +
           detail::svg_num(xd) + "</text>\n";
  }
  out += "<text x=\"" + detail::svg_num(w / 2) + "\" y=\"" +
         detail::svg_num(h - 12) + "\" text-anchor=\"middle\" "
         "font-size=\"13\">" + x_label + "</text>\n";
  out += "<text x=\"18\" y=\"" + detail::svg_num(h / 2) +
         "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 "
         "18 " + detail::svg_num(h / 2) + ")\">" + y_label + "</text>\n";

  double legend_y = mt + 14.0;
  for (const auto& s : series) {
    std::string points;
    bool open = false;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i]) || !(log_x ? s.x[i] > 0.0 : true)) {
        if (open) {
          out += "<polyline fill=\"none\" stroke=\"" + s.color +
                 "\" stroke-width=\"1.6\" points=\"" + points + "\"/>\n";
          points.clear();
          open = false;
        }
        continue;
      }
      points += detail::svg_num(px(s.x[i])) + "," +
                detail::svg_num(py(s.y[i])) + " ";
      open = true;
    }
    if (open)
      out += "<polyline fill=\"none\" stroke=\"" + s.color +
             "\" stroke-width=\"1.6\" points=\"" + points + "\"/>\n";
    out += "<line x1=\"" + detail::svg_num(w - mr + 10) + "\" y1=\"" +
           detail::svg_num(legend_y - 4) + "\" x2=\"" +
           detail::svg_num(w - mr + 34) + "\" y2=\"" +
           detail::svg_num(legend_y - 4) + "\" stroke=\"" + s.color +
           "\" stroke-width=\"2\"/>\n";
    out += "<text x=\"" + detail::svg_num(w - mr + 40) + "\" y=\"" +
           detail::svg_num(legend_y) + "\" font-size=\"12\">" + s.name +
           "</text>\n";
    legend_y += 18.0;
  }
  out += "</svg>\n";
  return out;
}

// Strip of noise ellipses sampled along a frequency axis.  Each ellipse is
// drawn with semi-axes sqrt(v_max), sqrt(v_min) (standard deviations), the
// minor axis oriented along the minimal-variance detection direction, and a
// vacuum circle of radius sqrt(1/2) behind it for scale.
[[nodiscard]] inline std::string svg_ellipse_strip(
    const std::vector<double>& frequencies_hz,
    const std::vector<SqueezeEllipse>& ellipses, std::size_t max_cells = 12) {
  if (frequencies_hz.size() != ellipses.size() || ellipses.empty())
    throw std::invalid_argument("svg_ellipse_strip: bad input lengths");
  const std::size_t n = std::min(max_cells, ellipses.size());
  const std::size_t stride = std::max<std::size_t>(1, ellipses.size() / n);
  const double cell = 110.0, h = 170.0;
  double scale_ref = 0.0;
  for (const auto& e : ellipses)
    scale_ref = std::max(scale_ref, std::sqrt(e.v_max));

  std::vector<std::size_t> picks;
  for (std::size_t i = 0; i < ellipses.size() && picks.size() < n;
       i += stride)
    picks.push_back(i);
  const double w = cell * static_cast<double>(picks.size());

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         detail::svg_num(w) + "\" height=\"" + detail::svg_num(h) + "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  const double r_draw = 38.0;
  for (std::size_t c = 0; c < picks.size(); ++c) {
    const std::size_t i = picks[c];
    const double cx = cell * (static_cast<double>(c) + 0.5);
    const double cy = 70.0;
    const double r_vac = r_draw * std::sqrt(0.5) / scale_ref;
    out += "<circle cx=\"" + detail::svg_num(cx) + "\" cy=\"" +
           detail::svg_num(cy) + "\" r=\"" + detail::svg_num(r_vac) +
           "\" fill=\"none\" stroke=\"#bbb\" stroke-dasharray=\"2,3\"/>\n";
    const double rx = r_draw * std::sqrt(ellipses[i].v_max) / scale_ref;
    const double ry = r_draw * std::sqrt(ellipses[i].v_min) / scale_ref;
    // angle is the minimal-variance detection angle; the drawn minor axis
    // points along it.
    const double deg = -(ellipses[i].angle) * 180.0 / pi;
    out += "<ellipse cx=\"" + detail::svg_num(cx) + "\" cy=\"" +
           detail::svg_num(cy) + "\" rx=\"" + detail::svg_num(ry) +
           "\" ry=\"" + detail::svg_num(rx) + "\" fill=\"#9ecae8\" "
           "fill-opacity=\"0.65\" stroke=\"#1f6fb4\" transform=\"rotate(" +
           detail::svg_num(deg) + " " + detail::svg_num(cx) + " " +
           detail::svg_num(cy) + ")\"/>\n";
    out += "<text x=\"" + detail::svg_num(cx) + "\" y=\"" +
           detail::svg_num(h - 28) +
           "\" text-anchor=\"middle\" font-size=\"10\">" +
           detail::svg_num(frequencies_hz[i] / 1e3) + " kHz</text>\n";
  }
  out += "<text x=\"8\" y=\"" + detail::svg_num(h - 8) +
         "\" font-size=\"10\">dashed: vacuum; axes in standard deviations"
         "</text>\n";
  out += "</svg>\n";
  return out;
}

}  // namespace cqnc
