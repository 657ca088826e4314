#pragma once

// Minimal SVG 1.1 line plots. Everything drawn comes from the parsed trace
// CSV rows, plus the oracle value for the cost plot's reference line.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lqgame/io.hpp"

namespace lqgame {

struct PlotSpec {
  std::string title;
  std::string y_label;
  bool log_y = false;
  std::optional<double> hline;  // drawn dashed across the full x range
};

namespace detail {

inline std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace detail

/// Renders one polyline. Non-finite points (and non-positive ones on a log
/// axis) are skipped.
inline std::string render_line_plot(const std::vector<double>& xs, const std::vector<double>& ys,
                                    const PlotSpec& spec) {
  constexpr double W = 640, H = 400, left = 70, right = 20, top = 40, bottom = 50;
  auto ty = [&](double y) { return spec.log_y ? std::log10(y) : y; };

  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < xs.size() && i < ys.size(); ++i) {
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) continue;
    if (spec.log_y && !(ys[i] > 0.0)) continue;
    pts.emplace_back(xs[i], ty(ys[i]));
  }
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (!pts.empty()) {
    x0 = x1 = pts.front().first;
    y0 = y1 = pts.front().second;
    for (const auto& [x, y] : pts) {
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  std::optional<double> h;
  if (spec.hline && std::isfinite(*spec.hline) && (!spec.log_y || *spec.hline > 0.0)) {
    h = ty(*spec.hline);
    y0 = std::min(y0, *h);
    y1 = std::max(y1, *h);
  }
  if (x1 <= x0) x1 = x0 + 1;
  if (y1 <= y0) {
    const double pad = std::max(std::abs(y0) * 0.05, 1e-12);
    y0 -= pad;
    y1 += pad;
  }
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * (W - left - right); };
  auto py = [&](double y) { return H - bottom - (y - y0) / (y1 - y0) * (H - top - bottom); };

  std::ostringstream s;
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << W
    << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       "font-size=\"16\">"
    << detail::xml_escape(spec.title) << "</text>\n"
    << "<line x1=\"" << left << "\" y1=\"" << H - bottom << "\" x2=\"" << W - right << "\" y2=\""
    << H - bottom << "\" stroke=\"black\"/>\n"
    << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
    << H - bottom << "\" stroke=\"black\"/>\n";
  // axis extents
  const auto label_y = [&](double v) {
    return spec.log_y ? "1e" + detail::svg_num(v) : detail::svg_num(v);
  };
  s << "<g font-family=\"sans-serif\" font-size=\"11\">\n"
    << "<text x=\"" << left << "\" y=\"" << H - bottom + 16 << "\" text-anchor=\"middle\">"
    << detail::svg_num(x0) << "</text>\n"
    << "<text x=\"" << W - right << "\" y=\"" << H - bottom + 16 << "\" text-anchor=\"end\">"
    << detail::svg_num(x1) << "</text>\n"
    << "<text x=\"" << left - 4 << "\" y=\"" << H - bottom << "\" text-anchor=\"end\">"
    << label_y(y0) << "</text>\n"
    << "<text x=\"" << left - 4 << "\" y=\"" << top + 4 << "\" text-anchor=\"end\">" << label_y(y1)
    << "</text>\n"
    << "<text x=\"" << (left + W - right) / 2 << "\" y=\"" << H - 12
    << "\" text-anchor=\"middle\">t</text>\n"
    << "<text x=\"16\" y=\"" << (top + H - bottom) / 2 << "\" text-anchor=\"middle\" "
    << "transform=\"rotate(-90 16 " << (top + H - bottom) / 2 << ")\">"
    << detail::xml_escape(spec.y_label) << (spec.log_y ? " (log10)" : "") << "</text>\n"
    << "</g>\n";
  if (h) {
    s << "<line x1=\"" << left << "\" y1=\"" << detail::svg_num(py(*h)) << "\" x2=\""
      << W - right << "\" y2=\"" << detail::svg_num(py(*h))
      << "\" stroke=\"red\" stroke-dasharray=\"6,4\"/>\n";
  }
  if (!pts.empty()) {
    s << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i) s << ' ';
      s << detail::svg_num(px(pts[i].first)) << ',' << detail::svg_num(py(pts[i].second));
    }
    s << "\"/>\n";
  }
  s << "</svg>\n";
  return s.str();
}

struct TracePlots {
  std::string cost;
  std::string mapping_norm;
  std::string lambda_min_qtilde;
};

inline TracePlots plot_trace(const std::vector<TraceCsvRow>& rows,
                             std::optional<double> oracle_value, const std::string& solver) {
  std::vector<double> t, cost, gm, lq;
  for (const auto& r : rows) {
    t.push_back(static_cast<double>(r.t));
    cost.push_back(r.cost);
    gm.push_back(r.grad_map_norm);
    lq.push_back(r.lambda_min_qtilde);
  }
  TracePlots p;
  p.cost = render_line_plot(t, cost, {solver + ": cost", "cost", false, oracle_value});
  p.mapping_norm =
      render_line_plot(t, gm, {solver + ": gradient mapping norm", "norm", true, std::nullopt});
  p.lambda_min_qtilde = render_line_plot(
      t, lq, {solver + ": lambda_min(Q - L'RvL)", "lambda_min", false, 0.0});
  return p;
}

}  // namespace lqgame
