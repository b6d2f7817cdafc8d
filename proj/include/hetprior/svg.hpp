#pragma once

// Minimal static SVG charts: histogram with density overlays, line densities
// and forest plots. Output is plain text with fixed-precision coordinates, so
// identical inputs give identical files.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include "hetprior/metaanalysis.hpp"

namespace hetprior::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct ForestRow {
  std::string label;
  double estimate = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  /// "study", "bayes", "frequentist", "prior", "posterior"
  std::string type;
};

namespace detail {

inline constexpr const char* kPalette[] = {"#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string escape(const std::string& s) {
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

/// "Nice" tick positions covering [lo, hi].
inline std::vector<double> ticks(double lo, double hi, int target = 6) {
  const double span = hi - lo;
  if (!(span > 0.0)) return {lo};
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 2.5, 5.0, 10.0}) {
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  }
  std::vector<double> t;
  for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * span; v += step) t.push_back(std::abs(v) < 1e-12 ? 0.0 : v);
  return t;
}

inline std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

class Canvas {
 public:
  Canvas(double width, double height, double left, double right, double top, double bottom)
      : w_(width), h_(height), l_(left), r_(right), t_(top), b_(bottom) {
    out_ = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(w_) + "\" height=\"" + num(h_) +
           "\" viewBox=\"0 0 " + num(w_) + " " + num(h_) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out_ += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  }
  void set_x(double lo, double hi) { x0_ = lo, x1_ = hi; }
  void set_y(double lo, double hi) { y0_ = lo, y1_ = hi; }
  double px(double x) const { return l_ + (x - x0_) / (x1_ - x0_) * (w_ - l_ - r_); }
  double py(double y) const { return h_ - b_ - (y - y0_) / (y1_ - y0_) * (h_ - t_ - b_); }
  double plot_left() const { return l_; }
  double plot_right() const { return w_ - r_; }
  double plot_top() const { return t_; }
  double plot_bottom() const { return h_ - b_; }

  void raw(const std::string& s) { out_ += s; }
  void line(double x1, double y1, double x2, double y2, const std::string& style) {
    out_ += "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" + num(y2) + "\" " +
            style + "/>\n";
  }
  void text(double x, double y, const std::string& s, const std::string& attrs = "") {
    out_ += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" " + attrs + ">" + escape(s) + "</text>\n";
  }
  void title(const std::string& s) { text(w_ / 2.0, t_ / 2.0 + 4.0, s, "text-anchor=\"middle\" font-size=\"14\""); }

  void x_axis(const std::string& label) {
    line(plot_left(), plot_bottom(), plot_right(), plot_bottom(), "stroke=\"black\"");
    for (double v : ticks(x0_, x1_)) {
      line(px(v), plot_bottom(), px(v), plot_bottom() + 5.0, "stroke=\"black\"");
      text(px(v), plot_bottom() + 18.0, tick_label(v), "text-anchor=\"middle\"");
    }
    text((plot_left() + plot_right()) / 2.0, h_ - 8.0, label, "text-anchor=\"middle\"");
  }
  void y_axis(const std::string& label) {
    line(plot_left(), plot_top(), plot_left(), plot_bottom(), "stroke=\"black\"");
    for (double v : ticks(y0_, y1_)) {
      line(plot_left() - 5.0, py(v), plot_left(), py(v), "stroke=\"black\"");
      text(plot_left() - 8.0, py(v) + 4.0, tick_label(v), "text-anchor=\"end\"");
    }
    const double cy = (plot_top() + plot_bottom()) / 2.0;
    text(14.0, cy, label, "text-anchor=\"middle\" transform=\"rotate(-90 14 " + num(cy) + ")\"");
  }
  void polyline(std::span<const double> x, std::span<const double> y, const std::string& color) {
    out_ += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.8\" points=\"";
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] < x0_ || x[i] > x1_) continue;
      out_ += num(px(x[i])) + "," + num(py(std::min(y[i], y1_))) + " ";
    }
    out_ += "\"/>\n";
  }
  void legend(const std::vector<std::pair<std::string, std::string>>& entries) {
    double y = plot_top() + 14.0;
    for (const auto& [label, color] : entries) {
      line(plot_right() - 190.0, y - 4.0, plot_right() - 170.0, y - 4.0, "stroke=\"" + color + "\" stroke-width=\"3\"");
      text(plot_right() - 164.0, y, label);
      y += 16.0;
    }
  }
  std::string finish() { return out_ + "</svg>\n"; }

 private:
  double w_, h_, l_, r_, t_, b_;
  double x0_ = 0.0, x1_ = 1.0, y0_ = 0.0, y1_ = 1.0;
  std::string out_;
};

}  // namespace detail

/// Normalized histogram of `draws` on [0, x_max] with density curves on top.
inline std::string histogram(const std::string& title, const std::string& xlabel, std::span<const double> draws,
                             double x_max, const std::vector<Series>& overlays, int bins = 60) {
  std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
  const double h = x_max / bins;
  for (double v : draws) {
    if (v < 0.0 || v >= x_max) continue;
    counts[static_cast<std::size_t>(v / h)] += 1.0;
  }
  double ymax = 0.0;
  for (auto& c : counts) {
    c /= static_cast<double>(draws.size()) * h;
    ymax = std::max(ymax, c);
  }
  for (const auto& s : overlays) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (s.x[i] <= x_max && std::isfinite(s.y[i])) ymax = std::max(ymax, std::min(s.y[i], 3.0 * ymax + 1e-300));
    }
  }
  detail::Canvas cv(640, 420, 60, 20, 40, 50);
  cv.set_x(0.0, x_max);
  cv.set_y(0.0, ymax * 1.05);
  cv.title(title);
  for (int i = 0; i < bins; ++i) {
    const double x = cv.px(i * h), x2 = cv.px((i + 1) * h), y = cv.py(counts[static_cast<std::size_t>(i)]);
    cv.raw("<rect x=\"" + detail::num(x) + "\" y=\"" + detail::num(y) + "\" width=\"" + detail::num(x2 - x) +
           "\" height=\"" + detail::num(cv.plot_bottom() - y) + "\" fill=\"#cccccc\" stroke=\"#999999\"/>\n");
  }
  std::vector<std::pair<std::string, std::string>> legend;
  for (std::size_t k = 0; k < overlays.size(); ++k) {
    const std::string color = detail::kPalette[k % 6];
    cv.polyline(overlays[k].x, overlays[k].y, color);
    legend.emplace_back(overlays[k].label, color);
  }
  cv.x_axis(xlabel);
  cv.y_axis("density");
  cv.legend(legend);
  return cv.finish();
}

/// Density curves over a shared x range.
inline std::string densities(const std::string& title, const std::string& xlabel, double x_min, double x_max,
                             const std::vector<Series>& series) {
  double ymax = 0.0;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (s.x[i] >= x_min && s.x[i] <= x_max && std::isfinite(s.y[i])) ymax = std::max(ymax, s.y[i]);
    }
  }
  detail::Canvas cv(640, 420, 60, 20, 40, 50);
  cv.set_x(x_min, x_max);
  cv.set_y(0.0, ymax > 0.0 ? ymax * 1.05 : 1.0);
  cv.title(title);
  std::vector<std::pair<std::string, std::string>> legend;
  for (std::size_t k = 0; k < series.size(); ++k) {
    const std::string color = detail::kPalette[k % 6];
    cv.polyline(series[k].x, series[k].y, color);
    legend.emplace_back(series[k].label, color);
  }
  cv.x_axis(xlabel);
  cv.y_axis("density");
  cv.legend(legend);
  return cv.finish();
}

/// Forest plot: one row per interval, point estimate marked, reference line at 0.
inline std::string forest(const std::string& title, const std::string& xlabel, const std::vector<ForestRow>& rows) {
  double lo = 0.0, hi = 0.0;
  for (const auto& r : rows) {
    lo = std::min(lo, r.lo);
    hi = std::max(hi, r.hi);
  }
  const double pad = 0.05 * (hi - lo + 1e-12);
  const double height = 90.0 + 24.0 * static_cast<double>(rows.size());
  detail::Canvas cv(720, height, 260, 30, 40, 50);
  cv.set_x(lo - pad, hi + pad);
  cv.set_y(0.0, static_cast<double>(rows.size()));
  cv.title(title);
  cv.line(cv.px(0.0), cv.plot_top(), cv.px(0.0), cv.plot_bottom(), "stroke=\"#888888\" stroke-dasharray=\"4 3\"");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const double y = cv.py(static_cast<double>(rows.size() - i) - 0.5);
    const std::string color = r.type == "study" ? "black" : r.type == "frequentist" ? "#1f77b4" : "#d62728";
    cv.text(10.0, y + 4.0, r.label);
    cv.line(cv.px(r.lo), y, cv.px(r.hi), y, "stroke=\"" + color + "\" stroke-width=\"2\"");
    if (r.type == "study") {
      cv.raw("<rect x=\"" + detail::num(cv.px(r.estimate) - 4.0) + "\" y=\"" + detail::num(y - 4.0) +
             "\" width=\"8\" height=\"8\" fill=\"black\"/>\n");
    } else {
      const double x = cv.px(r.estimate);
      cv.raw("<polygon points=\"" + detail::num(x - 6.0) + "," + detail::num(y) + " " + detail::num(x) + "," +
             detail::num(y - 6.0) + " " + detail::num(x + 6.0) + "," + detail::num(y) + " " + detail::num(x) + "," +
             detail::num(y + 6.0) + "\" fill=\"" + color + "\"/>\n");
    }
  }
  cv.x_axis(xlabel);
  return cv.finish();
}

/// Density of a distribution on an evenly spaced grid over [lo, hi].
inline Series density_series(const std::string& label, const Distribution& d, double lo, double hi, int n = 400) {
  Series s{label, {}, {}};
  for (int i = 0; i <= n; ++i) {
    const double x = lo + (hi - lo) * i / n;
    s.x.push_back(x);
    s.y.push_back(density(d, x));
  }
  return s;
}

}  // namespace hetprior::svg
