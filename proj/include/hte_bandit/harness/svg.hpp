#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

namespace hte_bandit::svg {

namespace detail {

inline std::string num(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.2f", v);
  return buffer;
}

inline std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
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

/// Round tick spacing covering [0, top] with about `count` intervals.
inline double nice_step(double top, int count) {
  if (!(top > 0.0)) return 1.0;
  const double raw = top / count;
  const double magnitude = std::pow(10.0, std::floor(std::log10(raw)));
  for (double f : {1.0, 2.0, 2.5, 5.0, 10.0})
    if (f * magnitude >= raw) return f * magnitude;
  return 10.0 * magnitude;
}

}  // namespace detail

/// Mean curves with a shaded +-1 standard deviation band, x = round index.
class LineChart {
 public:
  explicit LineChart(std::string title, double width = 800, double height = 480)
      : title_(std::move(title)), width_(width), height_(height) {}

  void add_series(std::string label, std::vector<double> mean, std::vector<double> stddev) {
    series_.push_back({std::move(label), std::move(mean), std::move(stddev)});
  }

  std::string render() const {
    const double left = 70, right = 20, top = 40, bottom = 50;
    const double plot_w = width_ - left - right;
    const double plot_h = height_ - top - bottom;

    std::size_t length = 0;
    double y_max = 0.0;
    for (const auto& s : series_) {
      length = std::max(length, s.mean.size());
      for (std::size_t i = 0; i < s.mean.size(); ++i)
        y_max = std::max(y_max, s.mean[i] + (i < s.stddev.size() ? s.stddev[i] : 0.0));
    }
    const double x_max = std::max<double>(static_cast<double>(length), 1.0);
    const double y_step = detail::nice_step(y_max, 5);
    const double y_top = std::max(y_step, std::ceil(y_max / y_step) * y_step);
    const double x_step = detail::nice_step(x_max, 5);

    const auto px = [&](double x) { return left + plot_w * x / x_max; };
    const auto py = [&](double y) { return top + plot_h * (1.0 - y / y_top); };

    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::num(width_) + "\" height=\"" +
           detail::num(height_) + "\" viewBox=\"0 0 " + detail::num(width_) + " " + detail::num(height_) + "\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out += "<text x=\"" + detail::num(width_ / 2) + "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"16\">" + detail::escape(title_) + "</text>\n";

    for (double y = 0.0; y <= y_top + 1e-9 * y_top; y += y_step) {
      out += "<line x1=\"" + detail::num(left) + "\" y1=\"" + detail::num(py(y)) + "\" x2=\"" +
             detail::num(left + plot_w) + "\" y2=\"" + detail::num(py(y)) + "\" stroke=\"#e0e0e0\"/>\n";
      out += "<text x=\"" + detail::num(left - 6) + "\" y=\"" + detail::num(py(y) + 4) +
             "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" + label(y) + "</text>\n";
    }
    for (double x = 0.0; x <= x_max + 1e-9 * x_max; x += x_step) {
      out += "<text x=\"" + detail::num(px(x)) + "\" y=\"" + detail::num(top + plot_h + 16) +
             "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" + label(x) + "</text>\n";
    }
    out += "<line x1=\"" + detail::num(left) + "\" y1=\"" + detail::num(top + plot_h) + "\" x2=\"" +
           detail::num(left + plot_w) + "\" y2=\"" + detail::num(top + plot_h) + "\" stroke=\"black\"/>\n";
    out += "<line x1=\"" + detail::num(left) + "\" y1=\"" + detail::num(top) + "\" x2=\"" + detail::num(left) +
           "\" y2=\"" + detail::num(top + plot_h) + "\" stroke=\"black\"/>\n";
    out += "<text x=\"" + detail::num(left + plot_w / 2) + "\" y=\"" + detail::num(height_ - 10) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">round</text>\n";

    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
    for (std::size_t k = 0; k < series_.size(); ++k) {
      const auto& s = series_[k];
      const std::string color = palette[k % std::size(palette)];
      const std::size_t n = s.mean.size();
      if (n == 0) continue;
      const std::size_t stride = std::max<std::size_t>(1, n / 1000);
      std::vector<std::size_t> idx;
      for (std::size_t i = 0; i < n; i += stride) idx.push_back(i);
      if (idx.back() != n - 1) idx.push_back(n - 1);

      std::string band = "M";
      for (std::size_t i : idx) {
        const double sd = i < s.stddev.size() ? s.stddev[i] : 0.0;
        band += " " + detail::num(px(static_cast<double>(i + 1))) + "," + detail::num(py(s.mean[i] + sd));
      }
      for (auto it = idx.rbegin(); it != idx.rend(); ++it) {
        const double sd = *it < s.stddev.size() ? s.stddev[*it] : 0.0;
        band += " L " + detail::num(px(static_cast<double>(*it + 1))) + "," +
                detail::num(py(std::max(0.0, s.mean[*it] - sd)));
      }
      band += " Z";
      out += "<path d=\"" + band + "\" fill=\"" + color + "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";

      std::string points;
      for (std::size_t i : idx)
        points += detail::num(px(static_cast<double>(i + 1))) + "," + detail::num(py(s.mean[i])) + " ";
      out += "<polyline points=\"" + points + "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";

      const double ly = top + 14 + 18 * static_cast<double>(k);
      out += "<line x1=\"" + detail::num(left + 12) + "\" y1=\"" + detail::num(ly) + "\" x2=\"" +
             detail::num(left + 36) + "\" y2=\"" + detail::num(ly) + "\" stroke=\"" + color +
             "\" stroke-width=\"3\"/>\n";
      out += "<text x=\"" + detail::num(left + 42) + "\" y=\"" + detail::num(ly + 4) +
             "\" font-family=\"sans-serif\" font-size=\"12\">" + detail::escape(s.label) + "</text>\n";
    }
    out += "</svg>\n";
    return out;
  }

 private:
  struct Series {
    std::string label;
    std::vector<double> mean;
    std::vector<double> stddev;
  };

  static std::string label(double v) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%g", v);
    return buffer;
  }

  std::string title_;
  double width_;
  double height_;
  std::vector<Series> series_;
};

}  // namespace hte_bandit::svg
