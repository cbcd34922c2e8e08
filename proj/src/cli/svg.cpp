#include "phantom/cli/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "phantom/util/csv.hpp"

namespace phantom::cli {
namespace {

constexpr std::array<const char*, 8> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                              "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
constexpr double kLeft = 70.0, kRight = 150.0, kTop = 40.0, kBottom = 60.0;

std::string f2(double x) { return format_fixed(x, 2); }

std::string escape(const std::string& s) {
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

struct Frame {
  double x_lo, x_hi, y_lo, y_hi;
  std::vector<double> x_ticks, y_ticks;

  double px(double x) const {
    return kLeft + (x - x_lo) / (x_hi - x_lo) * (kSvgWidth - kLeft - kRight);
  }
  double py(double y) const {
    return kSvgHeight - kBottom - (y - y_lo) / (y_hi - y_lo) * (kSvgHeight - kTop - kBottom);
  }
};

Frame make_frame(const std::vector<Series>& series, bool y_from_zero) {
  double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
  double y_lo = x_lo, y_hi = -x_lo;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      x_lo = std::min(x_lo, x);
      x_hi = std::max(x_hi, x);
      y_lo = std::min(y_lo, y);
      y_hi = std::max(y_hi, y);
    }
  if (!std::isfinite(x_lo)) x_lo = 0.0, x_hi = 1.0, y_lo = 0.0, y_hi = 1.0;
  if (y_from_zero) y_lo = std::min(y_lo, 0.0);
  if (x_hi == x_lo) x_lo -= 0.5, x_hi += 0.5;
  if (y_hi == y_lo) y_lo -= 0.5, y_hi += 0.5;
  Frame f{x_lo, x_hi, y_lo, y_hi, nice_ticks(x_lo, x_hi), nice_ticks(y_lo, y_hi)};
  // Widen the y range to the outer ticks so the grid closes on the frame.
  f.y_lo = std::min(f.y_lo, f.y_ticks.front());
  f.y_hi = std::max(f.y_hi, f.y_ticks.back());
  return f;
}

std::string tick_label(double v) {
  std::string s = format_fixed(v, 2);
  while (s.find('.') != std::string::npos && (s.back() == '0' || s.back() == '.')) {
    const bool dot = s.back() == '.';
    s.pop_back();
    if (dot) break;
  }
  return s;
}

void header(std::ostream& o, const ChartSpec& spec, const Frame& f) {
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kSvgWidth << "\" height=\"" << kSvgHeight
    << "\" viewBox=\"0 0 " << kSvgWidth << ' ' << kSvgHeight << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  o << "<rect x=\"0.00\" y=\"0.00\" width=\"" << f2(kSvgWidth) << "\" height=\"" << f2(kSvgHeight)
    << "\" fill=\"#ffffff\"/>\n";
  o << "<text x=\"" << f2(kSvgWidth / 2.0) << "\" y=\"" << f2(kTop / 2.0 + 4.0)
    << "\" text-anchor=\"middle\" font-size=\"14\">" << escape(spec.title) << "</text>\n";
  const double x0 = kLeft, x1 = kSvgWidth - kRight, y0 = kTop, y1 = kSvgHeight - kBottom;
  o << "<g stroke=\"#dddddd\" stroke-width=\"1.00\">\n";
  for (double t : f.y_ticks)
    if (t >= f.y_lo && t <= f.y_hi)
      o << "<line x1=\"" << f2(x0) << "\" y1=\"" << f2(f.py(t)) << "\" x2=\"" << f2(x1) << "\" y2=\"" << f2(f.py(t))
        << "\"/>\n";
  o << "</g>\n";
  o << "<rect x=\"" << f2(x0) << "\" y=\"" << f2(y0) << "\" width=\"" << f2(x1 - x0) << "\" height=\"" << f2(y1 - y0)
    << "\" fill=\"none\" stroke=\"#000000\" stroke-width=\"1.00\"/>\n";
  o << "<g text-anchor=\"middle\">\n";
  for (double t : f.x_ticks)
    if (t >= f.x_lo && t <= f.x_hi)
      o << "<text x=\"" << f2(f.px(t)) << "\" y=\"" << f2(y1 + 16.0) << "\">" << tick_label(t) << "</text>\n";
  o << "</g>\n<g text-anchor=\"end\">\n";
  for (double t : f.y_ticks)
    if (t >= f.y_lo && t <= f.y_hi)
      o << "<text x=\"" << f2(x0 - 6.0) << "\" y=\"" << f2(f.py(t) + 4.0) << "\">" << tick_label(t) << "</text>\n";
  o << "</g>\n";
  o << "<text x=\"" << f2((x0 + x1) / 2.0) << "\" y=\"" << f2(kSvgHeight - 16.0) << "\" text-anchor=\"middle\">"
    << escape(spec.x_label) << "</text>\n";
  o << "<text x=\"" << f2(18.0) << "\" y=\"" << f2((y0 + y1) / 2.0) << "\" text-anchor=\"middle\" transform=\"rotate(-90 "
    << f2(18.0) << ' ' << f2((y0 + y1) / 2.0) << ")\">" << escape(spec.y_label) << "</text>\n";
  if (spec.marker && spec.marker_x >= f.x_lo && spec.marker_x <= f.x_hi)
    o << "<line x1=\"" << f2(f.px(spec.marker_x)) << "\" y1=\"" << f2(y0) << "\" x2=\"" << f2(f.px(spec.marker_x))
      << "\" y2=\"" << f2(y1) << "\" stroke=\"#d62728\" stroke-width=\"1.00\" stroke-dasharray=\"4 3\"/>\n";
}

void legend(std::ostream& o, const std::vector<Series>& series) {
  const double x = kSvgWidth - kRight + 12.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double y = kTop + 12.0 + 18.0 * static_cast<double>(i);
    o << "<rect x=\"" << f2(x) << "\" y=\"" << f2(y - 8.0) << "\" width=\"10.00\" height=\"10.00\" fill=\""
      << kPalette[i % kPalette.size()] << "\"/>\n";
    o << "<text x=\"" << f2(x + 16.0) << "\" y=\"" << f2(y + 1.0) << "\">" << escape(series[i].name) << "</text>\n";
  }
}

}  // namespace

std::vector<double> nice_ticks(double lo, double hi, int target) {
  if (!(hi > lo)) return {lo};
  const double raw = (hi - lo) / std::max(target, 1);
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  std::vector<double> ticks;
  const double first = std::floor(lo / step) * step;
  for (int k = 0;; ++k) {
    const double t = first + k * step;
    ticks.push_back(std::abs(t) < step * 1e-9 ? 0.0 : t);
    if (t >= hi - step * 1e-9) break;
  }
  return ticks;
}

std::string line_chart(const ChartSpec& spec, const std::vector<Series>& series) {
  std::ostringstream o;
  const Frame f = make_frame(series, true);
  header(o, spec, f);
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series[i].points.empty()) continue;
    o << "<polyline fill=\"none\" stroke=\"" << kPalette[i % kPalette.size()] << "\" stroke-width=\"1.50\" points=\"";
    for (std::size_t k = 0; k < series[i].points.size(); ++k) {
      const auto& [x, y] = series[i].points[k];
      o << (k ? " " : "") << f2(f.px(x)) << ',' << f2(f.py(y));
    }
    o << "\"/>\n";
  }
  legend(o, series);
  o << "</svg>\n";
  return o.str();
}

std::string scatter_chart(const ChartSpec& spec, const std::vector<Series>& series) {
  std::ostringstream o;
  const Frame f = make_frame(series, false);
  header(o, spec, f);
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series[i].points.empty()) continue;
    o << "<g fill=\"" << kPalette[i % kPalette.size()] << "\" fill-opacity=\"0.60\">\n";
    for (const auto& [x, y] : series[i].points)
      o << "<circle cx=\"" << f2(f.px(x)) << "\" cy=\"" << f2(f.py(y)) << "\" r=\"2.00\"/>\n";
    o << "</g>\n";
  }
  legend(o, series);
  o << "</svg>\n";
  return o.str();
}

}  // namespace phantom::cli
