#pragma once

#include <string>
#include <utility>
#include <vector>

namespace phantom::cli {

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

struct ChartSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  // Draws a dashed vertical marker at this x when set (day 0 on curve charts).
  bool marker = false;
  double marker_x = 0.0;
};

inline constexpr int kSvgWidth = 640;
inline constexpr int kSvgHeight = 400;

/// Fixed 640x400 viewport, every coordinate printed as %.2f, no timestamps.
/// Series keep their input order; colors come from a fixed palette by index.
std::string line_chart(const ChartSpec& spec, const std::vector<Series>& series);
std::string scatter_chart(const ChartSpec& spec, const std::vector<Series>& series);

/// Tick positions at 1, 2 or 5 times a power of ten covering [lo, hi].
std::vector<double> nice_ticks(double lo, double hi, int target = 5);

}  // namespace phantom::cli
