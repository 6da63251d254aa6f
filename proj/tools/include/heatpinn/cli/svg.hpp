#pragma once

#include <string>
#include <vector>

namespace heatpinn::cli {

// Fixed five-stop colour scale (dark purple, blue, teal, green, yellow)
// interpolated linearly in RGB between lo and hi; values outside are clamped.
std::string scale_color(double value, double lo, double hi);

// Temperature map of an nx by ny grid, values indexed i + nx * j with j = 0
// at the bottom edge. The legend states lo and hi explicitly.
std::string heatmap_svg(const std::vector<double>& values, int nx, int ny, double lo, double hi,
                        const std::string& title, double aspect);

struct Series {
  std::string label;
  std::vector<double> y;
};

struct LinePanel {
  std::string title;
  std::vector<double> x;
  std::vector<Series> series;
};

// Grid of small line plots sharing one y range.
std::string line_grid_svg(const std::vector<LinePanel>& panels, int columns,
                          const std::string& x_label, const std::string& y_label);

}  // namespace heatpinn::cli
