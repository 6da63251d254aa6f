#include "heatpinn/cli/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace heatpinn::cli {

namespace {

constexpr std::array<std::array<int, 3>, 5> kStops{{
    {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}}};

const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string scale_color(double value, double lo, double hi) {
  double u = hi > lo ? (value - lo) / (hi - lo) : 0.5;
  u = std::clamp(std::isfinite(u) ? u : 0.0, 0.0, 1.0);
  const double pos = u * static_cast<double>(kStops.size() - 1);
  const auto k = std::min(static_cast<std::size_t>(pos), kStops.size() - 2);
  const double w = pos - static_cast<double>(k);
  char buf[8];
  int rgb[3];
  for (int c = 0; c < 3; ++c) {
    rgb[c] = static_cast<int>(std::lround((1 - w) * kStops[k][c] + w * kStops[k + 1][c]));
  }
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
  return buf;
}

std::string heatmap_svg(const std::vector<double>& values, int nx, int ny, double lo, double hi,
                        const std::string& title, double aspect) {
  const double width = 600;
  const double height = std::clamp(width / aspect, 60.0, 600.0);
  const double margin = 40, legend = 90;
  const double cw = width / nx, ch = height / ny;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << px(width + 2 * margin + legend)
     << "\" height=\"" << px(height + 2 * margin) << "\">\n";
  os << "<text x=\"" << px(margin) << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">"
     << escape(title) << "</text>\n";
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const double v = values[static_cast<std::size_t>(i + nx * j)];
      os << "<rect x=\"" << px(margin + i * cw) << "\" y=\"" << px(margin + (ny - 1 - j) * ch)
         << "\" width=\"" << px(cw + 0.05) << "\" height=\"" << px(ch + 0.05) << "\" fill=\""
         << scale_color(v, lo, hi) << "\"/>\n";
    }
  }
  const double lx = margin + width + 20;
  const int steps = 20;
  for (int s = 0; s < steps; ++s) {
    const double v = lo + (hi - lo) * (s + 0.5) / steps;
    os << "<rect x=\"" << px(lx) << "\" y=\"" << px(margin + height * (steps - 1 - s) / steps)
       << "\" width=\"16\" height=\"" << px(height / steps + 0.05) << "\" fill=\""
       << scale_color(v, lo, hi) << "\"/>\n";
  }
  os << "<text x=\"" << px(lx + 20) << "\" y=\"" << px(margin + 10)
     << "\" font-family=\"sans-serif\" font-size=\"11\">max " << num(hi) << " C</text>\n";
  os << "<text x=\"" << px(lx + 20) << "\" y=\"" << px(margin + height)
     << "\" font-family=\"sans-serif\" font-size=\"11\">min " << num(lo) << " C</text>\n";
  os << "</svg>\n";
  return os.str();
}

std::string line_grid_svg(const std::vector<LinePanel>& panels, int columns,
                          const std::string& x_label, const std::string& y_label) {
  double ylo = std::numeric_limits<double>::infinity(), yhi = -ylo;
  for (const auto& p : panels) {
    for (const auto& s : p.series) {
      for (double v : s.y) {
        ylo = std::min(ylo, v);
        yhi = std::max(yhi, v);
      }
    }
  }
  if (!(yhi > ylo)) {
    ylo -= 1;
    yhi += 1;
  }
  const int cols = std::max(1, columns);
  const int rows = (static_cast<int>(panels.size()) + cols - 1) / cols;
  const double pw = 220, ph = 160, pad = 50;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << px(cols * (pw + pad) + pad)
     << "\" height=\"" << px(rows * (ph + pad) + pad + 30) << "\">\n";
  os << "<text x=\"" << px(pad) << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"12\">"
     << escape(y_label) << " vs " << escape(x_label) << ", y range [" << num(ylo) << ", "
     << num(yhi) << "]</text>\n";
  for (std::size_t k = 0; k < panels.size(); ++k) {
    const auto& p = panels[k];
    const double ox = pad + static_cast<double>(k % cols) * (pw + pad);
    const double oy = 40 + pad / 2 + static_cast<double>(k / cols) * (ph + pad);
    os << "<rect x=\"" << px(ox) << "\" y=\"" << px(oy) << "\" width=\"" << px(pw)
       << "\" height=\"" << px(ph) << "\" fill=\"none\" stroke=\"#888\"/>\n";
    os << "<text x=\"" << px(ox) << "\" y=\"" << px(oy - 6)
       << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape(p.title) << "</text>\n";
    if (p.x.size() < 2) continue;
    const double xlo = p.x.front(), xhi = p.x.back();
    for (std::size_t s = 0; s < p.series.size(); ++s) {
      os << "<polyline fill=\"none\" stroke=\"" << palette[s % 4] << "\" points=\"";
      for (std::size_t i = 0; i < p.x.size() && i < p.series[s].y.size(); ++i) {
        const double u = (p.x[i] - xlo) / (xhi - xlo);
        const double v = (p.series[s].y[i] - ylo) / (yhi - ylo);
        os << px(ox + u * pw) << ',' << px(oy + (1 - v) * ph) << ' ';
      }
      os << "\"/>\n";
      os << "<text x=\"" << px(ox + pw - 60) << "\" y=\"" << px(oy + 14 + 12 * s)
         << "\" font-family=\"sans-serif\" font-size=\"10\" fill=\"" << palette[s % 4] << "\">"
         << escape(p.series[s].label) << "</text>\n";
    }
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace heatpinn::cli
