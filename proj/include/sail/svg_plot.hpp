/// Minimal batch SVG line plots: panels on a grid, polyline series,
/// horizontal threshold lines and shaded violation bands. No interactivity.

#ifndef SAIL_SVG_PLOT_HPP_
#define SAIL_SVG_PLOT_HPP_

#include <string>
#include <vector>

namespace sail::svg {

struct Series {
  std::string label;
  std::string color = "#2a7e43";
  std::vector<double> x, y;
};

struct Threshold {
  double y = 0.0;
  std::string color = "#888888";
  bool dashed = true;
};

/// Vertical region [y0, y1] shaded across the panel (violation band).
struct Band {
  double y0 = 0.0;
  double y1 = 0.0;
  std::string color = "#55aa5533";
};

struct Panel {
  std::string title;
  std::string x_label = "t [s]";
  std::string y_label;
  std::vector<Series> series;
  std::vector<Threshold> thresholds;
  std::vector<Band> bands;
};

void write_svg(const std::string& path, const std::vector<Panel>& panels, int columns,
               int panel_width = 420, int panel_height = 260);

}  // namespace sail::svg

#endif  // SAIL_SVG_PLOT_HPP_
