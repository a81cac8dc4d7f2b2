#include "sail/svg_plot.hpp"

#include "sail/common.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace sail::svg {

namespace {

struct Range {
  double lo = 0.0, hi = 1.0;
};

Range data_range(const std::vector<double>& data, const Range& fallback) {
  Range r{std::numeric_limits<double>::infinity(),
          -std::numeric_limits<double>::infinity()};
  for (double v : data)
    if (std::isfinite(v)) {
      r.lo = std::min(r.lo, v);
      r.hi = std::max(r.hi, v);
    }
  if (!(r.lo <= r.hi)) return fallback;
  if (r.hi - r.lo < 1e-12) {
    r.lo -= 0.5;
    r.hi += 0.5;
  }
  return r;
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(5);
  os << v;
  return os.str();
}

}  // namespace

void write_svg(const std::string& path, const std::vector<Panel>& panels, int columns,
               int panel_width, int panel_height) {
  const int rows = (static_cast<int>(panels.size()) + columns - 1) / columns;
  const int W = columns * panel_width;
  const int H = rows * panel_height;
  const double ml = 58, mr = 14, mt = 30, mb = 38;  // margins inside a panel

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\""
     << H << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  os << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";

  for (size_t p = 0; p < panels.size(); ++p) {
    const Panel& panel = panels[p];
    const double ox = static_cast<double>((p % columns) * panel_width);
    const double oy = static_cast<double>((p / columns) * panel_height);
    const double x0 = ox + ml, y0 = oy + mt;
    const double pw = panel_width - ml - mr, ph = panel_height - mt - mb;

    std::vector<double> all_x, all_y;
    for (const Series& s : panel.series) {
      all_x.insert(all_x.end(), s.x.begin(), s.x.end());
      all_y.insert(all_y.end(), s.y.begin(), s.y.end());
    }
    for (const Threshold& t : panel.thresholds) all_y.push_back(t.y);
    const Range rx = data_range(all_x, {0, 1});
    Range ry = data_range(all_y, {0, 1});
    const double pad = 0.06 * (ry.hi - ry.lo);
    ry.lo -= pad;
    ry.hi += pad;

    auto sx = [&](double v) { return x0 + (v - rx.lo) / (rx.hi - rx.lo) * pw; };
    auto sy = [&](double v) { return y0 + ph - (v - ry.lo) / (ry.hi - ry.lo) * ph; };
    auto clampy = [&](double v) { return std::min(std::max(v, ry.lo), ry.hi); };

    for (const Band& band : panel.bands) {
      const double ya = sy(clampy(std::max(band.y0, band.y1)));
      const double yb = sy(clampy(std::min(band.y0, band.y1)));
      if (yb - ya < 0.5) continue;
      os << "<rect x=\"" << num(x0) << "\" y=\"" << num(ya) << "\" width=\""
         << num(pw) << "\" height=\"" << num(yb - ya) << "\" fill=\"" << band.color
         << "\"/>\n";
    }

    // frame and labels
    os << "<rect x=\"" << num(x0) << "\" y=\"" << num(y0) << "\" width=\"" << num(pw)
       << "\" height=\"" << num(ph)
       << "\" fill=\"none\" stroke=\"#333\" stroke-width=\"1\"/>\n";
    os << "<text x=\"" << num(ox + panel_width / 2.0) << "\" y=\"" << num(oy + 18)
       << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\">"
       << panel.title << "</text>\n";
    os << "<text x=\"" << num(x0 + pw / 2.0) << "\" y=\"" << num(y0 + ph + 28)
       << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">"
       << panel.x_label << "</text>\n";
    os << "<text x=\"" << num(ox + 14) << "\" y=\"" << num(y0 + ph / 2.0)
       << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\" "
          "transform=\"rotate(-90 "
       << num(ox + 14) << " " << num(y0 + ph / 2.0) << ")\">" << panel.y_label
       << "</text>\n";
    // axis extent labels
    os << "<text x=\"" << num(x0 - 4) << "\" y=\"" << num(y0 + ph + 12)
       << "\" text-anchor=\"start\" font-size=\"10\" font-family=\"sans-serif\">"
       << num(rx.lo) << "</text>\n";
    os << "<text x=\"" << num(x0 + pw) << "\" y=\"" << num(y0 + ph + 12)
       << "\" text-anchor=\"end\" font-size=\"10\" font-family=\"sans-serif\">"
       << num(rx.hi) << "</text>\n";
    os << "<text x=\"" << num(x0 - 6) << "\" y=\"" << num(y0 + ph)
       << "\" text-anchor=\"end\" font-size=\"10\" font-family=\"sans-serif\">"
       << num(ry.lo) << "</text>\n";
    os << "<text x=\"" << num(x0 - 6) << "\" y=\"" << num(y0 + 10)
       << "\" text-anchor=\"end\" font-size=\"10\" font-family=\"sans-serif\">"
       << num(ry.hi) << "</text>\n";

    for (const Threshold& t : panel.thresholds) {
      os << "<line x1=\"" << num(x0) << "\" y1=\"" << num(sy(t.y)) << "\" x2=\""
         << num(x0 + pw) << "\" y2=\"" << num(sy(t.y)) << "\" stroke=\"" << t.color
         << "\" stroke-width=\"1\"" << (t.dashed ? " stroke-dasharray=\"5,4\"" : "")
         << "/>\n";
    }

    int legend_y = 0;
    for (const Series& s : panel.series) {
      os << "<polyline fill=\"none\" stroke=\"" << s.color
         << "\" stroke-width=\"1.4\" points=\"";
      bool pen_down = false;
      for (size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
          if (pen_down) {
            os << "\"/>\n<polyline fill=\"none\" stroke=\"" << s.color
               << "\" stroke-width=\"1.4\" points=\"";
            pen_down = false;
          }
          continue;
        }
        os << num(sx(s.x[i])) << "," << num(sy(clampy(s.y[i]))) << " ";
        pen_down = true;
      }
      os << "\"/>\n";
      if (!s.label.empty()) {
        os << "<text x=\"" << num(x0 + pw - 6) << "\" y=\""
           << num(y0 + 14 + 13 * legend_y)
           << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\" "
              "fill=\""
           << s.color << "\">" << s.label << "</text>\n";
        ++legend_y;
      }
    }
  }
  os << "</svg>\n";

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Fault("cannot write SVG file: " + path);
  out << os.str();
}

}  // namespace sail::svg
