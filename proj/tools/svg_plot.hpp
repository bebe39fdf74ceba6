#pragma once

// Minimal self-contained SVG line plots for the evaluate subcommand.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

namespace bleloc_cli {

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

inline void write_svg_plot(const std::string& path, const std::vector<PlotSeries>& series,
                           const std::string& x_label, const std::string& y_label,
                           const std::string& title) {
  const int width = 760, height = 520;
  const int ml = 70, mr = 160, mt = 40, mb = 55;
  const double pw = width - ml - mr, ph = height - mt - mb;

  double x_min = 0, x_max = 1, y_min = 0, y_max = 1;
  bool first = true;
  for (const auto& s : series)
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (first) {
        x_min = x_max = s.x[i];
        y_min = y_max = s.y[i];
        first = false;
      }
      x_min = std::min(x_min, s.x[i]);
      x_max = std::max(x_max, s.x[i]);
      y_min = std::min(y_min, s.y[i]);
      y_max = std::max(y_max, s.y[i]);
    }
  if (x_max <= x_min) x_max = x_min + 1;
  if (y_max <= y_min) y_max = y_min + 1;

  auto sx = [&](double x) { return ml + pw * (x - x_min) / (x_max - x_min); };
  auto sy = [&](double y) { return mt + ph * (1.0 - (y - y_min) / (y_max - y_min)); };

  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                 "#9467bd", "#8c564b", "#e377c2"};

  std::ofstream out(path);
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
      << "' font-family='sans-serif' font-size='13'>\n";
  out << "<rect width='100%' height='100%' fill='white'/>\n";
  out << "<text x='" << ml + pw / 2 << "' y='22' text-anchor='middle' font-size='16'>" << title
      << "</text>\n";

  // axes + ticks
  out << "<g stroke='#333' stroke-width='1'>\n";
  out << "<line x1='" << ml << "' y1='" << mt + ph << "' x2='" << ml + pw << "' y2='" << mt + ph
      << "'/>\n";
  out << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << mt + ph << "'/>\n";
  out << "</g>\n";
  for (int k = 0; k <= 5; ++k) {
    const double xv = x_min + (x_max - x_min) * k / 5.0;
    const double yv = y_min + (y_max - y_min) * k / 5.0;
    char buf[32];
    snprintf(buf, sizeof buf, "%.3g", xv);
    out << "<text x='" << sx(xv) << "' y='" << mt + ph + 18 << "' text-anchor='middle'>" << buf
        << "</text>\n";
    snprintf(buf, sizeof buf, "%.3g", yv);
    out << "<text x='" << ml - 8 << "' y='" << sy(yv) + 4 << "' text-anchor='end'>" << buf
        << "</text>\n";
    out << "<line x1='" << sx(xv) << "' y1='" << mt + ph << "' x2='" << sx(xv) << "' y2='"
        << mt + ph + 4 << "' stroke='#333'/>\n";
    out << "<line x1='" << ml - 4 << "' y1='" << sy(yv) << "' x2='" << ml << "' y2='" << sy(yv)
        << "' stroke='#333'/>\n";
  }
  out << "<text x='" << ml + pw / 2 << "' y='" << height - 12 << "' text-anchor='middle'>"
      << x_label << "</text>\n";
  out << "<text x='18' y='" << mt + ph / 2 << "' text-anchor='middle' transform='rotate(-90 18 "
      << mt + ph / 2 << ")'>" << y_label << "</text>\n";

  for (size_t s = 0; s < series.size(); ++s) {
    const auto& ser = series[s];
    const char* color = colors[s % 7];
    out << "<polyline fill='none' stroke='" << color << "' stroke-width='1.8' points='";
    for (size_t i = 0; i < ser.x.size(); ++i) out << sx(ser.x[i]) << ',' << sy(ser.y[i]) << ' ';
    out << "'/>\n";
    const double ly = mt + 16 + 20 * static_cast<double>(s);
    out << "<line x1='" << ml + pw + 12 << "' y1='" << ly << "' x2='" << ml + pw + 36 << "' y2='"
        << ly << "' stroke='" << color << "' stroke-width='2'/>\n";
    out << "<text x='" << ml + pw + 42 << "' y='" << ly + 4 << "'>" << ser.name << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace bleloc_cli
