#include "chaoskit/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "chaoskit/errors.hpp"

namespace chaoskit::svg {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

void write_line_plot(const std::string& path, const PlotSpec& spec,
                     const std::vector<Series>& series) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("write_line_plot: cannot open " + path);

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      double y = s.y[i];
      if (spec.log_y) {
        if (!(y > 0.0)) continue;
        y = std::log10(y);
      }
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  }
  if (!(xmin <= xmax)) {
    xmin = 0.0;
    xmax = 1.0;
  }
  if (!(ymin <= ymax)) {
    ymin = 0.0;
    ymax = 1.0;
  }
  if (xmax == xmin) xmax = xmin + 1.0;
  if (ymax == ymin) {
    ymax += 0.5;
    ymin -= 0.5;
  }
  const double pad_y = 0.05 * (ymax - ymin);
  ymin -= pad_y;
  ymax += pad_y;

  const int w = spec.width, h = spec.height;
  const int ml = 70, mr = 20, mt = 40, mb = 50;
  auto px = [&](double x) {
    return ml + (x - xmin) / (xmax - xmin) * (w - ml - mr);
  };
  auto py = [&](double yv) {
    const double y = spec.log_y ? std::log10(yv) : yv;
    return h - mb - (y - ymin) / (ymax - ymin) * (h - mt - mb);
  };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
      << "\" height=\"" << h << "\" viewBox=\"0 0 " << w << " " << h
      << "\">\n";
  out << "<rect width=\"" << w << "\" height=\"" << h
      << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << w / 2 << "\" y=\"22\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"15\">" << spec.title
      << "</text>\n";

  // Axes box and ticks.
  out << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\""
      << w - ml - mr << "\" height=\"" << h - mt - mb
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  const int n_ticks = 5;
  for (int t = 0; t <= n_ticks; ++t) {
    const double fx = xmin + (xmax - xmin) * t / n_ticks;
    const double gx = px(fx);
    out << "<line x1=\"" << num(gx) << "\" y1=\"" << h - mb << "\" x2=\""
        << num(gx) << "\" y2=\"" << h - mb + 5
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << num(gx) << "\" y=\"" << h - mb + 18
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        << "font-size=\"11\">" << num(fx) << "</text>\n";
    const double fy = ymin + (ymax - ymin) * t / n_ticks;
    const double gy = h - mb - (fy - ymin) / (ymax - ymin) * (h - mt - mb);
    out << "<line x1=\"" << ml - 5 << "\" y1=\"" << num(gy) << "\" x2=\""
        << ml << "\" y2=\"" << num(gy) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << ml - 8 << "\" y=\"" << num(gy + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
        << "font-size=\"11\">"
        << (spec.log_y ? "1e" + num(fy) : num(fy)) << "</text>\n";
  }
  out << "<text x=\"" << w / 2 << "\" y=\"" << h - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"13\">" << spec.x_label << "</text>\n";
  out << "<text x=\"18\" y=\"" << h / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"13\" transform=\"rotate(-90 18 " << h / 2 << ")\">"
      << spec.y_label << "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& sr = series[s];
    const char* color = kPalette[s % 8];
    out << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < sr.x.size(); ++i) {
      if (spec.log_y && !(sr.y[i] > 0.0)) continue;
      out << num(px(sr.x[i])) << "," << num(py(sr.y[i])) << " ";
    }
    out << "\"/>\n";
    // Legend swatch.
    const int ly = mt + 16 + static_cast<int>(s) * 16;
    out << "<line x1=\"" << w - mr - 130 << "\" y1=\"" << ly << "\" x2=\""
        << w - mr - 105 << "\" y2=\"" << ly << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << w - mr - 100 << "\" y=\"" << ly + 4
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << sr.label
        << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace chaoskit::svg
