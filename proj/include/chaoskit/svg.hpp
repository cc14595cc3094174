#pragma once

#include <string>
#include <vector>

namespace chaoskit::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
  int width = 820;
  int height = 560;
};

/// Writes a deterministic line plot (no timestamps or randomness).
void write_line_plot(const std::string& path, const PlotSpec& spec,
                     const std::vector<Series>& series);

}  // namespace chaoskit::svg
