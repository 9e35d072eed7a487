#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace spdelab::app {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Minimal SVG line chart. With log_y, non-positive values are dropped.
void write_line_plot(const std::filesystem::path& file, const std::string& title, const std::string& x_label,
                     const std::string& y_label, const std::vector<PlotSeries>& series, bool log_y = false);

}  // namespace spdelab::app
