#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace replab {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
};

struct PlotOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  int width = 720;
  int height = 480;
};

// Standalone SVG line plot with the series data embedded as comments.
void write_svg_lineplot(const std::filesystem::path& path,
                        const std::vector<PlotSeries>& series,
                        const PlotOptions& options);

}  // namespace replab
