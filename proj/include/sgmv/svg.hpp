#pragma once

#include <string>
#include <utility>
#include <vector>

namespace sgmv {

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

struct SvgOptions {
  std::string title;
  std::string x_label = "x";
  std::string y_label = "y";
  bool log_y = false;
  int width = 720;
  int height = 440;
};

/// Standalone SVG line chart, one <polyline> per series, a legend when there
/// is more than one series. Output is a pure function of the input. Throws
/// RenderError on empty input or non-finite (or, on a log axis, nonpositive)
/// values.
std::string render_svg_lines(const std::vector<Series>& series,
                             const SvgOptions& options);

void emit_svg_lines(const std::vector<Series>& series, const SvgOptions& options,
                    const std::string& path);

}  // namespace sgmv
