#pragma once

#include <string>
#include <vector>

namespace l2d {

/// One plotted series: x positions, y means, and symmetric error bar sizes.
struct SvgSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> y_err;  // may be empty (no bars)
};

/// Minimal static line chart with axes, ticks, legend, and error bars.
/// Deterministic output bytes for identical input.
std::string render_line_chart(const std::string& title,
                              const std::string& x_label,
                              const std::string& y_label,
                              const std::vector<SvgSeries>& series);

void write_line_chart(const std::string& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<SvgSeries>& series);

}  // namespace l2d
