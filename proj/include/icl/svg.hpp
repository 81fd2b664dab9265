#pragma once

#include <string>
#include <vector>

namespace icl::svg {

/// One line on a chart: mean values with an optional min/max band.
struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> mean;
  std::vector<double> lo;  // empty -> no band
  std::vector<double> hi;
};

/// Minimal SVG line chart: axes, ticks, legend, one polyline per series and
/// a translucent band where lo/hi are given. CSVs stay the authoritative
/// output; this is for eyeballing trends.
void write_line_chart(const std::string& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<Series>& series);

}  // namespace icl::svg
