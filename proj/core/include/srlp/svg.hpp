#pragma once

#include <iosfwd>
#include <string>
#include <vector>

// Minimal self-contained SVG charts for inspecting analysis outputs.
namespace srlp::svg {

struct Series {
  std::vector<double> x;
  std::vector<double> y;
};

/// Scatter plot with axis labels and the data range printed on each axis.
void scatter(std::ostream& out, const std::string& title, const std::string& x_label, const std::string& y_label,
             const Series& points);

/// Vertical bar chart, one bar per label.
void bars(std::ostream& out, const std::string& title, const std::vector<std::string>& labels,
          const std::vector<double>& values);

/// Escapes &, <, > and quotes for use inside SVG text.
std::string escape(const std::string& text);

}  // namespace srlp::svg
