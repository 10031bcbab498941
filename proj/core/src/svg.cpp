#include "srlp/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "srlp/common.hpp"

namespace srlp::svg {

namespace {

constexpr double kWidth = 480.0;
constexpr double kHeight = 360.0;
constexpr double kMargin = 50.0;

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

void header(std::ostream& out, const std::string& title) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
      << "</text>\n";
  out << "<line x1=\"" << kMargin << "\" y1=\"" << kHeight - kMargin << "\" x2=\"" << kWidth - kMargin / 2
      << "\" y2=\"" << kHeight - kMargin << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << kMargin << "\" y1=\"" << kMargin / 2 + 10 << "\" x2=\"" << kMargin << "\" y2=\""
      << kHeight - kMargin << "\" stroke=\"black\"/>\n";
}

std::pair<double, double> padded_range(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 1.0};
  auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  double a = *lo;
  double b = *hi;
  if (!(b > a)) {
    a -= 0.5;
    b += 0.5;
  }
  return {a, b};
}

}  // namespace

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

void scatter(std::ostream& out, const std::string& title, const std::string& x_label, const std::string& y_label,
             const Series& points) {
  require(points.x.size() == points.y.size(), "svg::scatter: x and y differ in length");
  header(out, title);
  const auto [x0, x1] = padded_range(points.x);
  const auto [y0, y1] = padded_range(points.y);
  const double pw = kWidth - 1.5 * kMargin;
  const double ph = kHeight - 1.5 * kMargin - 10.0;
  for (std::size_t i = 0; i < points.x.size(); ++i) {
    const double px = kMargin + (points.x[i] - x0) / (x1 - x0) * pw;
    const double py = kHeight - kMargin - (points.y[i] - y0) / (y1 - y0) * ph;
    out << "<circle cx=\"" << fixed(px) << "\" cy=\"" << fixed(py) << "\" r=\"1.5\" fill=\"steelblue\" "
        << "fill-opacity=\"0.5\"/>\n";
  }
  out << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\" font-size=\"12\">"
      << escape(x_label) << " [" << fixed(x0) << ", " << fixed(x1) << "]</text>\n";
  out << "<text x=\"14\" y=\"" << kHeight / 2 << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 "
      << kHeight / 2 << ")\">" << escape(y_label) << " [" << fixed(y0) << ", " << fixed(y1) << "]</text>\n";
  out << "</svg>\n";
}

void bars(std::ostream& out, const std::string& title, const std::vector<std::string>& labels,
          const std::vector<double>& values) {
  require(labels.size() == values.size(), "svg::bars: labels and values differ in length");
  header(out, title);
  double top = 0.0;
  for (double v : values) top = std::max(top, v);
  if (!(top > 0.0)) top = 1.0;
  const double pw = kWidth - 1.5 * kMargin;
  const double ph = kHeight - 1.5 * kMargin - 10.0;
  const double slot = values.empty() ? pw : pw / static_cast<double>(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double h = std::max(values[i], 0.0) / top * ph;
    const double x = kMargin + slot * static_cast<double>(i) + 0.1 * slot;
    out << "<rect x=\"" << fixed(x) << "\" y=\"" << fixed(kHeight - kMargin - h) << "\" width=\"" << fixed(0.8 * slot)
        << "\" height=\"" << fixed(h) << "\" fill=\"steelblue\"/>\n";
    out << "<text x=\"" << fixed(x + 0.4 * slot) << "\" y=\"" << kHeight - kMargin + 14
        << "\" text-anchor=\"middle\" font-size=\"10\">" << escape(labels[i]) << "</text>\n";
    out << "<text x=\"" << fixed(x + 0.4 * slot) << "\" y=\"" << fixed(kHeight - kMargin - h - 3)
        << "\" text-anchor=\"middle\" font-size=\"9\">" << fixed(values[i]) << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace srlp::svg
