#include "srlp/geometry.hpp"

#include <algorithm>

namespace srlp::geo {

double normalize_angle(double theta) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double t = std::fmod(theta, two_pi);
  if (t <= -std::numbers::pi) t += two_pi;
  if (t > std::numbers::pi) t -= two_pi;
  return t;
}

std::optional<double> ray_segment_hit(Vec2 origin, Vec2 dir, Vec2 a, Vec2 b) {
  const Vec2 edge = b - a;
  const double denom = cross(dir, edge);
  if (std::abs(denom) < 1e-12) return std::nullopt;
  const Vec2 diff = a - origin;
  const double t = cross(diff, edge) / denom;
  const double u = cross(diff, dir) / denom;
  constexpr double tol = 1e-12;
  if (t < 0.0 || u < -tol || u > 1.0 + tol) return std::nullopt;
  return t;
}

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 edge = b - a;
  const double len2 = dot(edge, edge);
  if (len2 == 0.0) return norm(p - a);
  const double u = std::clamp(dot(p - a, edge) / len2, 0.0, 1.0);
  return norm(p - (a + u * edge));
}

bool segments_intersect(Vec2 p0, Vec2 p1, Vec2 a, Vec2 b) {
  const double d1 = cross(p1 - p0, a - p0);
  const double d2 = cross(p1 - p0, b - p0);
  const double d3 = cross(b - a, p0 - a);
  const double d4 = cross(b - a, p1 - a);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) return true;
  // Touching and colinear cases are covered by the endpoint distances.
  return false;
}

double segment_segment_distance(Vec2 p0, Vec2 p1, Vec2 a, Vec2 b) {
  if (segments_intersect(p0, p1, a, b)) return 0.0;
  return std::min({point_segment_distance(p0, a, b), point_segment_distance(p1, a, b),
                   point_segment_distance(a, p0, p1), point_segment_distance(b, p0, p1)});
}

}  // namespace srlp::geo
