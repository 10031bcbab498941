#pragma once

#include <cmath>
#include <numbers>
#include <optional>

namespace srlp::geo {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2 a, Vec2 b) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline Vec2 heading(double theta) { return {std::cos(theta), std::sin(theta)}; }

/// Wraps an angle into (-pi, pi].
double normalize_angle(double theta);

/// Distance along the ray `origin + t*dir` (t >= 0, `dir` unit length) to the
/// segment [a, b]; nullopt when they do not meet. Parallel rays never hit.
std::optional<double> ray_segment_hit(Vec2 origin, Vec2 dir, Vec2 a, Vec2 b);

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b);

/// Minimum distance between segments [p0, p1] and [a, b]; 0 if they cross.
double segment_segment_distance(Vec2 p0, Vec2 p1, Vec2 a, Vec2 b);

bool segments_intersect(Vec2 p0, Vec2 p1, Vec2 a, Vec2 b);

}  // namespace srlp::geo
