#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "srlp/geometry.hpp"

namespace srlp::sim {

struct Rgb {
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

struct Wall {
  geo::Vec2 a;
  geo::Vec2 b;
  Rgb color;
};

struct Rect {
  double xmin = 0.0;
  double ymin = 0.0;
  double xmax = 0.0;
  double ymax = 0.0;

  bool contains(geo::Vec2 p) const { return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax; }
  geo::Vec2 center() const { return {0.5 * (xmin + xmax), 0.5 * (ymin + ymax)}; }
};

/// Room geometry: colored wall segments, an axis-aligned bounds rectangle the
/// walls enclose, a spawn region and the navigation targets. Target 0 is the
/// single-target goal; multi-target runs draw uniformly from all of them.
struct WorldMap {
  std::string name;
  Rect bounds;
  Rect spawn;
  double spawn_theta_min = -3.141592653589793;
  double spawn_theta_max = 3.141592653589793;
  std::vector<geo::Vec2> targets;
  std::vector<Wall> walls;

  /// Smallest distance from `p` to any wall.
  double clearance(geo::Vec2 p) const;
  /// True if wall `i` lies on the bounds rectangle.
  bool is_boundary_wall(std::size_t i) const;
  /// The bounds perimeter is fully covered by walls (no escape path).
  bool encloses_bounds() const;
  /// Whether the open segment [p, q] crosses any interior (non-boundary) wall.
  bool interior_blocks(geo::Vec2 p, geo::Vec2 q) const;
};

/// Layout text format, one `key = value` per line:
///   name = Env1
///   bounds = xmin ymin xmax ymax
///   spawn = xmin ymin xmax ymax
///   spawn_theta_deg = min max        (optional, default -180 180)
///   target = x y                     (repeatable, at least one)
///   wall = x1 y1 x2 y2 r g b         (repeatable, colors in [0,1])
WorldMap parse_layout(std::string_view text, const std::string& source = "<layout>");
WorldMap load_layout(const std::string& path);

std::vector<std::string> builtin_layout_names();
std::string builtin_layout_text(std::string_view name);
WorldMap builtin_layout(std::string_view name);

/// Built-in name (Env1..Env5) or a path to a layout file.
WorldMap resolve_layout(const std::string& name_or_path);

}  // namespace srlp::sim
