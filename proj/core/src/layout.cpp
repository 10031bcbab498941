#include "srlp/layout.hpp"

#include <algorithm>
#include <array>
#include <numbers>
#include <utility>

#include "srlp/common.hpp"
#include "srlp/keyvalue.hpp"

namespace srlp::sim {

namespace {

// Kept byte-identical with the files under layouts/ (checked by the tests).
const std::array<std::pair<std::string_view, std::string_view>, 5> kBuiltins = {{
    {"Env1", R"LAYOUT(# Plain 4 m x 4 m square room, achromatic walls.
name = Env1
bounds = -2 -2 2 2
spawn = -1.5 -1.5 -1.1 -1.1
spawn_theta_deg = -180 180
target = 1.2 1.2
target = 1.2 -1.2
wall = -2 -2 2 -2  0.3 0.3 0.3
wall = 2 -2 2 2  0.45 0.45 0.45
wall = 2 2 -2 2  0.6 0.6 0.6
wall = -2 2 -2 -2  0.75 0.75 0.75
)LAYOUT"},
    {"Env2", R"LAYOUT(# 4 m x 4 m square room with distinctly colored walls.
name = Env2
bounds = -2 -2 2 2
spawn = -1.5 -1.5 -1.1 -1.1
spawn_theta_deg = -180 180
target = 1.2 1.2
target = 1.2 -1.2
wall = -2 -2 2 -2  0.85 0.15 0.15
wall = 2 -2 2 2  0.15 0.7 0.2
wall = 2 2 -2 2  0.2 0.3 0.9
wall = -2 2 -2 -2  0.9 0.8 0.1
)LAYOUT"},
    {"Env3", R"LAYOUT(# Env1 plus one interior box obstacle on the straight spawn-to-target line.
name = Env3
bounds = -2 -2 2 2
spawn = -1.5 -1.5 -1.1 -1.1
spawn_theta_deg = -180 180
target = 1.2 1.2
target = 1.2 -1.2
wall = -2 -2 2 -2  0.3 0.3 0.3
wall = 2 -2 2 2  0.45 0.45 0.45
wall = 2 2 -2 2  0.6 0.6 0.6
wall = -2 2 -2 -2  0.75 0.75 0.75
wall = -0.45 -0.45 0.45 -0.45  0.45 0.25 0.1
wall = 0.45 -0.45 0.45 0.45  0.45 0.25 0.1
wall = 0.45 0.45 -0.45 0.45  0.45 0.25 0.1
wall = -0.45 0.45 -0.45 -0.45  0.45 0.25 0.1
)LAYOUT"},
    {"Env4", R"LAYOUT(# 5 m x 3.5 m rectangular room, colored walls.
name = Env4
bounds = -2.5 -1.75 2.5 1.75
spawn = -2.1 -1.35 -1.7 -0.95
spawn_theta_deg = -180 180
target = 2 1.1
target = 2 -1.1
wall = -2.5 -1.75 2.5 -1.75  0.2 0.3 0.9
wall = 2.5 -1.75 2.5 1.75  0.9 0.8 0.1
wall = 2.5 1.75 -2.5 1.75  0.85 0.15 0.15
wall = -2.5 1.75 -2.5 -1.75  0.15 0.7 0.2
)LAYOUT"},
    {"Env5", R"LAYOUT(# 3.5 m x 4.5 m rectangular room, striped (textured) walls.
name = Env5
bounds = -1.75 -2.25 1.75 2.25
spawn = -1.35 -1.85 -0.95 -1.45
spawn_theta_deg = -180 180
target = 1.1 1.7
target = 1.1 -1.7
wall = -1.75 -2.25 -1.25 -2.25  0.9 0.9 0.9
wall = -1.25 -2.25 -0.75 -2.25  0.2 0.2 0.6
wall = -0.75 -2.25 -0.25 -2.25  0.8 0.4 0.1
wall = -0.25 -2.25 0.25 -2.25  0.9 0.9 0.9
wall = 0.25 -2.25 0.75 -2.25  0.2 0.2 0.6
wall = 0.75 -2.25 1.25 -2.25  0.8 0.4 0.1
wall = 1.25 -2.25 1.75 -2.25  0.9 0.9 0.9
wall = 1.75 -2.25 1.75 -1.75  0.2 0.2 0.6
wall = 1.75 -1.75 1.75 -1.25  0.8 0.4 0.1
wall = 1.75 -1.25 1.75 -0.75  0.9 0.9 0.9
wall = 1.75 -0.75 1.75 -0.25  0.2 0.2 0.6
wall = 1.75 -0.25 1.75 0.25  0.8 0.4 0.1
wall = 1.75 0.25 1.75 0.75  0.9 0.9 0.9
wall = 1.75 0.75 1.75 1.25  0.2 0.2 0.6
wall = 1.75 1.25 1.75 1.75  0.8 0.4 0.1
wall = 1.75 1.75 1.75 2.25  0.9 0.9 0.9
wall = 1.75 2.25 1.25 2.25  0.2 0.2 0.6
wall = 1.25 2.25 0.75 2.25  0.8 0.4 0.1
wall = 0.75 2.25 0.25 2.25  0.9 0.9 0.9
wall = 0.25 2.25 -0.25 2.25  0.2 0.2 0.6
wall = -0.25 2.25 -0.75 2.25  0.8 0.4 0.1
wall = -0.75 2.25 -1.25 2.25  0.9 0.9 0.9
wall = -1.25 2.25 -1.75 2.25  0.2 0.2 0.6
wall = -1.75 2.25 -1.75 1.75  0.8 0.4 0.1
wall = -1.75 1.75 -1.75 1.25  0.9 0.9 0.9
wall = -1.75 1.25 -1.75 0.75  0.2 0.2 0.6
wall = -1.75 0.75 -1.75 0.25  0.8 0.4 0.1
wall = -1.75 0.25 -1.75 -0.25  0.9 0.9 0.9
wall = -1.75 -0.25 -1.75 -0.75  0.2 0.2 0.6
wall = -1.75 -0.75 -1.75 -1.25  0.8 0.4 0.1
wall = -1.75 -1.25 -1.75 -1.75  0.9 0.9 0.9
wall = -1.75 -1.75 -1.75 -2.25  0.2 0.2 0.6
)LAYOUT"},
}};

constexpr double kDeg = std::numbers::pi / 180.0;

std::vector<double> numbers(const KeyValueEntry& e, std::size_t count, const std::string& source) {
  auto v = parse_reals(e.value, e.key, e.line);
  if (v.size() != count)
    throw FormatError(source + ":" + std::to_string(e.line) + ": '" + e.key + "' expects " + std::to_string(count) +
                      " numbers, got " + std::to_string(v.size()));
  return v;
}

bool on_segment(geo::Vec2 p, const Wall& w) { return geo::point_segment_distance(p, w.a, w.b) < 1e-9; }

}  // namespace

double WorldMap::clearance(geo::Vec2 p) const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& w : walls) best = std::min(best, geo::point_segment_distance(p, w.a, w.b));
  return best;
}

bool WorldMap::is_boundary_wall(std::size_t i) const {
  const auto& w = walls.at(i);
  auto on_edge = [&](geo::Vec2 p) {
    constexpr double tol = 1e-9;
    const bool x_edge = std::abs(p.x - bounds.xmin) < tol || std::abs(p.x - bounds.xmax) < tol;
    const bool y_edge = std::abs(p.y - bounds.ymin) < tol || std::abs(p.y - bounds.ymax) < tol;
    return std::pair{x_edge, y_edge};
  };
  auto [ax, ay] = on_edge(w.a);
  auto [bx, by] = on_edge(w.b);
  const bool vertical = std::abs(w.a.x - w.b.x) < 1e-9 && ax && bx;
  const bool horizontal = std::abs(w.a.y - w.b.y) < 1e-9 && ay && by;
  return vertical || horizontal;
}

bool WorldMap::encloses_bounds() const {
  const std::array<geo::Vec2, 5> corners = {geo::Vec2{bounds.xmin, bounds.ymin}, geo::Vec2{bounds.xmax, bounds.ymin},
                                            geo::Vec2{bounds.xmax, bounds.ymax}, geo::Vec2{bounds.xmin, bounds.ymax},
                                            geo::Vec2{bounds.xmin, bounds.ymin}};
  constexpr double spacing = 0.005;
  for (std::size_t e = 0; e < 4; ++e) {
    const geo::Vec2 a = corners[e];
    const geo::Vec2 b = corners[e + 1];
    const auto n = static_cast<int>(std::ceil(geo::norm(b - a) / spacing));
    for (int i = 0; i <= n; ++i) {
      const geo::Vec2 p = a + (static_cast<double>(i) / n) * (b - a);
      if (std::none_of(walls.begin(), walls.end(), [&](const Wall& w) { return on_segment(p, w); })) return false;
    }
  }
  return true;
}

bool WorldMap::interior_blocks(geo::Vec2 p, geo::Vec2 q) const {
  for (std::size_t i = 0; i < walls.size(); ++i) {
    if (is_boundary_wall(i)) continue;
    if (geo::segment_segment_distance(p, q, walls[i].a, walls[i].b) < 1e-9) return true;
  }
  return false;
}

WorldMap parse_layout(std::string_view text, const std::string& source) {
  WorldMap map;
  bool have_bounds = false;
  bool have_spawn = false;
  for (const auto& e : parse_key_values(text)) {
    if (e.key == "name") {
      map.name = e.value;
    } else if (e.key == "bounds" || e.key == "spawn") {
      auto v = numbers(e, 4, source);
      Rect r{v[0], v[1], v[2], v[3]};
      if (!(r.xmin < r.xmax && r.ymin < r.ymax))
        throw FormatError(source + ":" + std::to_string(e.line) + ": empty rectangle for '" + e.key + "'");
      (e.key == "bounds" ? map.bounds : map.spawn) = r;
      (e.key == "bounds" ? have_bounds : have_spawn) = true;
    } else if (e.key == "spawn_theta_deg") {
      auto v = numbers(e, 2, source);
      map.spawn_theta_min = v[0] * kDeg;
      map.spawn_theta_max = v[1] * kDeg;
    } else if (e.key == "target") {
      auto v = numbers(e, 2, source);
      map.targets.push_back({v[0], v[1]});
    } else if (e.key == "wall") {
      auto v = numbers(e, 7, source);
      for (std::size_t c = 4; c < 7; ++c)
        if (v[c] < 0.0 || v[c] > 1.0)
          throw FormatError(source + ":" + std::to_string(e.line) + ": wall color channel outside [0, 1]");
      map.walls.push_back({{v[0], v[1]}, {v[2], v[3]}, {v[4], v[5], v[6]}});
    } else {
      throw FormatError(source + ":" + std::to_string(e.line) + ": unknown key '" + e.key + "'");
    }
  }
  if (map.name.empty()) throw FormatError(source + ": missing 'name'");
  if (!have_bounds) throw FormatError(source + ": missing 'bounds'");
  if (!have_spawn) throw FormatError(source + ": missing 'spawn'");
  if (map.targets.empty()) throw FormatError(source + ": at least one 'target' is required");
  if (!map.encloses_bounds()) throw FormatError(source + ": walls do not enclose the bounds rectangle");
  for (const auto& t : map.targets)
    if (!map.bounds.contains(t) || map.clearance(t) <= 0.0)
      throw FormatError(source + ": target (" + format_real(t.x) + ", " + format_real(t.y) + ") is not in free space");
  return map;
}

WorldMap load_layout(const std::string& path) { return parse_layout(read_text_file(path), path); }

std::vector<std::string> builtin_layout_names() {
  std::vector<std::string> names;
  for (const auto& [name, text] : kBuiltins) names.emplace_back(name);
  return names;
}

std::string builtin_layout_text(std::string_view name) {
  for (const auto& [n, text] : kBuiltins)
    if (n == name) return std::string(text);
  throw FormatError("unknown built-in layout '" + std::string(name) + "'");
}

WorldMap builtin_layout(std::string_view name) {
  return parse_layout(builtin_layout_text(name), std::string(name));
}

WorldMap resolve_layout(const std::string& name_or_path) {
  for (const auto& [n, text] : kBuiltins)
    if (n == name_or_path) return parse_layout(text, name_or_path);
  return load_layout(name_or_path);
}

}  // namespace srlp::sim
