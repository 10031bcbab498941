#include "srlp/simulator.hpp"

#include <cmath>
#include <limits>
#include <ostream>

namespace srlp::sim {

std::string to_string(Action a) {
  switch (a) {
    case Action::forward:
      return "forward";
    case Action::turn_left:
      return "turn_left";
    case Action::turn_right:
      return "turn_right";
  }
  return "unknown";
}

Action action_from_index(std::size_t i) {
  require(i < kActionCount, "action index out of range");
  return static_cast<Action>(i);
}

std::string to_string(Terminal t) {
  switch (t) {
    case Terminal::none:
      return "none";
    case Terminal::reached:
      return "reached";
    case Terminal::crashed:
      return "crashed";
    case Terminal::timeout:
      return "timeout";
  }
  return "unknown";
}

std::string to_string(RewardKind k) { return k == RewardKind::distance ? "distance" : "orientation"; }

void EnvConfig::validate() const {
  auto fail = [](const char* field, const std::string& why) { throw ConfigError(field, 0, std::string(field) + ": " + why); };
  if (!(eta1 > 0.0)) fail("env.eta1", "must be > 0");
  if (!(eta2 > 0.0)) fail("env.eta2", "must be > 0");
  if (!(d_min > 0.0)) fail("env.d_min", "must be > 0");
  if (max_steps <= 0) fail("env.max_steps", "must be > 0");
  if (n_beams <= 0) fail("env.n_beams", "must be > 0");
  if (n_px <= 0) fail("env.n_px", "must be > 0");
  if (!(max_range > 0.0)) fail("env.max_range", "must be > 0");
  if (!(step_length > 0.0)) fail("env.step_length", "must be > 0");
  if (!(turn_angle > 0.0 && turn_angle < std::numbers::pi)) fail("env.turn_angle_deg", "must be in (0, 180)");
  if (!(robot_radius > 0.0)) fail("env.robot_radius", "must be > 0");
  if (!(camera_fov > 0.0 && camera_fov < 2.0 * std::numbers::pi)) fail("env.camera_fov_deg", "must be in (0, 360)");
}

RayHit ray_cast(const WorldMap& map, geo::Vec2 origin, double direction, double max_range) {
  const geo::Vec2 dir = geo::heading(direction);
  RayHit hit;
  hit.range = max_range;
  for (std::size_t i = 0; i < map.walls.size(); ++i) {
    const auto& w = map.walls[i];
    if (auto t = geo::ray_segment_hit(origin, dir, w.a, w.b); t && *t < hit.range) {
      hit.range = *t;
      hit.color = w.color;
      hit.wall = i;
    }
  }
  return hit;
}

std::vector<double> lidar_scan(const WorldMap& map, const Pose& pose, int n_beams, double max_range) {
  std::vector<double> ranges(static_cast<std::size_t>(n_beams));
  const geo::Vec2 origin{pose.x, pose.y};
  for (int k = 0; k < n_beams; ++k) {
    const double angle = pose.theta + 2.0 * std::numbers::pi * k / n_beams;
    ranges[static_cast<std::size_t>(k)] = ray_cast(map, origin, angle, max_range).range;
  }
  return ranges;
}

std::vector<Rgb> camera_render(const WorldMap& map, const Pose& pose, double fov, int n_px, double max_range) {
  std::vector<Rgb> strip(static_cast<std::size_t>(n_px));
  const geo::Vec2 origin{pose.x, pose.y};
  const double pixel = fov / n_px;
  for (int j = 0; j < n_px; ++j) {
    const double angle = pose.theta + 0.5 * fov - (j + 0.5) * pixel;
    const auto hit = ray_cast(map, origin, angle, max_range);
    strip[static_cast<std::size_t>(j)] = hit.color.value_or(Rgb{});
  }
  return strip;
}

double reward_distance(double d, bool crashed, const EnvConfig& cfg) {
  if (d <= cfg.d_min) return cfg.r_reached;
  if (crashed) return cfg.r_crashed;
  return 1.0 - std::exp(cfg.eta1 * d);
}

double reward_orientation(double theta_err, double d, bool crashed, const EnvConfig& cfg) {
  if (d <= cfg.d_min) return cfg.r_reached;
  if (crashed) return cfg.r_crashed;
  return 1.0 - std::exp(cfg.eta2 * theta_err);
}

Environment::Environment(WorldMap map, EnvConfig cfg)
    : map_(std::move(map)), cfg_(std::move(cfg)), rng_(make_rng(cfg_.seed, Stream::env)) {
  cfg_.validate();
  for (const auto& t : map_.targets)
    if (map_.clearance(t) <= cfg_.robot_radius)
      throw ContractViolation("layout '" + map_.name + "': a target is closer to a wall than the robot radius");
}

Environment::Environment(EnvConfig cfg) : Environment(resolve_layout(cfg.layout), cfg) {}

Observation Environment::reset() {
  std::uniform_real_distribution<double> ux(map_.spawn.xmin, map_.spawn.xmax);
  std::uniform_real_distribution<double> uy(map_.spawn.ymin, map_.spawn.ymax);
  std::uniform_real_distribution<double> ut(map_.spawn_theta_min, map_.spawn_theta_max);
  bool placed = false;
  for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
    Pose p{ux(rng_), uy(rng_), geo::normalize_angle(ut(rng_))};
    if (map_.clearance({p.x, p.y}) > cfg_.robot_radius) {
      pose_ = p;
      placed = true;
    }
  }
  if (!placed) throw ContractViolation("layout '" + map_.name + "': spawn region has no free space");

  if (cfg_.multi_target) {
    std::uniform_int_distribution<int> pick(0, static_cast<int>(map_.targets.size()) - 1);
    target_id_ = pick(rng_);
  } else {
    target_id_ = 0;
  }
  steps_ = 0;
  started_ = true;
  terminal_ = Terminal::none;
  return observe();
}

void Environment::set_pose(const Pose& pose) {
  require(map_.clearance({pose.x, pose.y}) > cfg_.robot_radius, "set_pose: pose is not in free space");
  pose_ = pose;
  pose_.theta = geo::normalize_angle(pose.theta);
  started_ = true;
  terminal_ = Terminal::none;
}

Observation Environment::observe() const {
  Observation obs;
  obs.lidar = lidar_scan(map_, pose_, cfg_.n_beams, cfg_.max_range);
  obs.camera = camera_render(map_, pose_, cfg_.camera_fov, cfg_.n_px, cfg_.max_range);
  if (cfg_.multi_target) obs.target_xy = active_target();
  return obs;
}

Truth Environment::truth() const {
  Truth t;
  t.pose = pose_;
  const geo::Vec2 target = active_target();
  const geo::Vec2 delta = target - geo::Vec2{pose_.x, pose_.y};
  t.distance = geo::norm(delta);
  t.heading_error = std::abs(geo::normalize_angle(std::atan2(delta.y, delta.x) - pose_.theta));
  t.target_id = target_id_;
  return t;
}

bool Environment::motion_collides(geo::Vec2 from, geo::Vec2 to) const {
  for (const auto& w : map_.walls)
    if (geo::segment_segment_distance(from, to, w.a, w.b) < cfg_.robot_radius) return true;
  return false;
}

double Environment::current_reward(bool crashed) const {
  const Truth t = truth();
  if (cfg_.reward == RewardKind::distance) return reward_distance(t.distance, crashed, cfg_);
  return reward_orientation(t.heading_error, t.distance, crashed, cfg_);
}

StepResult Environment::step(Action action) {
  if (!started_) throw ContractViolation("step: reset() has not been called");
  if (terminal_ != Terminal::none) throw ContractViolation("step: episode already terminated");

  bool crashed = false;
  switch (action) {
    case Action::forward: {
      const geo::Vec2 from{pose_.x, pose_.y};
      const geo::Vec2 to = from + cfg_.step_length * geo::heading(pose_.theta);
      if (motion_collides(from, to)) {
        crashed = true;
      } else {
        pose_.x = to.x;
        pose_.y = to.y;
      }
      break;
    }
    case Action::turn_left:
      pose_.theta = geo::normalize_angle(pose_.theta + cfg_.turn_angle);
      break;
    case Action::turn_right:
      pose_.theta = geo::normalize_angle(pose_.theta - cfg_.turn_angle);
      break;
  }
  ++steps_;

  StepResult r;
  r.truth = truth();
  r.reward = current_reward(crashed);
  if (crashed) {
    r.terminal = Terminal::crashed;
  } else if (r.truth.distance <= cfg_.d_min) {
    r.terminal = Terminal::reached;
  } else if (steps_ >= cfg_.max_steps) {
    r.terminal = Terminal::timeout;
  }
  terminal_ = r.terminal;
  r.observation = observe();
  return r;
}

void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryRow>& rows) {
  out << "step,x,y,theta,action,reward,terminal\n";
  for (const auto& r : rows) {
    out << r.step << ',' << format_real(r.pose.x) << ',' << format_real(r.pose.y) << ',' << format_real(r.pose.theta)
        << ',' << (r.action ? to_string(*r.action) : std::string("none")) << ',' << format_real(r.reward) << ','
        << to_string(r.terminal) << '\n';
  }
}

}  // namespace srlp::sim
