#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "srlp/common.hpp"
#include "srlp/layout.hpp"

// Deterministic 2D differential-drive world with a raycast range scanner and a
// raycast color-strip camera.
namespace srlp::sim {

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;  // (-pi, pi]
};

enum class Action : std::uint8_t { forward = 0, turn_left = 1, turn_right = 2 };
inline constexpr std::size_t kActionCount = 3;
std::string to_string(Action a);
Action action_from_index(std::size_t i);

enum class Terminal : std::uint8_t { none = 0, reached = 1, crashed = 2, timeout = 3 };
std::string to_string(Terminal t);

enum class RewardKind : std::uint8_t { distance = 0, orientation = 1 };
std::string to_string(RewardKind k);

struct Observation {
  std::vector<double> lidar;            // meters, n_beams, 360 degree span
  std::vector<Rgb> camera;              // n_px pixels, left to right
  std::optional<geo::Vec2> target_xy;   // multi-target mode only
};

/// Ground truth for analysis; never fed to the learners except in the
/// ground-truth baseline.
struct Truth {
  Pose pose;
  double distance = 0.0;       // to the active target
  double heading_error = 0.0;  // |angle from heading to target|, [0, pi]
  int target_id = 0;
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  Terminal terminal = Terminal::none;
  Truth truth;
};

struct EnvConfig {
  std::string layout = "Env1";
  RewardKind reward = RewardKind::distance;
  double eta1 = 0.5;
  double eta2 = 0.5;
  double d_min = 0.25;
  double r_reached = 100.0;
  double r_crashed = -100.0;
  double max_range = 5.0;
  int n_beams = 36;
  int n_px = 32;
  double camera_fov = std::numbers::pi / 3.0;
  double step_length = 0.15;
  double turn_angle = 15.0 * std::numbers::pi / 180.0;
  double robot_radius = 0.15;
  int max_steps = 500;
  bool multi_target = false;
  std::uint64_t seed = 0;

  /// Throws ConfigError on the first broken invariant.
  void validate() const;
};

struct RayHit {
  double range = 0.0;
  std::optional<Rgb> color;
  std::optional<std::size_t> wall;
};

RayHit ray_cast(const WorldMap& map, geo::Vec2 origin, double direction, double max_range);

/// Beam k points at theta + 2*pi*k/n_beams.
std::vector<double> lidar_scan(const WorldMap& map, const Pose& pose, int n_beams, double max_range);

/// Pixel j looks at theta + fov/2 - (j + 0.5) * fov/n_px; misses are black.
std::vector<Rgb> camera_render(const WorldMap& map, const Pose& pose, double fov, int n_px, double max_range);

double reward_distance(double d, bool crashed, const EnvConfig& cfg);
double reward_orientation(double theta_err, double d, bool crashed, const EnvConfig& cfg);

class Environment {
 public:
  Environment(WorldMap map, EnvConfig cfg);
  explicit Environment(EnvConfig cfg);

  /// Places the robot in the spawn region and, in multi-target mode, draws
  /// the active target uniformly.
  Observation reset();
  StepResult step(Action action);

  const WorldMap& map() const { return map_; }
  const EnvConfig& config() const { return cfg_; }
  const Pose& pose() const { return pose_; }
  geo::Vec2 active_target() const { return map_.targets.at(static_cast<std::size_t>(target_id_)); }
  Truth truth() const;
  Observation observe() const;
  bool episode_over() const { return terminal_ != Terminal::none; }
  int steps() const { return steps_; }

  /// Test hook: place the robot directly. Must be in free space.
  void set_pose(const Pose& pose);

 private:
  double current_reward(bool crashed) const;
  bool motion_collides(geo::Vec2 from, geo::Vec2 to) const;

  WorldMap map_;
  EnvConfig cfg_;
  Rng rng_;
  Pose pose_;
  int target_id_ = 0;
  int steps_ = 0;
  bool started_ = false;
  Terminal terminal_ = Terminal::none;
};

struct TrajectoryRow {
  int step = 0;
  Pose pose;
  std::optional<Action> action;
  double reward = 0.0;
  Terminal terminal = Terminal::none;
};

/// CSV columns: step,x,y,theta,action,reward,terminal
void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryRow>& rows);

}  // namespace srlp::sim
