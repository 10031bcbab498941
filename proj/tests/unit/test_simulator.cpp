#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "srlp/geometry.hpp"
#include "srlp/keyvalue.hpp"
#include "srlp/layout.hpp"
#include "srlp/simulator.hpp"

using namespace srlp;
using namespace srlp::sim;
using geo::Vec2;

namespace {

constexpr double kPi = std::numbers::pi;
const Rgb kRed{1.0, 0.0, 0.0};

WorldMap square_room(double half) {
  WorldMap m;
  m.name = "square";
  m.bounds = {-half, -half, half, half};
  m.spawn = {-0.1, -0.1, 0.1, 0.1};
  m.targets = {{0.5, 0.5}};
  m.walls = {{{-half, -half}, {half, -half}, kRed},
             {{half, -half}, {half, half}, kRed},
             {{half, half}, {-half, half}, kRed},
             {{-half, half}, {-half, -half}, kRed}};
  return m;
}

EnvConfig env_config(const std::string& layout, std::uint64_t seed) {
  EnvConfig cfg;
  cfg.layout = layout;
  cfg.seed = seed;
  return cfg;
}

bool same_pose(const Pose& a, const Pose& b) { return a.x == b.x && a.y == b.y && a.theta == b.theta; }

}  // namespace

TEST_SUITE("simulator") {
  TEST_CASE("normalize_angle wraps into (-pi, pi]") {
    CHECK(geo::normalize_angle(kPi) == doctest::Approx(kPi));
    CHECK(geo::normalize_angle(-kPi) == doctest::Approx(kPi));
    CHECK(geo::normalize_angle(3 * kPi / 2) == doctest::Approx(-kPi / 2));
    CHECK(geo::normalize_angle(0.25 + 4 * kPi) == doctest::Approx(0.25));
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-50.0, 50.0);
    for (int i = 0; i < 1000; ++i) {
      const double t = geo::normalize_angle(u(rng));
      CHECK(t > -kPi);
      CHECK(t <= kPi);
    }
  }

  TEST_CASE("segment distance helpers") {
    CHECK(geo::point_segment_distance({0, 1}, {-1, 0}, {1, 0}) == doctest::Approx(1.0));
    CHECK(geo::point_segment_distance({3, 0}, {-1, 0}, {1, 0}) == doctest::Approx(2.0));
    CHECK(geo::segments_intersect({-1, -1}, {1, 1}, {-1, 1}, {1, -1}));
    CHECK_FALSE(geo::segments_intersect({0, 0}, {1, 0}, {0, 1}, {1, 1}));
    CHECK(geo::segment_segment_distance({-1, -1}, {1, 1}, {-1, 1}, {1, -1}) == 0.0);
    CHECK(geo::segment_segment_distance({0, 0}, {1, 0}, {0, 1}, {1, 1}) == doctest::Approx(1.0));
  }

  TEST_CASE("ray_cast hits a wall straight ahead at the analytic range") {
    WorldMap m;
    m.walls = {{{2, -1}, {2, 1}, kRed}};
    const RayHit hit = ray_cast(m, {0, 0}, 0.0, 5.0);
    CHECK(hit.range == doctest::Approx(2.0));
    REQUIRE(hit.color.has_value());
    CHECK(*hit.color == kRed);
  }

  TEST_CASE("ray_cast clamps to max range on a miss") {
    WorldMap m;
    m.walls = {{{20, -1}, {20, 1}, kRed}};
    const RayHit hit = ray_cast(m, {0, 0}, 0.0, 5.0);
    CHECK(hit.range == 5.0);
    CHECK_FALSE(hit.color.has_value());
  }

  TEST_CASE("ray parallel to an offset wall misses") {
    WorldMap m;
    m.walls = {{{1, 0.5}, {4, 0.5}, kRed}};
    CHECK(ray_cast(m, {0, 0}, 0.0, 5.0).range == 5.0);
    WorldMap colinear;
    colinear.walls = {{{1, 0.0}, {4, 0.0}, kRed}};
    CHECK(ray_cast(colinear, {0, 0}, 0.0, 5.0).range == 5.0);
  }

  TEST_CASE("lidar in a centered square room reads the half width") {
    const WorldMap m = square_room(2.0);
    const auto scan = lidar_scan(m, {0, 0, 0}, 4, 5.0);
    REQUIRE(scan.size() == 4);
    for (double r : scan) CHECK(r == doctest::Approx(2.0));
  }

  TEST_CASE("rotating by one beam spacing cyclically shifts the scan") {
    const WorldMap m = builtin_layout("Env3");
    const int n = 36;
    const Pose p{-1.3, -0.7, 0.3};
    const auto a = lidar_scan(m, p, n, 5.0);
    const auto b = lidar_scan(m, {p.x, p.y, p.theta + 2 * kPi / n}, n, 5.0);
    for (int k = 0; k < n; ++k) CHECK(b[static_cast<std::size_t>(k)] == doctest::Approx(a[static_cast<std::size_t>((k + 1) % n)]).epsilon(1e-9));
  }

  TEST_CASE("lidar on an empty map reads max range everywhere") {
    const WorldMap m;
    for (double r : lidar_scan(m, {0, 0, 0}, 12, 5.0)) CHECK(r == 5.0);
  }

  TEST_CASE("camera facing a single wall filling the view is uniformly colored") {
    WorldMap m;
    m.walls = {{{1, -10}, {1, 10}, kRed}};
    for (const auto& px : camera_render(m, {0, 0, 0}, kPi / 3, 16, 5.0)) CHECK(px == kRed);
  }

  TEST_CASE("camera with a wall over the left half of the view") {
    WorldMap m;
    m.walls = {{{2, 0}, {2, 4}, kRed}};
    const int n = 16;
    const auto strip = camera_render(m, {0, 0, 0}, kPi / 3, n, 5.0);
    for (int j = 0; j < n; ++j) {
      const Rgb expected = j < n / 2 ? kRed : Rgb{};
      CHECK(strip[static_cast<std::size_t>(j)] == expected);
    }
  }

  TEST_CASE("camera misses everywhere render black") {
    const WorldMap m;
    for (const auto& px : camera_render(m, {0, 0, 0}, kPi / 3, 8, 5.0)) CHECK(px == Rgb{});
  }

  TEST_CASE("lidar and camera agree on the wall straight ahead") {
    const WorldMap m = builtin_layout("Env2");
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.7, 1.7);
    std::uniform_real_distribution<double> a(-kPi, kPi);
    for (int i = 0; i < 200; ++i) {
      const Pose p{u(rng), u(rng), a(rng)};
      const auto strip = camera_render(m, p, kPi / 3, 3, 5.0);  // the middle pixel looks along theta
      const RayHit beam = ray_cast(m, {p.x, p.y}, p.theta, 5.0);
      REQUIRE(beam.wall.has_value());
      CHECK(strip[1] == m.walls[*beam.wall].color);
    }
  }

  TEST_CASE("distance reward cases") {
    EnvConfig cfg;
    CHECK(reward_distance(0.1, false, cfg) == cfg.r_reached);
    CHECK(reward_distance(cfg.d_min, false, cfg) == cfg.r_reached);
    CHECK(reward_distance(1.0, true, cfg) == cfg.r_crashed);
    CHECK(reward_distance(1.0, false, cfg) == doctest::Approx(1.0 - std::exp(0.5)));
    cfg.d_min = 1e-9;
    CHECK(std::abs(reward_distance(1e-6, false, cfg)) < 1e-5);
  }

  TEST_CASE("orientation reward cases") {
    EnvConfig cfg;
    CHECK(reward_orientation(0.0, 1.0, false, cfg) == 0.0);
    CHECK(reward_orientation(0.3, 1.0, true, cfg) == cfg.r_crashed);
    CHECK(reward_orientation(kPi, 1.0, false, cfg) == doctest::Approx(-3.810).epsilon(1e-3));
    CHECK(reward_orientation(kPi, 0.1, false, cfg) == cfg.r_reached);
  }

  TEST_CASE("single-target reset carries no target coordinates") {
    Environment env(env_config("Env1", 1));
    CHECK_FALSE(env.reset().target_xy.has_value());
  }

  TEST_CASE("multi-target reset draws each of two targets about half the time") {
    EnvConfig cfg = env_config("Env1", 2);
    cfg.multi_target = true;
    Environment env(cfg);
    int first = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
      const Observation o = env.reset();
      REQUIRE(o.target_xy.has_value());
      CHECK(*o.target_xy == env.active_target());
      if (env.truth().target_id == 0) ++first;
    }
    CHECK(static_cast<double>(first) / n == doctest::Approx(0.5).epsilon(0.04));
  }

  TEST_CASE("reset is deterministic under a seed") {
    Environment a(env_config("Env2", 9));
    Environment b(env_config("Env2", 9));
    const Observation oa = a.reset();
    const Observation ob = b.reset();
    CHECK(oa.lidar == ob.lidar);
    CHECK(oa.camera == ob.camera);
    CHECK(same_pose(a.pose(), b.pose()));
  }

  TEST_CASE("turn left then right restores the pose") {
    Environment env(env_config("Env1", 3));
    env.reset();
    const Pose before = env.pose();
    env.step(Action::turn_left);
    env.step(Action::turn_right);
    CHECK(env.pose().x == before.x);
    CHECK(env.pose().y == before.y);
    CHECK(env.pose().theta == doctest::Approx(before.theta).epsilon(1e-12));
  }

  TEST_CASE("forward into a close wall crashes with the crash reward") {
    Environment env(env_config("Env1", 4));
    env.reset();
    env.set_pose({1.75, 0.0, 0.0});
    const StepResult r = env.step(Action::forward);
    CHECK(r.terminal == Terminal::crashed);
    CHECK(r.reward == env.config().r_crashed);
    CHECK_THROWS_AS(env.step(Action::forward), ContractViolation);
  }

  TEST_CASE("forward to within d_min of the target reaches it") {
    Environment env(env_config("Env1", 5));
    env.reset();
    env.set_pose({1.2, 0.9, kPi / 2});
    const StepResult r = env.step(Action::forward);
    CHECK(r.terminal == Terminal::reached);
    CHECK(r.reward == env.config().r_reached);
  }

  TEST_CASE("episodes time out at the step limit") {
    EnvConfig cfg = env_config("Env1", 6);
    cfg.max_steps = 3;
    Environment env(cfg);
    env.reset();
    CHECK(env.step(Action::turn_left).terminal == Terminal::none);
    CHECK(env.step(Action::turn_left).terminal == Terminal::none);
    CHECK(env.step(Action::turn_left).terminal == Terminal::timeout);
    CHECK_THROWS_AS(env.step(Action::turn_left), ContractViolation);
  }

  TEST_CASE("stepping before reset is a contract violation") {
    Environment env(env_config("Env1", 6));
    CHECK_THROWS_AS(env.step(Action::forward), ContractViolation);
  }

  TEST_CASE("same seed and actions give a bit-identical trajectory") {
    std::mt19937_64 actions(10);
    std::vector<Action> seq;
    std::uniform_int_distribution<int> pick(0, 2);
    for (int i = 0; i < 3000; ++i) seq.push_back(action_from_index(static_cast<std::size_t>(pick(actions))));
    auto run = [&] {
      Environment env(env_config("Env3", 77));
      std::vector<double> trace;
      env.reset();
      for (Action a : seq) {
        if (env.episode_over()) env.reset();
        const StepResult r = env.step(a);
        trace.insert(trace.end(), {env.pose().x, env.pose().y, env.pose().theta, r.reward});
        trace.insert(trace.end(), r.observation.lidar.begin(), r.observation.lidar.end());
      }
      return trace;
    };
    CHECK(run() == run());
  }

  TEST_CASE("live robot stays in free space and shaping rewards stay bounded") {
    for (const auto& name : builtin_layout_names()) {
      CAPTURE(name);
      EnvConfig cfg = env_config(name, 12);
      Environment env(cfg);
      const auto& b = env.map().bounds;
      const double d_max = std::hypot(b.xmax - b.xmin, b.ymax - b.ymin);
      const double floor = 1.0 - std::exp(cfg.eta1 * d_max);
      std::mt19937_64 rng(13);
      std::discrete_distribution<int> pick({0.6, 0.2, 0.2});
      env.reset();
      for (int i = 0; i < 5000; ++i) {
        if (env.episode_over()) env.reset();
        const StepResult r = env.step(action_from_index(static_cast<std::size_t>(pick(rng))));
        if (r.terminal != Terminal::crashed) {
          CHECK(env.map().clearance({env.pose().x, env.pose().y}) >= cfg.robot_radius);
          CHECK(b.contains({env.pose().x, env.pose().y}));
        }
        if (r.terminal == Terminal::none || r.terminal == Terminal::timeout) {
          CHECK(r.reward <= 0.0);
          CHECK(r.reward > floor);
        }
        if (r.truth.distance <= cfg.d_min && r.terminal != Terminal::crashed) CHECK(r.reward == cfg.r_reached);
        for (double range : r.observation.lidar) {
          CHECK(range >= 0.0);
          CHECK(range <= cfg.max_range);
        }
        for (const auto& px : r.observation.camera)
          CHECK((px.r >= 0 && px.r <= 1 && px.g >= 0 && px.g <= 1 && px.b >= 0 && px.b <= 1));
      }
    }
  }

  TEST_CASE("only Env3 blocks the straight spawn to target segment") {
    for (const auto& name : builtin_layout_names()) {
      const WorldMap m = builtin_layout(name);
      CAPTURE(name);
      CHECK(m.encloses_bounds());
      const bool blocked = m.interior_blocks(m.spawn.center(), m.targets.front());
      CHECK(blocked == (name == "Env3"));
      std::size_t interior = 0;
      for (std::size_t i = 0; i < m.walls.size(); ++i)
        if (!m.is_boundary_wall(i)) ++interior;
      CHECK((interior > 0) == (name == "Env3"));
      for (const auto& t : m.targets) {
        CHECK(m.bounds.contains(t));
        CHECK(m.clearance(t) > EnvConfig{}.robot_radius);
      }
    }
  }

  TEST_CASE("layout files in the repository match the built-in layouts") {
    for (const auto& name : builtin_layout_names()) {
      std::string file = name;
      for (auto& c : file) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      const auto path = std::filesystem::path(SRLP_SOURCE_DIR) / "layouts" / (file + ".layout");
      CAPTURE(path.string());
      CHECK(read_text_file(path.string()) == builtin_layout_text(name));
      const WorldMap from_file = load_layout(path.string());
      CHECK(from_file.walls.size() == builtin_layout(name).walls.size());
    }
  }

  TEST_CASE("malformed layouts raise errors") {
    CHECK_THROWS(parse_layout("name = X\nbounds = 0 0 1\n"));
    CHECK_THROWS(parse_layout("name = X\nbounds = -1 -1 1 1\nspawn = 0 0 0 0\n"));
    CHECK_THROWS(resolve_layout("/nonexistent/room.layout"));
  }

  TEST_CASE("environment config validation") {
    EnvConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.eta1 = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = EnvConfig{};
    cfg.max_steps = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = EnvConfig{};
    cfg.d_min = -1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }

  TEST_CASE("trajectory CSV layout") {
    std::ostringstream out;
    write_trajectory_csv(out, {{0, {0, 0, 0}, std::nullopt, 0.0, Terminal::none},
                               {1, {0.15, 0, 0}, Action::forward, -0.5, Terminal::crashed}});
    const std::string text = out.str();
    CHECK(text.rfind("step,x,y,theta,action,reward,terminal\n", 0) == 0);
    CHECK(text.find("1,0.15,0,0,forward,-0.5,crashed") != std::string::npos);
  }
}
