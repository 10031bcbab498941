#include "srlp/config.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "srlp/keyvalue.hpp"
#include "srlp/layout.hpp"

namespace srlp::cli {

namespace {

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&, int)>;
using Getter = std::function<std::string(const ExperimentConfig&)>;

struct Field {
  Setter set;
  Getter get;
};

constexpr double kDeg = std::numbers::pi / 180.0;

std::size_t parse_count(const std::string& v, const std::string& key, int line) {
  const long long n = parse_integer(v, key, line);
  if (n < 0) throw ConfigError(key, line, key + ": must be non-negative");
  return static_cast<std::size_t>(n);
}

std::vector<std::size_t> parse_counts(const std::string& v, const std::string& key, int line) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(v)) out.push_back(parse_count(item, key, line));
  return out;
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ", ";
    if constexpr (std::is_floating_point_v<T>) {
      out += format_real(values[i]);
    } else {
      out += std::to_string(values[i]);
    }
  }
  return out;
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

template <typename Access>
Field real(Access access) {
  return {[access](ExperimentConfig& c, const std::string& v, const std::string& k, int l) {
            access(c) = parse_real(v, k, l);
          },
          [access](const ExperimentConfig& c) { return format_real(access(const_cast<ExperimentConfig&>(c))); }};
}

template <typename Access>
Field count(Access access) {
  return {[access](ExperimentConfig& c, const std::string& v, const std::string& k, int l) {
            access(c) = parse_count(v, k, l);
          },
          [access](const ExperimentConfig& c) { return std::to_string(access(const_cast<ExperimentConfig&>(c))); }};
}

template <typename Access>
Field integer(Access access) {
  return {[access](ExperimentConfig& c, const std::string& v, const std::string& k, int l) {
            const long long n = parse_integer(v, k, l);
            if (n < -2147483647LL || n > 2147483647LL) throw ConfigError(k, l, k + ": out of range");
            access(c) = static_cast<int>(n);
          },
          [access](const ExperimentConfig& c) { return std::to_string(access(const_cast<ExperimentConfig&>(c))); }};
}

template <typename Access>
Field boolean(Access access) {
  return {[access](ExperimentConfig& c, const std::string& v, const std::string& k, int l) {
            access(c) = parse_bool(v, k, l);
          },
          [access](const ExperimentConfig& c) { return bool_text(access(const_cast<ExperimentConfig&>(c))); }};
}

template <typename Access>
Field degrees(Access access) {
  return {[access](ExperimentConfig& c, const std::string& v, const std::string& k, int l) {
            access(c) = parse_real(v, k, l) * kDeg;
          },
          [access](const ExperimentConfig& c) { return format_real(access(const_cast<ExperimentConfig&>(c)) / kDeg); }};
}

template <typename Access>
Field counts(Access access) {
  return {[access](ExperimentConfig& c, const std::string& v, const std::string& k, int l) {
            access(c) = parse_counts(v, k, l);
          },
          [access](const ExperimentConfig& c) { return join(access(const_cast<ExperimentConfig&>(c))); }};
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> t;
    // env
    t["env.layout"] = {[](ExperimentConfig& c, const std::string& v, const std::string& k, int l) {
                         if (v.empty()) throw ConfigError(k, l, k + ": must not be empty");
                         c.env.layout = v;
                       },
                       [](const ExperimentConfig& c) { return c.env.layout; }};
    t["env.reward"] = {[](ExperimentConfig& c, const std::string& v, const std::string& k, int l) {
                         if (v == "distance") {
                           c.env.reward = sim::RewardKind::distance;
                         } else if (v == "orientation") {
                           c.env.reward = sim::RewardKind::orientation;
                         } else {
                           throw ConfigError(k, l, k + ": expected distance or orientation, got '" + v + "'");
                         }
                       },
                       [](const ExperimentConfig& c) { return sim::to_string(c.env.reward); }};
    t["env.eta1"] = real([](ExperimentConfig& c) -> double& { return c.env.eta1; });
    t["env.eta2"] = real([](ExperimentConfig& c) -> double& { return c.env.eta2; });
    t["env.d_min"] = real([](ExperimentConfig& c) -> double& { return c.env.d_min; });
    t["env.r_reached"] = real([](ExperimentConfig& c) -> double& { return c.env.r_reached; });
    t["env.r_crashed"] = real([](ExperimentConfig& c) -> double& { return c.env.r_crashed; });
    t["env.max_range"] = real([](ExperimentConfig& c) -> double& { return c.env.max_range; });
    t["env.n_beams"] = integer([](ExperimentConfig& c) -> int& { return c.env.n_beams; });
    t["env.n_px"] = integer([](ExperimentConfig& c) -> int& { return c.env.n_px; });
    t["env.camera_fov_deg"] = degrees([](ExperimentConfig& c) -> double& { return c.env.camera_fov; });
    t["env.step_length"] = real([](ExperimentConfig& c) -> double& { return c.env.step_length; });
    t["env.turn_angle_deg"] = degrees([](ExperimentConfig& c) -> double& { return c.env.turn_angle; });
    t["env.robot_radius"] = real([](ExperimentConfig& c) -> double& { return c.env.robot_radius; });
    t["env.max_steps"] = integer([](ExperimentConfig& c) -> int& { return c.env.max_steps; });
    t["env.multi_target"] = boolean([](ExperimentConfig& c) -> bool& { return c.env.multi_target; });
    // rl
    t["rl.input"] = {[](ExperimentConfig& c, const std::string& v, const std::string& k, int l) {
                       try {
                         c.rl.input = rl::input_kind_from_string(v);
                       } catch (const ConfigError& e) {
                         throw ConfigError(k, l, e.what());
                       }
                     },
                     [](const ExperimentConfig& c) { return rl::to_string(c.rl.input); }};
    t["rl.gamma"] = real([](ExperimentConfig& c) -> double& { return c.rl.gamma; });
    t["rl.eps_start"] = real([](ExperimentConfig& c) -> double& { return c.rl.eps_start; });
    t["rl.eps_end"] = real([](ExperimentConfig& c) -> double& { return c.rl.eps_end; });
    t["rl.eps_decay"] = real([](ExperimentConfig& c) -> double& { return c.rl.eps_decay; });
    t["rl.eps_hold"] = count([](ExperimentConfig& c) -> std::size_t& { return c.rl.eps_hold; });
    t["rl.sync_period"] = count([](ExperimentConfig& c) -> std::size_t& { return c.rl.sync_period; });
    t["rl.batch_size"] = count([](ExperimentConfig& c) -> std::size_t& { return c.rl.batch_size; });
    t["rl.lr"] = real([](ExperimentConfig& c) -> double& { return c.rl.learning_rate; });
    t["rl.warmup"] = count([](ExperimentConfig& c) -> std::size_t& { return c.rl.warmup; });
    t["rl.hidden"] = counts([](ExperimentConfig& c) -> std::vector<std::size_t>& { return c.rl.hidden; });
    t["rl.episodes"] = count([](ExperimentConfig& c) -> std::size_t& { return c.rl.episodes; });
    t["rl.state_net_updates"] =
        counts([](ExperimentConfig& c) -> std::vector<std::size_t>& { return c.rl.state_net_updates; });
    t["rl.buffer_capacity"] = count([](ExperimentConfig& c) -> std::size_t& { return c.rl.buffer_capacity; });
    t["rl.crash_window"] = count([](ExperimentConfig& c) -> std::size_t& { return c.rl.crash_window; });
    t["rl.checkpoint_interval"] = count([](ExperimentConfig& c) -> std::size_t& { return c.checkpoint_interval; });
    // srl
    t["srl.state_dim"] = count([](ExperimentConfig& c) -> std::size_t& { return c.statenet.state_dim; });
    t["srl.hidden"] = count([](ExperimentConfig& c) -> std::size_t& { return c.statenet.hidden; });
    t["srl.lidar_scale"] = real([](ExperimentConfig& c) -> double& { return c.statenet.lidar_scale; });
    t["srl.epochs"] = count([](ExperimentConfig& c) -> std::size_t& { return c.srl.epochs; });
    t["srl.k_base"] = count([](ExperimentConfig& c) -> std::size_t& { return c.srl.k_base; });
    t["srl.k_pairs"] = count([](ExperimentConfig& c) -> std::size_t& { return c.srl.k_pairs; });
    t["srl.delta_sim"] = real([](ExperimentConfig& c) -> double& { return c.srl.delta_sim; });
    t["srl.delta_diff"] = real([](ExperimentConfig& c) -> double& { return c.srl.delta_diff; });
    t["srl.attempt_factor"] = count([](ExperimentConfig& c) -> std::size_t& { return c.srl.attempt_factor; });
    t["srl.steps_per_epoch"] = count([](ExperimentConfig& c) -> std::size_t& { return c.srl.steps_per_epoch; });
    t["srl.lr"] = real([](ExperimentConfig& c) -> double& { return c.srl.learning_rate; });
    t["srl.weights.w1"] = real([](ExperimentConfig& c) -> double& { return c.srl.weights.temporal; });
    t["srl.weights.w2"] = real([](ExperimentConfig& c) -> double& { return c.srl.weights.proportionality; });
    t["srl.weights.w3"] = real([](ExperimentConfig& c) -> double& { return c.srl.weights.causality; });
    t["srl.weights.w4"] = real([](ExperimentConfig& c) -> double& { return c.srl.weights.repeatability; });
    t["srl.weights.w5"] = real([](ExperimentConfig& c) -> double& { return c.srl.weights.regularization; });
    // analysis
    t["analysis.n_samples"] = count([](ExperimentConfig& c) -> std::size_t& { return c.analysis.n_samples; });
    t["analysis.epsilon"] = real([](ExperimentConfig& c) -> double& { return c.analysis.epsilon; });
    t["analysis.threshold"] = real([](ExperimentConfig& c) -> double& { return c.analysis.threshold; });
    t["analysis.sensitivity"] = {[](ExperimentConfig& c, const std::string& v, const std::string& k, int l) {
                                   c.analysis.sensitivity = v.empty() ? std::vector<double>{} : parse_reals(v, k, l);
                                 },
                                 [](const ExperimentConfig& c) { return join(c.analysis.sensitivity); }};
    t["analysis.n_bins"] = count([](ExperimentConfig& c) -> std::size_t& { return c.analysis.n_bins; });
    t["analysis.permutations"] = count([](ExperimentConfig& c) -> std::size_t& { return c.analysis.permutations; });
    t["analysis.success_window"] =
        count([](ExperimentConfig& c) -> std::size_t& { return c.analysis.success_window; });
    t["analysis.sweep_final_window"] =
        count([](ExperimentConfig& c) -> std::size_t& { return c.analysis.sweep_final_window; });
    t["analysis.compare_final_window"] =
        count([](ExperimentConfig& c) -> std::size_t& { return c.analysis.compare_final_window; });
    // run
    t["run.seeds"] = {[](ExperimentConfig& c, const std::string& v, const std::string& k, int l) {
                        c.seeds.clear();
                        for (const auto& item : split_list(v)) {
                          const long long s = parse_integer(item, k, l);
                          if (s < 0) throw ConfigError(k, l, k + ": seeds must be non-negative");
                          c.seeds.push_back(static_cast<std::uint64_t>(s));
                        }
                      },
                      [](const ExperimentConfig& c) { return join(c.seeds); }};
    t["run.out"] = {[](ExperimentConfig& c, const std::string& v, const std::string& k, int l) {
                      if (v.empty()) throw ConfigError(k, l, k + ": must not be empty");
                      c.out = v;
                    },
                    [](const ExperimentConfig& c) { return c.out; }};
    t["sweep.dims"] = counts([](ExperimentConfig& c) -> std::vector<std::size_t>& { return c.sweep_dims; });
    return t;
  }();
  return table;
}

[[noreturn]] void fail(const std::string& key, const std::string& why) { throw ConfigError(key, 0, key + ": " + why); }

}  // namespace

void ExperimentConfig::validate() const {
  env.validate();
  rl.validate();
  srl.weights.validate();
  try {
    (void)sim::resolve_layout(env.layout);
  } catch (const FormatError& e) {
    fail("env.layout", e.what());
  }
  if (rl.hidden.empty() || std::find(rl.hidden.begin(), rl.hidden.end(), 0u) != rl.hidden.end())
    fail("rl.hidden", "needs at least one positive width");
  if (statenet.state_dim < 1) fail("srl.state_dim", "must be >= 1");
  if (statenet.hidden < 1) fail("srl.hidden", "must be >= 1");
  if (!(statenet.lidar_scale > 0.0) || !std::isfinite(statenet.lidar_scale)) fail("srl.lidar_scale", "must be > 0");
  if (srl.k_base < 1) fail("srl.k_base", "must be >= 1");
  if (!(srl.learning_rate > 0.0)) fail("srl.lr", "must be > 0");
  if (!(srl.delta_diff >= 0.0)) fail("srl.delta_diff", "must be >= 0");
  if (!std::isfinite(srl.delta_sim)) fail("srl.delta_sim", "must be finite");
  if (analysis.n_samples < 3) fail("analysis.n_samples", "must be >= 3");
  if (!(analysis.epsilon >= 0.0 && analysis.epsilon <= 1.0)) fail("analysis.epsilon", "must be in [0, 1]");
  if (!(analysis.threshold >= 0.0 && analysis.threshold <= 1.0)) fail("analysis.threshold", "must be in [0, 1]");
  for (double s : analysis.sensitivity)
    if (!(s >= 0.0 && s <= 1.0)) fail("analysis.sensitivity", "entries must be in [0, 1]");
  if (analysis.n_bins < 2) fail("analysis.n_bins", "must be >= 2");
  if (analysis.permutations < 1) fail("analysis.permutations", "must be >= 1");
  if (analysis.success_window < 1) fail("analysis.success_window", "must be >= 1");
  if (analysis.sweep_final_window < 1) fail("analysis.sweep_final_window", "must be >= 1");
  if (analysis.compare_final_window < 1) fail("analysis.compare_final_window", "must be >= 1");
  if (seeds.empty()) fail("run.seeds", "needs at least one seed");
  if (sweep_dims.empty() || std::find(sweep_dims.begin(), sweep_dims.end(), 0u) != sweep_dims.end())
    fail("sweep.dims", "needs at least one positive dimension");
}

const std::vector<std::string>& required_keys() {
  static const std::vector<std::string> keys = {"env.layout", "run.seeds"};
  return keys;
}

std::vector<std::string> known_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, f] : fields()) keys.push_back(k);
  return keys;
}

void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value, int line) {
  const auto& table = fields();
  auto it = table.find(key);
  if (it == table.end()) {
    std::string where = line > 0 ? " (line " + std::to_string(line) + ")" : "";
    throw ConfigError(key, line, "unknown key '" + key + "'" + where);
  }
  it->second.set(cfg, value, key, line);
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  std::map<std::string, int> seen;
  for (const auto& entry : parse_key_values(text)) {
    if (auto [it, fresh] = seen.emplace(entry.key, entry.line); !fresh)
      throw ConfigError(entry.key, entry.line,
                        "key '" + entry.key + "' repeated on line " + std::to_string(entry.line) + " (first on line " +
                            std::to_string(it->second) + ")");
    set_config_value(cfg, entry.key, entry.value, entry.line);
  }
  for (const auto& key : required_keys())
    if (!seen.contains(key)) throw ConfigError(key, 0, "missing required key '" + key + "'");
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const FormatError& e) {
    throw ConfigError("", 0, e.what());
  }
  return parse_config(text);
}

std::string resolved_config_text(const ExperimentConfig& cfg) {
  std::ostringstream out;
  for (const auto& [key, field] : fields()) out << key << " = " << field.get(cfg) << '\n';
  return out.str();
}

std::uint64_t config_hash(const ExperimentConfig& cfg) { return fnv1a(resolved_config_text(cfg)); }

}  // namespace srlp::cli
