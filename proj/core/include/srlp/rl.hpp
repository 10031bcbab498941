#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "srlp/experience.hpp"
#include "srlp/nn.hpp"
#include "srlp/simulator.hpp"
#include "srlp/srl.hpp"

// Double DQN over a learned (or baseline) state, with the staggered
// State-Net / Q-Net training schedule.
namespace srlp::rl {

using nn::Matrix;
using nn::Network;

/// What the Q-Net sees.
enum class InputKind : std::uint8_t {
  srl = 0,           // State-Net encoding of the observation
  ground_truth = 1,  // (x, y, theta, d) [+ target xy in multi-target mode]
  observation = 2,   // lidar ranges ++ camera rgb [+ target xy]
};
std::string to_string(InputKind k);
InputKind input_kind_from_string(const std::string& s);

/// n -> hidden... -> 3, relu hidden, identity output.
Network make_qnet(std::size_t input_dim, std::span<const std::size_t> hidden, Rng& rng);

nn::Vector q_values(const Network& qnet, std::span<const double> state);

/// Index of the largest entry; ties go to the lowest index.
std::size_t greedy_index(std::span<const double> values);

sim::Action select_action(const Network& qnet, std::span<const double> state, double epsilon, Rng& rng);

struct TdBatch {
  Matrix states;
  Matrix next_states;
  std::vector<std::size_t> actions;
  std::vector<double> rewards;
  std::vector<bool> done;

  std::size_t size() const { return actions.size(); }
};

struct TdLoss {
  double loss = 0.0;
  std::vector<double> targets;
  nn::GradientSet grads;
};

/// y = r if done else r + gamma * Q'(s', argmax_a Q(s', a)); loss is
/// mean (y - Q(s, a))^2 with y held constant.
TdLoss td_loss(const Network& qnet, const Network& target_net, const TdBatch& batch, double gamma);

/// One Adam step on the TD loss; `target_net` is never touched.
double ddqn_update(Network& qnet, const Network& target_net, const TdBatch& batch, double gamma, nn::AdamState& opt);

void sync_target(const Network& qnet, Network& target_net);

/// sum_t gamma^t r_t
double discounted_return(std::span<const double> rewards, double gamma);

struct AgentConfig {
  double gamma = 0.99;
  double eps_start = 1.0;
  double eps_end = 0.05;
  double eps_decay = 0.995;
  std::size_t eps_hold = 20;
  std::size_t sync_period = 500;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  std::size_t warmup = 1000;
  std::vector<std::size_t> hidden = {64, 64};
  std::size_t episodes = 1200;
  std::vector<std::size_t> state_net_updates = {200, 400};
  std::size_t buffer_capacity = 50000;
  std::size_t crash_window = 100;
  InputKind input = InputKind::srl;

  void validate() const;
};

struct EpisodeRecord {
  std::size_t episode = 0;
  double discounted_return = 0.0;
  std::size_t steps = 0;
  sim::Terminal terminal = sim::Terminal::none;
  double epsilon = 0.0;
  double crash_ratio_window = 0.0;
};

struct TrainingLog {
  std::vector<EpisodeRecord> episodes;
  std::vector<std::size_t> state_net_updates_at;  // episodes at which the State-Net was trained
  std::size_t total_steps = 0;
  std::size_t target_syncs = 0;
};

/// CSV columns: episode,return,steps,terminal,epsilon,crash_ratio_window
void write_training_log_csv(std::ostream& out, const TrainingLog& log);

/// Maps an observation and its ground truth to the Q-Net input.
class FeatureMap {
 public:
  FeatureMap(InputKind kind, const srl::StateNet* statenet);

  std::vector<double> operator()(const sim::Observation& obs, const sim::Truth& truth) const;
  std::size_t dimension(const sim::EnvConfig& env) const;
  /// Changes whenever the features for a fixed input would change.
  std::uint64_t version() const;
  InputKind kind() const { return kind_; }

 private:
  InputKind kind_;
  const srl::StateNet* statenet_;
};

std::vector<double> ground_truth_features(const sim::Truth& truth, bool with_target, geo::Vec2 target);
std::vector<double> observation_features(const sim::Observation& obs);

struct TrainingResult {
  Network qnet;
  Network target_net;
  std::optional<srl::StateNet> statenet;
  TrainingLog log;
  std::vector<srl::TrainingReport> srl_reports;
  replay::ReplayBuffer buffer;
};

/// Optional observers of a training run.
struct TrainingHooks {
  std::function<void(const EpisodeRecord&)> on_episode;
  /// Called after every `checkpoint_interval`-th episode (1-based count) when
  /// the interval is positive.
  std::size_t checkpoint_interval = 0;
  std::function<void(std::size_t episodes_done, const Network& qnet, const srl::StateNet* statenet)> on_checkpoint;
};

/// Runs the full schedule. `statenet` is required iff cfg.input == srl.
/// Randomness comes from the exploration and sampling sub-streams of `seed`;
/// networks arrive already initialized.
TrainingResult run_training(sim::Environment env, std::optional<srl::StateNet> statenet, Network qnet,
                            const AgentConfig& cfg, const srl::SrlTrainConfig& srl_cfg, std::uint64_t seed,
                            const TrainingHooks& hooks = {});

struct EvalResult {
  double success_rate = 0.0;
  double crash_ratio = 0.0;
  double mean_return = 0.0;
  std::vector<double> returns;
  std::vector<sim::Terminal> outcomes;
};

/// Greedy (epsilon = 0) rollouts.
EvalResult evaluate(sim::Environment& env, const FeatureMap& features, const Network& qnet, std::size_t episodes,
                    double gamma, std::vector<std::vector<sim::TrajectoryRow>>* trajectories = nullptr);

/// Rolling success ratio over `window` episodes; first episode index (1-based
/// count) at which it reaches `level`, or nullopt.
std::optional<std::size_t> episodes_to_success(const TrainingLog& log, std::size_t window, double level);
double crash_ratio(const TrainingLog& log, std::size_t first, std::size_t last);
double success_ratio(const TrainingLog& log, std::size_t first, std::size_t last);
double mean_return(const TrainingLog& log, std::size_t first, std::size_t last);

}  // namespace srlp::rl
