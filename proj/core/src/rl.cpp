#include "srlp/rl.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <ostream>

namespace srlp::rl {

std::string to_string(InputKind k) {
  switch (k) {
    case InputKind::srl:
      return "srl";
    case InputKind::ground_truth:
      return "ground_truth";
    case InputKind::observation:
      return "observation";
  }
  return "unknown";
}

InputKind input_kind_from_string(const std::string& s) {
  if (s == "srl") return InputKind::srl;
  if (s == "ground_truth") return InputKind::ground_truth;
  if (s == "observation") return InputKind::observation;
  throw ConfigError("rl.input", 0, "rl.input: expected srl, ground_truth or observation, got '" + s + "'");
}

Network make_qnet(std::size_t input_dim, std::span<const std::size_t> hidden, Rng& rng) {
  std::vector<std::size_t> sizes{input_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(sim::kActionCount);
  return Network::glorot(sizes, nn::Activation::relu, nn::Activation::identity, rng);
}

nn::Vector q_values(const Network& qnet, std::span<const double> state) {
  if (qnet.output_size() != sim::kActionCount) throw ContractViolation("q_values: Q-Net must have 3 outputs");
  Matrix x(1, static_cast<Eigen::Index>(state.size()));
  for (std::size_t i = 0; i < state.size(); ++i) x(0, static_cast<Eigen::Index>(i)) = state[i];
  return nn::forward_batch(qnet, x).row(0).transpose();
}

std::size_t greedy_index(std::span<const double> values) {
  require(!values.empty(), "greedy_index: empty value vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

sim::Action select_action(const Network& qnet, std::span<const double> state, double epsilon, Rng& rng) {
  require(epsilon >= 0.0 && epsilon <= 1.0, "select_action: epsilon outside [0, 1]");
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (epsilon > 0.0 && coin(rng) < epsilon) {
    std::uniform_int_distribution<std::size_t> pick(0, sim::kActionCount - 1);
    return sim::action_from_index(pick(rng));
  }
  const nn::Vector q = q_values(qnet, state);
  return sim::action_from_index(greedy_index(std::span<const double>(q.data(), static_cast<std::size_t>(q.size()))));
}

TdLoss td_loss(const Network& qnet, const Network& target_net, const TdBatch& batch, double gamma) {
  const std::size_t n = batch.size();
  require(n > 0, "td_loss: empty batch");
  require(batch.rewards.size() == n && batch.done.size() == n && static_cast<std::size_t>(batch.states.rows()) == n &&
              static_cast<std::size_t>(batch.next_states.rows()) == n,
          "td_loss: batch fields differ in length");

  const Matrix next_online = nn::forward_batch(qnet, batch.next_states);
  const Matrix next_target = nn::forward_batch(target_net, batch.next_states);
  nn::ForwardCache cache;
  const Matrix q = nn::forward_batch(qnet, batch.states, &cache);

  TdLoss out;
  out.targets.resize(n);
  Matrix grad = Matrix::Zero(q.rows(), q.cols());
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    double y = batch.rewards[i];
    if (!batch.done[i]) {
      const auto row = next_online.row(r);
      const std::size_t best = greedy_index(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())));
      y += gamma * next_target(r, static_cast<Eigen::Index>(best));
    }
    out.targets[i] = y;
    const auto a = static_cast<Eigen::Index>(batch.actions.at(i));
    require(batch.actions[i] < sim::kActionCount, "td_loss: action index out of range");
    const double err = y - q(r, a);
    out.loss += err * err * inv_n;
    grad(r, a) = -2.0 * err * inv_n;
  }
  out.grads = nn::backward_batch(qnet, cache, grad).grads;
  return out;
}

double ddqn_update(Network& qnet, const Network& target_net, const TdBatch& batch, double gamma, nn::AdamState& opt) {
  auto td = td_loss(qnet, target_net, batch, gamma);
  nn::optimizer_step(qnet, td.grads, opt);
  return td.loss;
}

void sync_target(const Network& qnet, Network& target_net) {
  if (qnet.layer_count() != target_net.layer_count()) throw ContractViolation("sync_target: shape mismatch");
  for (std::size_t k = 0; k < qnet.layer_count(); ++k) {
    const auto& src = qnet.layer(k);
    const auto& dst = target_net.layer(k);
    if (src.weights.rows() != dst.weights.rows() || src.weights.cols() != dst.weights.cols())
      throw ContractViolation("sync_target: shape mismatch in layer " + std::to_string(k));
  }
  for (std::size_t k = 0; k < qnet.layer_count(); ++k) target_net.mutable_layer(k) = qnet.layer(k);
}

double discounted_return(std::span<const double> rewards, double gamma) {
  double total = 0.0;
  double discount = 1.0;
  for (double r : rewards) {
    total += discount * r;
    discount *= gamma;
  }
  return total;
}

void AgentConfig::validate() const {
  auto fail = [](const char* f, const char* why) { throw ConfigError(f, 0, std::string(f) + ": " + why); };
  if (!(gamma >= 0.0 && gamma < 1.0)) fail("rl.gamma", "must be in [0, 1)");
  if (!(eps_start >= 0.0 && eps_start <= 1.0)) fail("rl.eps_start", "must be in [0, 1]");
  if (!(eps_end >= 0.0 && eps_end <= 1.0)) fail("rl.eps_end", "must be in [0, 1]");
  if (!(eps_decay > 0.0 && eps_decay <= 1.0)) fail("rl.eps_decay", "must be in (0, 1]");
  if (sync_period < 1) fail("rl.sync_period", "must be >= 1");
  if (batch_size < 1) fail("rl.batch_size", "must be >= 1");
  if (!(learning_rate > 0.0)) fail("rl.lr", "must be > 0");
  if (buffer_capacity < 1) fail("rl.buffer_capacity", "must be >= 1");
  if (crash_window < 1) fail("rl.crash_window", "must be >= 1");
}

void write_training_log_csv(std::ostream& out, const TrainingLog& log) {
  out << "episode,return,steps,terminal,epsilon,crash_ratio_window\n";
  for (const auto& e : log.episodes) {
    out << e.episode << ',' << format_real(e.discounted_return) << ',' << e.steps << ',' << sim::to_string(e.terminal)
        << ',' << format_real(e.epsilon) << ',' << format_real(e.crash_ratio_window) << '\n';
  }
}

std::vector<double> ground_truth_features(const sim::Truth& truth, bool with_target, geo::Vec2 target) {
  std::vector<double> f{truth.pose.x, truth.pose.y, truth.pose.theta, truth.distance};
  if (with_target) f.insert(f.end(), {target.x, target.y});
  return f;
}

std::vector<double> observation_features(const sim::Observation& obs) {
  std::vector<double> f;
  f.reserve(obs.lidar.size() + 3 * obs.camera.size() + 2);
  f.insert(f.end(), obs.lidar.begin(), obs.lidar.end());
  for (const auto& px : obs.camera) f.insert(f.end(), {px.r, px.g, px.b});
  if (obs.target_xy) f.insert(f.end(), {obs.target_xy->x, obs.target_xy->y});
  return f;
}

FeatureMap::FeatureMap(InputKind kind, const srl::StateNet* statenet) : kind_(kind), statenet_(statenet) {
  if (kind_ == InputKind::srl && statenet_ == nullptr)
    throw ContractViolation("FeatureMap: srl input requires a State-Net");
}

std::vector<double> FeatureMap::operator()(const sim::Observation& obs, const sim::Truth& truth) const {
  switch (kind_) {
    case InputKind::srl:
      return srl::encode(*statenet_, obs);
    case InputKind::ground_truth:
      return ground_truth_features(truth, obs.target_xy.has_value(), obs.target_xy.value_or(geo::Vec2{}));
    case InputKind::observation:
      return observation_features(obs);
  }
  return {};
}

std::size_t FeatureMap::dimension(const sim::EnvConfig& env) const {
  const std::size_t extra = env.multi_target ? 2 : 0;
  switch (kind_) {
    case InputKind::srl:
      return statenet_->state_dim();
    case InputKind::ground_truth:
      return 4 + extra;
    case InputKind::observation:
      return static_cast<std::size_t>(env.n_beams) + 3 * static_cast<std::size_t>(env.n_px) + extra;
  }
  return 0;
}

std::uint64_t FeatureMap::version() const { return kind_ == InputKind::srl ? statenet_->version() : 0; }

namespace {

// Features of buffered transitions, keyed by insertion serial and stamped
// with the encoder version they were computed under.
class FeatureCache {
 public:
  explicit FeatureCache(std::size_t capacity)
      : current_(capacity), next_(capacity), serial_(capacity, ~0ULL), version_(capacity, 0) {}

  void store(std::uint64_t serial, std::uint64_t version, std::vector<double> cur, std::vector<double> nxt) {
    const std::size_t slot = serial % current_.size();
    current_[slot] = std::move(cur);
    next_[slot] = std::move(nxt);
    serial_[slot] = serial;
    version_[slot] = version;
  }

  void fetch(const replay::ReplayBuffer& buffer, std::size_t index, const FeatureMap& features,
             const std::vector<double>*& cur, const std::vector<double>*& nxt) {
    const std::uint64_t serial = buffer.serial(index);
    const std::size_t slot = serial % current_.size();
    const std::uint64_t v = features.version();
    if (serial_[slot] != serial || version_[slot] != v) {
      const auto& t = buffer.at(index);
      store(serial, v, features(t.obs, t.truth), features(t.next_obs, t.next_truth));
    }
    cur = &current_[slot];
    nxt = &next_[slot];
  }

 private:
  std::vector<std::vector<double>> current_;
  std::vector<std::vector<double>> next_;
  std::vector<std::uint64_t> serial_;
  std::vector<std::uint64_t> version_;
};

}  // namespace

TrainingResult run_training(sim::Environment env, std::optional<srl::StateNet> statenet, Network qnet,
                            const AgentConfig& cfg, const srl::SrlTrainConfig& srl_cfg, std::uint64_t seed,
                            const TrainingHooks& hooks) {
  cfg.validate();
  if ((cfg.input == InputKind::srl) != statenet.has_value())
    throw ContractViolation("run_training: a State-Net is required exactly when rl.input = srl");

  TrainingResult result{std::move(qnet), Network(), std::move(statenet), {}, {}, replay::ReplayBuffer(cfg.buffer_capacity)};
  Network& q = result.qnet;
  srl::StateNet* encoder = result.statenet ? &*result.statenet : nullptr;
  const FeatureMap features(cfg.input, encoder);
  if (q.input_size() != features.dimension(env.config()) || q.output_size() != sim::kActionCount)
    throw ContractViolation("run_training: Q-Net shape does not match the feature dimension");

  Rng explore = make_rng(seed, Stream::exploration);
  Rng sample = make_rng(seed, Stream::sampling);

  result.target_net = q;
  nn::AdamState q_opt = nn::AdamState::for_network(q, cfg.learning_rate);
  std::optional<srl::StateNetOptimizer> s_opt;
  if (encoder) s_opt = srl::StateNetOptimizer::for_net(*encoder, srl_cfg.learning_rate);

  auto& buffer = result.buffer;
  auto& log = result.log;
  FeatureCache cache(cfg.buffer_capacity);
  std::deque<bool> crash_window;
  std::size_t crashes_in_window = 0;
  double epsilon = cfg.eps_start;
  std::size_t hold_remaining = 0;

  TdBatch td;
  td.states.resize(static_cast<Eigen::Index>(cfg.batch_size), static_cast<Eigen::Index>(q.input_size()));
  td.next_states.resize(td.states.rows(), td.states.cols());
  td.actions.resize(cfg.batch_size);
  td.rewards.resize(cfg.batch_size);
  td.done.resize(cfg.batch_size);

  for (std::size_t ep = 0; ep < cfg.episodes; ++ep) {
    const bool update_now =
        std::find(cfg.state_net_updates.begin(), cfg.state_net_updates.end(), ep) != cfg.state_net_updates.end();
    if (encoder && update_now && !buffer.empty()) {
      result.srl_reports.push_back(srl::train_statenet(*encoder, buffer, srl_cfg, *s_opt, sample));
      log.state_net_updates_at.push_back(ep);
      hold_remaining = cfg.eps_hold;
    }

    sim::Observation obs = env.reset();
    sim::Truth truth = env.truth();
    std::vector<double> feat = features(obs, truth);
    std::vector<double> rewards;
    sim::Terminal outcome = sim::Terminal::none;
    std::uint32_t step = 0;

    while (outcome == sim::Terminal::none) {
      const sim::Action action = select_action(q, feat, epsilon, explore);
      sim::StepResult res = env.step(action);
      std::vector<double> next_feat = features(res.observation, res.truth);

      replay::Transition t;
      t.obs = std::move(obs);
      t.action = action;
      t.reward = res.reward;
      t.next_obs = res.observation;
      t.outcome = res.terminal;
      t.truth = truth;
      t.next_truth = res.truth;
      t.episode = ep;
      t.step = step++;
      buffer.push(std::move(t));
      cache.store(buffer.total_pushed() - 1, features.version(), feat, next_feat);

      if (buffer.size() >= std::max(cfg.warmup, std::size_t{1})) {
        const auto picks = buffer.sample_indices(cfg.batch_size, sample);
        for (std::size_t i = 0; i < picks.size(); ++i) {
          const std::vector<double>* cur = nullptr;
          const std::vector<double>* nxt = nullptr;
          cache.fetch(buffer, picks[i], features, cur, nxt);
          const auto r = static_cast<Eigen::Index>(i);
          td.states.row(r) = Eigen::Map<const Eigen::RowVectorXd>(cur->data(), static_cast<Eigen::Index>(cur->size()));
          td.next_states.row(r) =
              Eigen::Map<const Eigen::RowVectorXd>(nxt->data(), static_cast<Eigen::Index>(nxt->size()));
          const auto& tr = buffer.at(picks[i]);
          td.actions[i] = static_cast<std::size_t>(tr.action);
          td.rewards[i] = tr.reward;
          td.done[i] = tr.absorbing();
        }
        ddqn_update(q, result.target_net, td, cfg.gamma, q_opt);
      }

      ++log.total_steps;
      if (log.total_steps % cfg.sync_period == 0) {
        sync_target(q, result.target_net);
        ++log.target_syncs;
      }

      rewards.push_back(res.reward);
      outcome = res.terminal;
      obs = std::move(res.observation);
      truth = res.truth;
      feat = std::move(next_feat);
    }

    const bool crashed = outcome == sim::Terminal::crashed;
    crash_window.push_back(crashed);
    crashes_in_window += crashed ? 1 : 0;
    if (crash_window.size() > cfg.crash_window) {
      crashes_in_window -= crash_window.front() ? 1 : 0;
      crash_window.pop_front();
    }

    EpisodeRecord rec;
    rec.episode = ep;
    rec.discounted_return = discounted_return(rewards, cfg.gamma);
    rec.steps = rewards.size();
    rec.terminal = outcome;
    rec.epsilon = epsilon;
    rec.crash_ratio_window = static_cast<double>(crashes_in_window) / static_cast<double>(crash_window.size());
    log.episodes.push_back(rec);
    if (hooks.on_episode) hooks.on_episode(rec);
    if (hooks.on_checkpoint && hooks.checkpoint_interval > 0 && (ep + 1) % hooks.checkpoint_interval == 0)
      hooks.on_checkpoint(ep + 1, q, encoder);

    if (hold_remaining > 0) {
      --hold_remaining;
    } else {
      epsilon = std::max(cfg.eps_end, epsilon * cfg.eps_decay);
    }
  }
  return result;
}

EvalResult evaluate(sim::Environment& env, const FeatureMap& features, const Network& qnet, std::size_t episodes,
                    double gamma, std::vector<std::vector<sim::TrajectoryRow>>* trajectories) {
  EvalResult out;
  Rng unused(0);
  std::size_t successes = 0;
  std::size_t crashes = 0;
  for (std::size_t ep = 0; ep < episodes; ++ep) {
    sim::Observation obs = env.reset();
    sim::Truth truth = env.truth();
    std::vector<double> rewards;
    std::vector<sim::TrajectoryRow> rows;
    if (trajectories) rows.push_back({0, truth.pose, std::nullopt, 0.0, sim::Terminal::none});
    sim::Terminal outcome = sim::Terminal::none;
    while (outcome == sim::Terminal::none) {
      const auto action = select_action(qnet, features(obs, truth), 0.0, unused);
      auto res = env.step(action);
      rewards.push_back(res.reward);
      outcome = res.terminal;
      if (trajectories)
        rows.push_back({static_cast<int>(rewards.size()), res.truth.pose, action, res.reward, res.terminal});
      obs = std::move(res.observation);
      truth = res.truth;
    }
    successes += outcome == sim::Terminal::reached ? 1 : 0;
    crashes += outcome == sim::Terminal::crashed ? 1 : 0;
    out.returns.push_back(discounted_return(rewards, gamma));
    out.outcomes.push_back(outcome);
    if (trajectories) trajectories->push_back(std::move(rows));
  }
  if (episodes > 0) {
    const double n = static_cast<double>(episodes);
    out.success_rate = static_cast<double>(successes) / n;
    out.crash_ratio = static_cast<double>(crashes) / n;
    double sum = 0.0;
    for (double r : out.returns) sum += r;
    out.mean_return = sum / n;
  }
  return out;
}

std::optional<std::size_t> episodes_to_success(const TrainingLog& log, std::size_t window, double level) {
  require(window > 0, "episodes_to_success: window must be positive");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < log.episodes.size(); ++i) {
    hits += log.episodes[i].terminal == sim::Terminal::reached ? 1 : 0;
    if (i >= window) hits -= log.episodes[i - window].terminal == sim::Terminal::reached ? 1 : 0;
    if (i + 1 >= window && static_cast<double>(hits) >= level * static_cast<double>(window)) return i + 1;
  }
  return std::nullopt;
}

namespace {
template <typename F>
double ratio_over(const TrainingLog& log, std::size_t first, std::size_t last, F&& pred) {
  last = std::min(last, log.episodes.size());
  if (first >= last) return 0.0;
  std::size_t count = 0;
  for (std::size_t i = first; i < last; ++i) count += pred(log.episodes[i]) ? 1 : 0;
  return static_cast<double>(count) / static_cast<double>(last - first);
}
}  // namespace

double crash_ratio(const TrainingLog& log, std::size_t first, std::size_t last) {
  return ratio_over(log, first, last, [](const EpisodeRecord& e) { return e.terminal == sim::Terminal::crashed; });
}

double success_ratio(const TrainingLog& log, std::size_t first, std::size_t last) {
  return ratio_over(log, first, last, [](const EpisodeRecord& e) { return e.terminal == sim::Terminal::reached; });
}

double mean_return(const TrainingLog& log, std::size_t first, std::size_t last) {
  last = std::min(last, log.episodes.size());
  if (first >= last) return 0.0;
  double sum = 0.0;
  for (std::size_t i = first; i < last; ++i) sum += log.episodes[i].discounted_return;
  return sum / static_cast<double>(last - first);
}

}  // namespace srlp::rl
