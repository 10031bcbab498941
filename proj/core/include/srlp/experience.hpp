#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "srlp/common.hpp"
#include "srlp/simulator.hpp"

namespace srlp::replay {

struct Transition {
  sim::Observation obs;
  sim::Action action = sim::Action::forward;
  double reward = 0.0;
  sim::Observation next_obs;
  sim::Terminal outcome = sim::Terminal::none;
  sim::Truth truth;       // at obs
  sim::Truth next_truth;  // at next_obs
  std::uint64_t episode = 0;
  std::uint32_t step = 0;

  bool terminal() const { return outcome != sim::Terminal::none; }
  /// Reached or crashed: no bootstrapping past this transition. Timeouts are
  /// truncations, not absorbing states.
  bool absorbing() const { return outcome == sim::Terminal::reached || outcome == sim::Terminal::crashed; }
};

/// Fixed-capacity FIFO ring. Logical index 0 is the oldest transition.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return slots_.size(); }
  bool empty() const { return size_ == 0; }

  const Transition& at(std::size_t i) const;
  /// Monotone insertion serial of the transition at logical index i.
  std::uint64_t serial(std::size_t i) const;
  std::uint64_t total_pushed() const { return pushed_; }

  /// Logical index of the transition that follows i in the same episode.
  std::optional<std::size_t> successor(std::size_t i) const;
  /// r_{t+1} - r_t, defined when i has a successor.
  std::optional<double> reward_change(std::size_t i) const;

  std::vector<std::size_t> sample_indices(std::size_t k, Rng& rng) const;
  std::vector<Transition> sample_uniform(std::size_t k, Rng& rng) const;

 private:
  std::size_t slot_of(std::size_t i) const;

  std::vector<Transition> slots_;
  std::vector<std::uint64_t> serials_;
  std::size_t cursor_ = 0;
  std::size_t size_ = 0;
  std::uint64_t pushed_ = 0;
};

struct PriorBatchParams {
  std::size_t k_base = 256;
  std::size_t k_pairs = 256;
  double delta_sim = 0.05;
  double delta_diff = 0.01;
  std::size_t attempt_factor = 50;
};

/// Indices are logical buffer indices valid until the next push.
struct PriorBatch {
  std::vector<std::size_t> base;
  std::vector<std::pair<std::size_t, std::size_t>> prop_pairs;  // | |dr2| - |dr1| | <= delta_sim
  std::vector<std::pair<std::size_t, std::size_t>> caus_pairs;  // |r2 - r1| > delta_diff
};

bool similar_reward_change(const ReplayBuffer& buffer, std::size_t t1, std::size_t t2, double delta_sim);
bool different_reward(const ReplayBuffer& buffer, std::size_t t1, std::size_t t2, double delta_diff);

/// Rejection-samples the pair sets with a budget of attempt_factor * k_pairs
/// draws each; returns fewer pairs when the budget runs out.
PriorBatch build_prior_batch(const ReplayBuffer& buffer, const PriorBatchParams& params, Rng& rng);

/// Largest |r_{t+1} - r_t| between two consecutive non-terminal transitions;
/// the scale the similarity tolerance is expressed against. 0 if none.
double shaping_change_scale(const ReplayBuffer& buffer);

// Snapshot: "SRLPBUF1" | u64 capacity | u64 count | transitions oldest first,
// followed by the usual FNV-1a trailer.
void save_buffer(const std::string& path, const ReplayBuffer& buffer);
ReplayBuffer load_buffer(const std::string& path);

}  // namespace srlp::replay
