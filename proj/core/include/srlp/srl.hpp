#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "srlp/experience.hpp"
#include "srlp/nn.hpp"
#include "srlp/simulator.hpp"

// State-Net encoder and the reward-shaped prior losses that train it.
namespace srlp::srl {

using nn::Matrix;

struct StateNetSpec {
  std::size_t state_dim = 10;
  std::size_t n_beams = 36;
  std::size_t n_px = 32;
  std::size_t hidden = 64;
  bool multi_target = false;
  /// Lidar ranges are multiplied by this before entering the lidar branch.
  double lidar_scale = 1.0;
};

/// Two modality branches, each predicting an n-dimensional state, fused by a
/// single dense layer (plus the target coordinates in multi-target mode).
class StateNet {
 public:
  StateNet(nn::Network lidar, nn::Network camera, nn::Network fusion, bool multi_target, double lidar_scale);

  /// tanh hidden layers, identity outputs, Glorot init.
  static StateNet create(const StateNetSpec& spec, Rng& rng);

  const nn::Network& lidar_branch() const { return lidar_; }
  const nn::Network& camera_branch() const { return camera_; }
  const nn::Network& fusion() const { return fusion_; }
  nn::Network& lidar_branch() { return lidar_; }
  nn::Network& camera_branch() { return camera_; }
  nn::Network& fusion() { return fusion_; }

  std::size_t state_dim() const { return fusion_.output_size(); }
  std::size_t n_beams() const { return lidar_.input_size(); }
  std::size_t n_px() const { return camera_.input_size() / 3; }
  bool multi_target() const { return multi_target_; }
  double lidar_scale() const { return lidar_scale_; }

  /// Incremented whenever the parameters change; used to invalidate caches
  /// of encoded states.
  std::uint64_t version() const { return lidar_.version() + camera_.version() + fusion_.version(); }

  bool same_parameters(const StateNet& other) const;

 private:
  nn::Network lidar_;
  nn::Network camera_;
  nn::Network fusion_;
  bool multi_target_;
  double lidar_scale_;
};

struct StateNetGradients {
  nn::GradientSet lidar;
  nn::GradientSet camera;
  nn::GradientSet fusion;

  static StateNetGradients zeros_like(const StateNet& net);
  void add(const StateNetGradients& other, double scale);
};

struct StateNetOptimizer {
  nn::AdamState lidar;
  nn::AdamState camera;
  nn::AdamState fusion;

  static StateNetOptimizer for_net(const StateNet& net, double learning_rate);
};

void optimizer_step(StateNet& net, const StateNetGradients& grads, StateNetOptimizer& opt);

/// One batched pass through the encoder, retaining caches for backward.
struct EncodedBatch {
  Matrix states;  // one row per observation
  nn::ForwardCache lidar;
  nn::ForwardCache camera;
  nn::ForwardCache fusion;
};

EncodedBatch encode_batch(const StateNet& net, std::span<const sim::Observation* const> observations);
std::vector<double> encode(const StateNet& net, const sim::Observation& obs);

/// Backpropagates d(loss)/d(states) through all three sub-networks.
StateNetGradients backward_states(const StateNet& net, const EncodedBatch& batch, const Matrix& state_grad);

/// Encoded s_t and s_{t+1} for a set of transitions, one row each.
struct StateBatch {
  Matrix current;
  Matrix next;

  std::size_t size() const { return static_cast<std::size_t>(current.rows()); }
  Matrix delta() const { return next - current; }
};

/// A loss value with its gradient with respect to every row of the batch.
struct LossGrad {
  double value = 0.0;
  Matrix d_current;
  Matrix d_next;
};

using RowPair = std::pair<std::size_t, std::size_t>;

/// mean ||s_{t+1} - s_t||^2 over `rows` (duplicates count twice).
LossGrad loss_temporal(const StateBatch& states, std::span<const std::size_t> rows);
LossGrad loss_temporal(const StateBatch& states);

/// mean (||ds_2|| - ||ds_1||)^2. The norm in the gradient path is
/// sqrt(||ds||^2 + 1e-12) so collapsed state changes stay finite.
LossGrad loss_proportionality(const StateBatch& states, std::span<const RowPair> pairs);

/// mean exp(-||s_2 - s_1||^2).
LossGrad loss_causality(const StateBatch& states, std::span<const RowPair> pairs);

/// mean exp(-||s_2 - s_1||^2) * ||ds_2 - ds_1||^2.
LossGrad loss_repeatability(const StateBatch& states, std::span<const RowPair> pairs);

struct PriorWeights {
  double temporal = 3.0;
  double proportionality = 15.0;
  double causality = 15.0;
  double repeatability = 15.0;
  double regularization = 3.0;

  void validate() const;
};

struct LossComponents {
  double temporal = 0.0;
  double proportionality = 0.0;
  double causality = 0.0;
  double repeatability = 0.0;
  double regularization = 0.0;
  double total = 0.0;
};

/// A prior batch re-expressed over the unique transitions it touches.
struct PriorBatchStates {
  std::vector<std::size_t> transitions;  // buffer indices, one per row
  std::vector<std::size_t> base;
  std::vector<RowPair> prop_pairs;
  std::vector<RowPair> caus_pairs;
  EncodedBatch current;
  EncodedBatch next;

  StateBatch states() const { return {current.states, next.states}; }
};

PriorBatchStates encode_prior_batch(const StateNet& net, const replay::ReplayBuffer& buffer,
                                    const replay::PriorBatch& batch);

/// Rows 0..k-1 of `current`/`next` are the given observation pairs.
PriorBatchStates encode_rows(const StateNet& net, std::span<const sim::Observation* const> current,
                             std::span<const sim::Observation* const> next, std::vector<std::size_t> base,
                             std::vector<RowPair> prop_pairs, std::vector<RowPair> caus_pairs);

/// Sum of squared weights over all three sub-networks, with gradients.
std::pair<double, StateNetGradients> statenet_l2_penalty(const StateNet& net);

struct TotalLoss {
  LossComponents components;
  StateNetGradients grads;
};

/// w1*L1 + w2*L2 + w3*L3 + w4*L4 + w5*L_reg, with the state-space gradients
/// pushed back through both encoder passes.
TotalLoss total_loss(const StateNet& net, const PriorBatchStates& batch, const PriorWeights& weights);

struct SrlTrainConfig {
  std::size_t epochs = 10;
  std::size_t k_base = 256;
  std::size_t k_pairs = 256;
  /// <= 0 selects 0.05 * shaping_change_scale(buffer).
  double delta_sim = -1.0;
  double delta_diff = 0.01;
  std::size_t attempt_factor = 50;
  /// 0 selects ceil(buffer size / k_base).
  std::size_t steps_per_epoch = 0;
  double learning_rate = 1e-4;
  PriorWeights weights;
};

struct EpochRecord {
  std::size_t epoch = 0;
  LossComponents mean;
};

struct TrainingReport {
  std::vector<EpochRecord> epochs;
  double delta_sim = 0.0;
  std::size_t steps_per_epoch = 0;
};

TrainingReport train_statenet(StateNet& net, const replay::ReplayBuffer& buffer, const SrlTrainConfig& cfg,
                              StateNetOptimizer& opt, Rng& rng);

/// CSV columns: epoch,L1,L2,L3,L4,L_reg,total (optionally prefixed by an
/// update column when several reports are concatenated).
void write_report_csv(std::ostream& out, const std::vector<TrainingReport>& reports);

// StateNet checkpoint: "SRLPSTN1" | u32 state_dim | u32 n_beams | u32 n_px |
// u8 multi_target | f64 lidar_scale | three network blocks (lidar, camera,
// fusion) | FNV-1a trailer.
std::string statenet_file_bytes(const StateNet& net);
void save_statenet(const std::string& path, const StateNet& net);
StateNet load_statenet(const std::string& path);

}  // namespace srlp::srl
