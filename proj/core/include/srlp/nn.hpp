#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "srlp/common.hpp"

// Minimal feed-forward substrate: dense layers, reverse-mode gradients and
// Adam. Batches are matrices with one sample per row.
namespace srlp::nn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

enum class Activation : std::uint8_t { identity = 0, tanh = 1, relu = 2 };

std::string to_string(Activation a);

struct DenseLayer {
  Matrix weights;  // out x in
  Vector biases;   // out
  Activation activation = Activation::identity;

  std::size_t input_size() const { return static_cast<std::size_t>(weights.cols()); }
  std::size_t output_size() const { return static_cast<std::size_t>(weights.rows()); }
};

/// Ordered stack of dense layers. Every copy gets a fresh identity so that a
/// forward cache cannot be replayed against a different network.
class Network {
 public:
  Network();
  explicit Network(std::vector<DenseLayer> layers);
  Network(const Network& other);
  Network& operator=(const Network& other);
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  /// Glorot-uniform weights in ±sqrt(6/(fan_in+fan_out)), zero biases.
  static Network glorot(std::span<const std::size_t> sizes, Activation hidden, Activation output, Rng& rng);

  const std::vector<DenseLayer>& layers() const { return layers_; }
  const DenseLayer& layer(std::size_t i) const { return layers_.at(i); }
  /// Mutable access invalidates outstanding forward caches.
  DenseLayer& mutable_layer(std::size_t i);

  std::size_t layer_count() const { return layers_.size(); }
  std::size_t input_size() const;
  std::size_t output_size() const;
  std::size_t parameter_count() const;

  std::uint64_t id() const { return id_; }
  std::uint64_t version() const { return version_; }
  void touch() { ++version_; }

  bool same_parameters(const Network& other) const;

 private:
  std::vector<DenseLayer> layers_;
  std::uint64_t id_;
  std::uint64_t version_ = 0;
};

/// Per-layer record of a forward pass; `activations[0]` is the input and
/// `activations[k+1]` the output of layer k.
struct ForwardCache {
  std::uint64_t net_id = 0;
  std::uint64_t net_version = 0;
  std::vector<Matrix> activations;
  std::vector<Matrix> pre_activations;

  const Matrix& output() const { return activations.back(); }
  std::size_t batch_size() const { return activations.empty() ? 0 : static_cast<std::size_t>(activations[0].rows()); }
};

/// Shape-congruent with its Network.
struct GradientSet {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  static GradientSet zeros_like(const Network& net);
  bool congruent_with(const Network& net) const;
  bool congruent_with(const GradientSet& other) const;
  bool all_finite() const;
  double max_abs() const;
};

Matrix forward_batch(const Network& net, const Matrix& input, ForwardCache* cache = nullptr);
std::pair<Vector, ForwardCache> forward(const Network& net, std::span<const double> input);

struct BackwardResult {
  GradientSet grads;
  Matrix input_grad;
};

/// Gradients are summed over the batch rows of `output_grad`.
BackwardResult backward_batch(const Network& net, const ForwardCache& cache, const Matrix& output_grad);

struct SingleBackwardResult {
  GradientSet grads;
  Vector input_grad;
};
SingleBackwardResult backward(const Network& net, const ForwardCache& cache, std::span<const double> output_grad);

/// a + scale * b
GradientSet accumulate(const GradientSet& a, const GradientSet& b, double scale);
void accumulate_into(GradientSet& a, const GradientSet& b, double scale);

struct AdamState {
  std::uint64_t step = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  GradientSet first_moment;
  GradientSet second_moment;

  static AdamState for_network(const Network& net, double learning_rate = 1e-3);
};

/// Bias-corrected Adam update. Throws ContractViolation naming the layer if a
/// gradient entry is not finite; the network is left untouched in that case.
void optimizer_step(Network& net, const GradientSet& grads, AdamState& opt);

struct PenaltyResult {
  double value = 0.0;
  GradientSet grads;
};

/// Sum of squared weights over all layers (biases excluded) and its gradient.
PenaltyResult l2_penalty(const Network& net);

// Network block (little-endian):
//   "SRLPNET1" | u32 layer_count | per layer: u32 in, u32 out, u8 activation,
//   f64 weights[out*in] row-major, f64 biases[out]
// A checkpoint file is one block followed by a u64 FNV-1a of the block bytes.
void write_network(std::string& out, const Network& net);
Network read_network(std::string_view bytes, std::size_t& offset);

/// Complete checkpoint file contents (block plus checksum).
std::string network_file_bytes(const Network& net);
void save_network(const std::string& path, const Network& net);
Network load_network(const std::string& path);

}  // namespace srlp::nn
