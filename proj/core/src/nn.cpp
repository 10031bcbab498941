#include "srlp/nn.hpp"

#include <atomic>
#include <cmath>

namespace srlp::nn {

namespace {

std::uint64_t next_network_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

void apply_activation(Activation a, Matrix& m) {
  switch (a) {
    case Activation::identity:
      break;
    case Activation::tanh:
      m = m.array().tanh().matrix();
      break;
    case Activation::relu:
      m = m.cwiseMax(0.0);
      break;
  }
}

// d(activation)/d(pre), expressed through pre- or post-activation values.
void scale_by_derivative(Activation a, const Matrix& pre, const Matrix& post, Matrix& grad) {
  switch (a) {
    case Activation::identity:
      break;
    case Activation::tanh:
      grad.array() *= (1.0 - post.array().square());
      break;
    case Activation::relu:
      grad.array() *= (pre.array() > 0.0).cast<double>();
      break;
  }
}

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::identity:
      return "identity";
    case Activation::tanh:
      return "tanh";
    case Activation::relu:
      return "relu";
  }
  return "unknown";
}

Network::Network() : id_(next_network_id()) {}

Network::Network(std::vector<DenseLayer> layers) : layers_(std::move(layers)), id_(next_network_id()) {
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const auto& l = layers_[k];
    if (static_cast<std::size_t>(l.biases.size()) != l.output_size())
      throw ContractViolation("layer " + std::to_string(k) + ": bias length differs from weight rows");
    if (k > 0 && layers_[k - 1].output_size() != l.input_size())
      throw ContractViolation("layer " + std::to_string(k) + ": input size " + std::to_string(l.input_size()) +
                              " does not match previous output size " + std::to_string(layers_[k - 1].output_size()));
  }
}

Network::Network(const Network& other) : layers_(other.layers_), id_(next_network_id()), version_(0) {}

Network& Network::operator=(const Network& other) {
  if (this != &other) {
    layers_ = other.layers_;
    ++version_;
  }
  return *this;
}

Network Network::glorot(std::span<const std::size_t> sizes, Activation hidden, Activation output, Rng& rng) {
  require(sizes.size() >= 2, "glorot: need at least input and output sizes");
  std::vector<DenseLayer> layers;
  for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
    const auto fan_in = sizes[k];
    const auto fan_out = sizes[k + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    DenseLayer layer;
    layer.weights.resize(static_cast<Eigen::Index>(fan_out), static_cast<Eigen::Index>(fan_in));
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) layer.weights(r, c) = dist(rng);
    layer.biases = Vector::Zero(static_cast<Eigen::Index>(fan_out));
    layer.activation = (k + 2 == sizes.size()) ? output : hidden;
    layers.push_back(std::move(layer));
  }
  return Network(std::move(layers));
}

DenseLayer& Network::mutable_layer(std::size_t i) {
  ++version_;
  return layers_.at(i);
}

std::size_t Network::input_size() const { return layers_.empty() ? 0 : layers_.front().input_size(); }
std::size_t Network::output_size() const { return layers_.empty() ? 0 : layers_.back().output_size(); }

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weights.size() + l.biases.size());
  return n;
}

bool Network::same_parameters(const Network& other) const {
  if (layers_.size() != other.layers_.size()) return false;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const auto& a = layers_[k];
    const auto& b = other.layers_[k];
    if (a.activation != b.activation || a.weights.rows() != b.weights.rows() || a.weights.cols() != b.weights.cols())
      return false;
    if (a.weights != b.weights || a.biases != b.biases) return false;
  }
  return true;
}

GradientSet GradientSet::zeros_like(const Network& net) {
  GradientSet g;
  for (const auto& l : net.layers()) {
    g.weights.push_back(Matrix::Zero(l.weights.rows(), l.weights.cols()));
    g.biases.push_back(Vector::Zero(l.biases.size()));
  }
  return g;
}

bool GradientSet::congruent_with(const Network& net) const {
  if (weights.size() != net.layer_count() || biases.size() != net.layer_count()) return false;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    const auto& l = net.layer(k);
    if (weights[k].rows() != l.weights.rows() || weights[k].cols() != l.weights.cols()) return false;
    if (biases[k].size() != l.biases.size()) return false;
  }
  return true;
}

bool GradientSet::congruent_with(const GradientSet& other) const {
  if (weights.size() != other.weights.size() || biases.size() != other.biases.size()) return false;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k].rows() != other.weights[k].rows() || weights[k].cols() != other.weights[k].cols()) return false;
    if (biases[k].size() != other.biases[k].size()) return false;
  }
  return true;
}

bool GradientSet::all_finite() const {
  for (const auto& w : weights)
    if (!w.allFinite()) return false;
  for (const auto& b : biases)
    if (!b.allFinite()) return false;
  return true;
}

double GradientSet::max_abs() const {
  double m = 0.0;
  for (const auto& w : weights)
    if (w.size() > 0) m = std::max(m, w.cwiseAbs().maxCoeff());
  for (const auto& b : biases)
    if (b.size() > 0) m = std::max(m, b.cwiseAbs().maxCoeff());
  return m;
}

Matrix forward_batch(const Network& net, const Matrix& input, ForwardCache* cache) {
  if (net.layer_count() == 0) throw ContractViolation("forward: empty network");
  if (static_cast<std::size_t>(input.cols()) != net.input_size())
    throw ContractViolation("forward: input size " + std::to_string(input.cols()) + " != network input size " +
                            std::to_string(net.input_size()));
  if (cache) {
    cache->net_id = net.id();
    cache->net_version = net.version();
    cache->activations.clear();
    cache->pre_activations.clear();
    cache->activations.push_back(input);
  }
  Matrix current = input;
  for (const auto& layer : net.layers()) {
    Matrix pre = current * layer.weights.transpose();
    pre.rowwise() += layer.biases.transpose();
    Matrix post = pre;
    apply_activation(layer.activation, post);
    if (cache) {
      cache->pre_activations.push_back(std::move(pre));
      cache->activations.push_back(post);
    }
    current = std::move(post);
  }
  return current;
}

std::pair<Vector, ForwardCache> forward(const Network& net, std::span<const double> input) {
  Matrix x(1, static_cast<Eigen::Index>(input.size()));
  for (std::size_t i = 0; i < input.size(); ++i) x(0, static_cast<Eigen::Index>(i)) = input[i];
  ForwardCache cache;
  Matrix y = forward_batch(net, x, &cache);
  return {Vector(y.row(0).transpose()), std::move(cache)};
}

BackwardResult backward_batch(const Network& net, const ForwardCache& cache, const Matrix& output_grad) {
  if (cache.net_id != net.id() || cache.net_version != net.version())
    throw ContractViolation("backward: forward cache is stale or belongs to another network");
  if (cache.pre_activations.size() != net.layer_count() || cache.activations.size() != net.layer_count() + 1)
    throw ContractViolation("backward: forward cache does not match network depth");
  if (static_cast<std::size_t>(output_grad.cols()) != net.output_size() ||
      output_grad.rows() != cache.activations[0].rows())
    throw ContractViolation("backward: output gradient shape mismatch");

  BackwardResult result;
  result.grads.weights.resize(net.layer_count());
  result.grads.biases.resize(net.layer_count());
  Matrix delta = output_grad;
  for (std::size_t k = net.layer_count(); k-- > 0;) {
    const auto& layer = net.layer(k);
    scale_by_derivative(layer.activation, cache.pre_activations[k], cache.activations[k + 1], delta);
    result.grads.weights[k] = delta.transpose() * cache.activations[k];
    result.grads.biases[k] = delta.colwise().sum().transpose();
    delta = delta * layer.weights;
  }
  result.input_grad = std::move(delta);
  return result;
}

SingleBackwardResult backward(const Network& net, const ForwardCache& cache, std::span<const double> output_grad) {
  Matrix g(1, static_cast<Eigen::Index>(output_grad.size()));
  for (std::size_t i = 0; i < output_grad.size(); ++i) g(0, static_cast<Eigen::Index>(i)) = output_grad[i];
  auto r = backward_batch(net, cache, g);
  return {std::move(r.grads), Vector(r.input_grad.row(0).transpose())};
}

void accumulate_into(GradientSet& a, const GradientSet& b, double scale) {
  if (!a.congruent_with(b)) throw ContractViolation("accumulate: gradient sets are not shape-congruent");
  for (std::size_t k = 0; k < a.weights.size(); ++k) {
    a.weights[k] += scale * b.weights[k];
    a.biases[k] += scale * b.biases[k];
  }
}

GradientSet accumulate(const GradientSet& a, const GradientSet& b, double scale) {
  GradientSet out = a;
  accumulate_into(out, b, scale);
  return out;
}

AdamState AdamState::for_network(const Network& net, double learning_rate) {
  AdamState s;
  s.learning_rate = learning_rate;
  s.first_moment = GradientSet::zeros_like(net);
  s.second_moment = GradientSet::zeros_like(net);
  return s;
}

void optimizer_step(Network& net, const GradientSet& grads, AdamState& opt) {
  if (!grads.congruent_with(net)) throw ContractViolation("optimizer_step: gradients not congruent with network");
  if (!opt.first_moment.congruent_with(net) || !opt.second_moment.congruent_with(net))
    throw ContractViolation("optimizer_step: optimizer moments not congruent with network");
  for (std::size_t k = 0; k < grads.weights.size(); ++k) {
    if (!grads.weights[k].allFinite() || !grads.biases[k].allFinite())
      throw ContractViolation("optimizer_step: non-finite gradient in layer " + std::to_string(k));
  }

  opt.step += 1;
  const double b1 = opt.beta1;
  const double b2 = opt.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(opt.step));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(opt.step));
  const double step_size = opt.learning_rate / correction1;
  const double eps = opt.epsilon;

  auto update = [&](auto& param, const auto& g, auto& m, auto& v) {
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    param.array() -= step_size * m.array() / ((v.array() / correction2).sqrt() + eps);
  };
  for (std::size_t k = 0; k < grads.weights.size(); ++k) {
    auto& layer = net.mutable_layer(k);
    update(layer.weights, grads.weights[k], opt.first_moment.weights[k], opt.second_moment.weights[k]);
    update(layer.biases, grads.biases[k], opt.first_moment.biases[k], opt.second_moment.biases[k]);
  }
}

PenaltyResult l2_penalty(const Network& net) {
  PenaltyResult r;
  r.grads = GradientSet::zeros_like(net);
  for (std::size_t k = 0; k < net.layer_count(); ++k) {
    const auto& w = net.layer(k).weights;
    r.value += w.squaredNorm();
    r.grads.weights[k] = 2.0 * w;
  }
  return r;
}

}  // namespace srlp::nn
