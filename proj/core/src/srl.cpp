#include "srlp/srl.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "srlp/binary_io.hpp"

namespace srlp::srl {

namespace {

constexpr double kNormEpsilon = 1e-12;

void check_pair(const StateBatch& states, const RowPair& p) {
  if (p.first >= states.size() || p.second >= states.size())
    throw ContractViolation("prior loss: pair references a row outside the batch");
}

LossGrad zero_grad(const StateBatch& states) {
  LossGrad g;
  g.d_current = Matrix::Zero(states.current.rows(), states.current.cols());
  g.d_next = Matrix::Zero(states.next.rows(), states.next.cols());
  return g;
}

void check_states(const StateBatch& states) {
  if (states.current.rows() != states.next.rows() || states.current.cols() != states.next.cols())
    throw ContractViolation("StateBatch: current and next states differ in shape");
}

Matrix lidar_rows(const StateNet& net, std::span<const sim::Observation* const> obs) {
  Matrix m(static_cast<Eigen::Index>(obs.size()), static_cast<Eigen::Index>(net.n_beams()));
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const auto& o = *obs[i];
    if (o.lidar.size() != net.n_beams())
      throw ContractViolation("encode: lidar has " + std::to_string(o.lidar.size()) + " beams, State-Net expects " +
                              std::to_string(net.n_beams()));
    for (std::size_t k = 0; k < o.lidar.size(); ++k)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = o.lidar[k] * net.lidar_scale();
  }
  return m;
}

Matrix camera_rows(const StateNet& net, std::span<const sim::Observation* const> obs) {
  Matrix m(static_cast<Eigen::Index>(obs.size()), static_cast<Eigen::Index>(3 * net.n_px()));
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const auto& o = *obs[i];
    if (o.camera.size() != net.n_px())
      throw ContractViolation("encode: camera has " + std::to_string(o.camera.size()) + " pixels, State-Net expects " +
                              std::to_string(net.n_px()));
    for (std::size_t j = 0; j < o.camera.size(); ++j) {
      const auto r = static_cast<Eigen::Index>(i);
      const auto c = static_cast<Eigen::Index>(3 * j);
      m(r, c) = o.camera[j].r;
      m(r, c + 1) = o.camera[j].g;
      m(r, c + 2) = o.camera[j].b;
    }
  }
  return m;
}

}  // namespace

StateNet::StateNet(nn::Network lidar, nn::Network camera, nn::Network fusion, bool multi_target, double lidar_scale)
    : lidar_(std::move(lidar)),
      camera_(std::move(camera)),
      fusion_(std::move(fusion)),
      multi_target_(multi_target),
      lidar_scale_(lidar_scale) {
  const std::size_t n = fusion_.output_size();
  if (lidar_.output_size() != n || camera_.output_size() != n)
    throw ContractViolation("StateNet: branch outputs must both have the state dimension");
  if (fusion_.input_size() != 2 * n + (multi_target_ ? 2 : 0))
    throw ContractViolation("StateNet: fusion input must be 2n (+2 in multi-target mode)");
  if (camera_.input_size() % 3 != 0) throw ContractViolation("StateNet: camera input must be 3 channels per pixel");
  if (fusion_.layer_count() != 1) throw ContractViolation("StateNet: fusion must be a single dense layer");
  if (!(lidar_scale_ > 0.0) || !std::isfinite(lidar_scale_)) throw ContractViolation("StateNet: bad lidar scale");
}

StateNet StateNet::create(const StateNetSpec& spec, Rng& rng) {
  require(spec.state_dim > 0 && spec.n_beams > 0 && spec.n_px > 0 && spec.hidden > 0, "StateNet: sizes must be positive");
  const std::array<std::size_t, 3> lidar_sizes{spec.n_beams, spec.hidden, spec.state_dim};
  const std::array<std::size_t, 3> camera_sizes{3 * spec.n_px, spec.hidden, spec.state_dim};
  const std::array<std::size_t, 2> fusion_sizes{2 * spec.state_dim + (spec.multi_target ? 2 : 0), spec.state_dim};
  auto lidar = nn::Network::glorot(lidar_sizes, nn::Activation::tanh, nn::Activation::identity, rng);
  auto camera = nn::Network::glorot(camera_sizes, nn::Activation::tanh, nn::Activation::identity, rng);
  auto fusion = nn::Network::glorot(fusion_sizes, nn::Activation::identity, nn::Activation::identity, rng);
  return StateNet(std::move(lidar), std::move(camera), std::move(fusion), spec.multi_target, spec.lidar_scale);
}

bool StateNet::same_parameters(const StateNet& other) const {
  return multi_target_ == other.multi_target_ && lidar_scale_ == other.lidar_scale_ &&
         lidar_.same_parameters(other.lidar_) && camera_.same_parameters(other.camera_) &&
         fusion_.same_parameters(other.fusion_);
}

StateNetGradients StateNetGradients::zeros_like(const StateNet& net) {
  return {nn::GradientSet::zeros_like(net.lidar_branch()), nn::GradientSet::zeros_like(net.camera_branch()),
          nn::GradientSet::zeros_like(net.fusion())};
}

void StateNetGradients::add(const StateNetGradients& other, double scale) {
  nn::accumulate_into(lidar, other.lidar, scale);
  nn::accumulate_into(camera, other.camera, scale);
  nn::accumulate_into(fusion, other.fusion, scale);
}

StateNetOptimizer StateNetOptimizer::for_net(const StateNet& net, double learning_rate) {
  return {nn::AdamState::for_network(net.lidar_branch(), learning_rate),
          nn::AdamState::for_network(net.camera_branch(), learning_rate),
          nn::AdamState::for_network(net.fusion(), learning_rate)};
}

void optimizer_step(StateNet& net, const StateNetGradients& grads, StateNetOptimizer& opt) {
  if (!grads.lidar.all_finite() || !grads.camera.all_finite() || !grads.fusion.all_finite())
    throw ContractViolation("State-Net optimizer_step: non-finite gradient");
  nn::optimizer_step(net.lidar_branch(), grads.lidar, opt.lidar);
  nn::optimizer_step(net.camera_branch(), grads.camera, opt.camera);
  nn::optimizer_step(net.fusion(), grads.fusion, opt.fusion);
}

EncodedBatch encode_batch(const StateNet& net, std::span<const sim::Observation* const> observations) {
  EncodedBatch out;
  const Matrix lidar_out = nn::forward_batch(net.lidar_branch(), lidar_rows(net, observations), &out.lidar);
  const Matrix camera_out = nn::forward_batch(net.camera_branch(), camera_rows(net, observations), &out.camera);

  const auto n = static_cast<Eigen::Index>(net.state_dim());
  const auto rows = static_cast<Eigen::Index>(observations.size());
  Matrix fused_in(rows, static_cast<Eigen::Index>(net.fusion().input_size()));
  fused_in.leftCols(n) = lidar_out;
  fused_in.middleCols(n, n) = camera_out;
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& target = observations[static_cast<std::size_t>(i)]->target_xy;
    if (target.has_value() != net.multi_target())
      throw ContractViolation(net.multi_target() ? "encode: multi-target State-Net needs target_xy"
                                                 : "encode: single-target State-Net got target_xy");
    if (target) {
      fused_in(i, 2 * n) = target->x;
      fused_in(i, 2 * n + 1) = target->y;
    }
  }
  out.states = nn::forward_batch(net.fusion(), fused_in, &out.fusion);
  return out;
}

std::vector<double> encode(const StateNet& net, const sim::Observation& obs) {
  const sim::Observation* one[] = {&obs};
  auto batch = encode_batch(net, one);
  return std::vector<double>(batch.states.data(), batch.states.data() + batch.states.cols());
}

StateNetGradients backward_states(const StateNet& net, const EncodedBatch& batch, const Matrix& state_grad) {
  auto fused = nn::backward_batch(net.fusion(), batch.fusion, state_grad);
  const auto n = static_cast<Eigen::Index>(net.state_dim());
  auto lidar = nn::backward_batch(net.lidar_branch(), batch.lidar, fused.input_grad.leftCols(n));
  auto camera = nn::backward_batch(net.camera_branch(), batch.camera, fused.input_grad.middleCols(n, n));
  return {std::move(lidar.grads), std::move(camera.grads), std::move(fused.grads)};
}

LossGrad loss_temporal(const StateBatch& states, std::span<const std::size_t> rows) {
  check_states(states);
  if (rows.empty()) throw ContractViolation("loss_temporal: empty batch");
  LossGrad g = zero_grad(states);
  const double k = static_cast<double>(rows.size());
  for (std::size_t r : rows) {
    if (r >= states.size()) throw ContractViolation("loss_temporal: row outside the batch");
    const auto i = static_cast<Eigen::Index>(r);
    const Eigen::RowVectorXd delta = states.next.row(i) - states.current.row(i);
    g.value += delta.squaredNorm() / k;
    g.d_next.row(i) += (2.0 / k) * delta;
    g.d_current.row(i) -= (2.0 / k) * delta;
  }
  return g;
}

LossGrad loss_temporal(const StateBatch& states) {
  std::vector<std::size_t> rows(states.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return loss_temporal(states, rows);
}

LossGrad loss_proportionality(const StateBatch& states, std::span<const RowPair> pairs) {
  check_states(states);
  LossGrad g = zero_grad(states);
  if (pairs.empty()) return g;
  const double k = static_cast<double>(pairs.size());
  for (const auto& p : pairs) {
    check_pair(states, p);
    const auto t1 = static_cast<Eigen::Index>(p.first);
    const auto t2 = static_cast<Eigen::Index>(p.second);
    const Eigen::RowVectorXd d1 = states.next.row(t1) - states.current.row(t1);
    const Eigen::RowVectorXd d2 = states.next.row(t2) - states.current.row(t2);
    const double n1 = d1.norm();
    const double n2 = d2.norm();
    const double gap = n2 - n1;
    g.value += gap * gap / k;
    const double coef = 2.0 * gap / k;
    const Eigen::RowVectorXd g2 = (coef / std::sqrt(n2 * n2 + kNormEpsilon)) * d2;
    const Eigen::RowVectorXd g1 = (-coef / std::sqrt(n1 * n1 + kNormEpsilon)) * d1;
    g.d_next.row(t2) += g2;
    g.d_current.row(t2) -= g2;
    g.d_next.row(t1) += g1;
    g.d_current.row(t1) -= g1;
  }
  return g;
}

LossGrad loss_causality(const StateBatch& states, std::span<const RowPair> pairs) {
  check_states(states);
  LossGrad g = zero_grad(states);
  if (pairs.empty()) return g;
  const double k = static_cast<double>(pairs.size());
  for (const auto& p : pairs) {
    check_pair(states, p);
    const auto t1 = static_cast<Eigen::Index>(p.first);
    const auto t2 = static_cast<Eigen::Index>(p.second);
    const Eigen::RowVectorXd u = states.current.row(t2) - states.current.row(t1);
    const double e = std::exp(-u.squaredNorm());
    g.value += e / k;
    const Eigen::RowVectorXd du = (-2.0 * e / k) * u;
    g.d_current.row(t2) += du;
    g.d_current.row(t1) -= du;
  }
  return g;
}

LossGrad loss_repeatability(const StateBatch& states, std::span<const RowPair> pairs) {
  check_states(states);
  LossGrad g = zero_grad(states);
  if (pairs.empty()) return g;
  const double k = static_cast<double>(pairs.size());
  for (const auto& p : pairs) {
    check_pair(states, p);
    const auto t1 = static_cast<Eigen::Index>(p.first);
    const auto t2 = static_cast<Eigen::Index>(p.second);
    const Eigen::RowVectorXd u = states.current.row(t2) - states.current.row(t1);
    const Eigen::RowVectorXd v = (states.next.row(t2) - states.current.row(t2)) -
                                 (states.next.row(t1) - states.current.row(t1));
    const double e = std::exp(-u.squaredNorm());
    const double mismatch = v.squaredNorm();
    g.value += e * mismatch / k;
    const Eigen::RowVectorXd du = (-2.0 * e * mismatch / k) * u;
    const Eigen::RowVectorXd dv = (2.0 * e / k) * v;
    g.d_current.row(t2) += du - dv;
    g.d_next.row(t2) += dv;
    g.d_current.row(t1) += -du + dv;
    g.d_next.row(t1) -= dv;
  }
  return g;
}

void PriorWeights::validate() const {
  for (double w : {temporal, proportionality, causality, repeatability, regularization})
    if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("srl.weights", 0, "prior weights must be finite and >= 0");
}

PriorBatchStates encode_rows(const StateNet& net, std::span<const sim::Observation* const> current,
                             std::span<const sim::Observation* const> next, std::vector<std::size_t> base,
                             std::vector<RowPair> prop_pairs, std::vector<RowPair> caus_pairs) {
  require(current.size() == next.size(), "encode_rows: current/next size mismatch");
  PriorBatchStates out;
  out.base = std::move(base);
  out.prop_pairs = std::move(prop_pairs);
  out.caus_pairs = std::move(caus_pairs);
  out.current = encode_batch(net, current);
  out.next = encode_batch(net, next);
  return out;
}

PriorBatchStates encode_prior_batch(const StateNet& net, const replay::ReplayBuffer& buffer,
                                    const replay::PriorBatch& batch) {
  std::vector<std::size_t> unique = batch.base;
  for (const auto& [a, b] : batch.prop_pairs) unique.insert(unique.end(), {a, b});
  for (const auto& [a, b] : batch.caus_pairs) unique.insert(unique.end(), {a, b});
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  auto row = [&](std::size_t idx) {
    return static_cast<std::size_t>(std::lower_bound(unique.begin(), unique.end(), idx) - unique.begin());
  };

  std::vector<const sim::Observation*> current;
  std::vector<const sim::Observation*> next;
  current.reserve(unique.size());
  next.reserve(unique.size());
  for (std::size_t idx : unique) {
    const auto& t = buffer.at(idx);
    current.push_back(&t.obs);
    next.push_back(&t.next_obs);
  }

  std::vector<std::size_t> base;
  base.reserve(batch.base.size());
  for (std::size_t idx : batch.base) base.push_back(row(idx));
  std::vector<RowPair> prop;
  for (const auto& [a, b] : batch.prop_pairs) prop.emplace_back(row(a), row(b));
  std::vector<RowPair> caus;
  for (const auto& [a, b] : batch.caus_pairs) caus.emplace_back(row(a), row(b));

  PriorBatchStates out = encode_rows(net, current, next, std::move(base), std::move(prop), std::move(caus));
  out.transitions = std::move(unique);
  return out;
}

std::pair<double, StateNetGradients> statenet_l2_penalty(const StateNet& net) {
  auto a = nn::l2_penalty(net.lidar_branch());
  auto b = nn::l2_penalty(net.camera_branch());
  auto c = nn::l2_penalty(net.fusion());
  return {a.value + b.value + c.value, StateNetGradients{std::move(a.grads), std::move(b.grads), std::move(c.grads)}};
}

TotalLoss total_loss(const StateNet& net, const PriorBatchStates& batch, const PriorWeights& weights) {
  weights.validate();
  const StateBatch states = batch.states();
  TotalLoss out;
  auto& c = out.components;

  Matrix d_current = Matrix::Zero(states.current.rows(), states.current.cols());
  Matrix d_next = Matrix::Zero(states.next.rows(), states.next.cols());
  auto add = [&](const LossGrad& g, double w, double& slot) {
    slot = g.value;
    if (w == 0.0) return;
    d_current += w * g.d_current;
    d_next += w * g.d_next;
  };
  if (!batch.base.empty()) add(loss_temporal(states, batch.base), weights.temporal, c.temporal);
  add(loss_proportionality(states, batch.prop_pairs), weights.proportionality, c.proportionality);
  add(loss_causality(states, batch.caus_pairs), weights.causality, c.causality);
  add(loss_repeatability(states, batch.prop_pairs), weights.repeatability, c.repeatability);

  auto [reg, reg_grads] = statenet_l2_penalty(net);
  c.regularization = reg;
  c.total = weights.temporal * c.temporal + weights.proportionality * c.proportionality +
            weights.causality * c.causality + weights.repeatability * c.repeatability +
            weights.regularization * c.regularization;

  out.grads = backward_states(net, batch.current, d_current);
  out.grads.add(backward_states(net, batch.next, d_next), 1.0);
  out.grads.add(reg_grads, weights.regularization);
  return out;
}

TrainingReport train_statenet(StateNet& net, const replay::ReplayBuffer& buffer, const SrlTrainConfig& cfg,
                              StateNetOptimizer& opt, Rng& rng) {
  if (buffer.empty()) throw ContractViolation("train_statenet: empty buffer");
  TrainingReport report;
  report.delta_sim = cfg.delta_sim > 0.0 ? cfg.delta_sim : 0.05 * replay::shaping_change_scale(buffer);
  report.steps_per_epoch = cfg.steps_per_epoch > 0
                               ? cfg.steps_per_epoch
                               : std::max<std::size_t>(1, (buffer.size() + cfg.k_base - 1) / std::max<std::size_t>(1, cfg.k_base));

  replay::PriorBatchParams params;
  params.k_base = cfg.k_base;
  params.k_pairs = cfg.k_pairs;
  params.delta_sim = report.delta_sim;
  params.delta_diff = cfg.delta_diff;
  params.attempt_factor = cfg.attempt_factor;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    LossComponents sum;
    for (std::size_t s = 0; s < report.steps_per_epoch; ++s) {
      const auto batch = replay::build_prior_batch(buffer, params, rng);
      const auto states = encode_prior_batch(net, buffer, batch);
      const auto loss = total_loss(net, states, cfg.weights);
      optimizer_step(net, loss.grads, opt);
      sum.temporal += loss.components.temporal;
      sum.proportionality += loss.components.proportionality;
      sum.causality += loss.components.causality;
      sum.repeatability += loss.components.repeatability;
      sum.regularization += loss.components.regularization;
      sum.total += loss.components.total;
    }
    const double n = static_cast<double>(report.steps_per_epoch);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.mean = {sum.temporal / n, sum.proportionality / n, sum.causality / n, sum.repeatability / n,
                sum.regularization / n, sum.total / n};
    report.epochs.push_back(rec);
  }
  return report;
}

void write_report_csv(std::ostream& out, const std::vector<TrainingReport>& reports) {
  out << "update,epoch,L1,L2,L3,L4,L_reg,total\n";
  for (std::size_t u = 0; u < reports.size(); ++u) {
    for (const auto& e : reports[u].epochs) {
      out << u << ',' << e.epoch << ',' << format_real(e.mean.temporal) << ',' << format_real(e.mean.proportionality)
          << ',' << format_real(e.mean.causality) << ',' << format_real(e.mean.repeatability) << ','
          << format_real(e.mean.regularization) << ',' << format_real(e.mean.total) << '\n';
    }
  }
}

namespace {
constexpr std::string_view kStateNetMagic = "SRLPSTN1";
}

void save_statenet(const std::string& path, const StateNet& net) { io::write_file_atomic(path, statenet_file_bytes(net)); }

std::string statenet_file_bytes(const StateNet& net) {
  std::string out;
  io::put_bytes(out, kStateNetMagic);
  io::put<std::uint32_t>(out, static_cast<std::uint32_t>(net.state_dim()));
  io::put<std::uint32_t>(out, static_cast<std::uint32_t>(net.n_beams()));
  io::put<std::uint32_t>(out, static_cast<std::uint32_t>(net.n_px()));
  io::put<std::uint8_t>(out, net.multi_target() ? 1 : 0);
  io::put<double>(out, net.lidar_scale());
  nn::write_network(out, net.lidar_branch());
  nn::write_network(out, net.camera_branch());
  nn::write_network(out, net.fusion());
  return io::checksummed(out);
}

StateNet load_statenet(const std::string& path) {
  const std::string bytes = io::read_checksummed_file(path);
  io::Reader r(bytes);
  r.expect_magic(kStateNetMagic);
  const auto n = r.get<std::uint32_t>();
  const auto beams = r.get<std::uint32_t>();
  const auto px = r.get<std::uint32_t>();
  const bool multi = r.get<std::uint8_t>() != 0;
  const double scale = r.get<double>();
  std::size_t offset = r.offset();
  auto lidar = nn::read_network(bytes, offset);
  auto camera = nn::read_network(bytes, offset);
  auto fusion = nn::read_network(bytes, offset);
  if (offset != bytes.size()) throw FormatError("'" + path + "': trailing bytes after State-Net blocks");
  try {
    StateNet net(std::move(lidar), std::move(camera), std::move(fusion), multi, scale);
    if (net.state_dim() != n || net.n_beams() != beams || net.n_px() != px)
      throw FormatError("'" + path + "': header disagrees with network shapes");
    return net;
  } catch (const ContractViolation& e) {
    throw FormatError("'" + path + "': " + e.what());
  }
}

}  // namespace srlp::srl
