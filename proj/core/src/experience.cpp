#include "srlp/experience.hpp"

#include <algorithm>
#include <cmath>

#include "srlp/binary_io.hpp"

namespace srlp::replay {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : slots_(capacity), serials_(capacity, 0) {
  require(capacity > 0, "ReplayBuffer: capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
  slots_[cursor_] = std::move(t);
  serials_[cursor_] = pushed_++;
  cursor_ = (cursor_ + 1) % slots_.size();
  size_ = std::min(size_ + 1, slots_.size());
}

std::size_t ReplayBuffer::slot_of(std::size_t i) const {
  if (i >= size_) throw ContractViolation("ReplayBuffer: index out of range");
  const std::size_t oldest = (size_ == slots_.size()) ? cursor_ : 0;
  return (oldest + i) % slots_.size();
}

const Transition& ReplayBuffer::at(std::size_t i) const { return slots_[slot_of(i)]; }

std::uint64_t ReplayBuffer::serial(std::size_t i) const { return serials_[slot_of(i)]; }

std::optional<std::size_t> ReplayBuffer::successor(std::size_t i) const {
  const auto& t = at(i);
  if (t.terminal() || i + 1 >= size_) return std::nullopt;
  const auto& next = at(i + 1);
  if (next.episode != t.episode || next.step != t.step + 1) return std::nullopt;
  return i + 1;
}

std::optional<double> ReplayBuffer::reward_change(std::size_t i) const {
  auto next = successor(i);
  if (!next) return std::nullopt;
  return at(*next).reward - at(i).reward;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t k, Rng& rng) const {
  // Draws are with replacement, so only an empty buffer is underfull.
  if (k > 0 && size_ == 0) throw ContractViolation("sample_uniform: buffer is empty");
  if (k == 0) return {};
  std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
  std::vector<std::size_t> out(k);
  for (auto& i : out) i = pick(rng);
  return out;
}

std::vector<Transition> ReplayBuffer::sample_uniform(std::size_t k, Rng& rng) const {
  std::vector<Transition> out;
  out.reserve(k);
  for (auto i : sample_indices(k, rng)) out.push_back(at(i));
  return out;
}

bool similar_reward_change(const ReplayBuffer& buffer, std::size_t t1, std::size_t t2, double delta_sim) {
  auto d1 = buffer.reward_change(t1);
  auto d2 = buffer.reward_change(t2);
  if (!d1 || !d2) return false;
  return std::abs(std::abs(*d2) - std::abs(*d1)) <= delta_sim;
}

bool different_reward(const ReplayBuffer& buffer, std::size_t t1, std::size_t t2, double delta_diff) {
  return std::abs(buffer.at(t2).reward - buffer.at(t1).reward) > delta_diff;
}

PriorBatch build_prior_batch(const ReplayBuffer& buffer, const PriorBatchParams& params, Rng& rng) {
  if (buffer.empty()) throw ContractViolation("build_prior_batch: no eligible transitions");
  PriorBatch batch;
  const std::size_t n = buffer.size();
  std::uniform_int_distribution<std::size_t> pick_any(0, n - 1);

  batch.base.resize(params.k_base);
  for (auto& i : batch.base) i = pick_any(rng);

  std::vector<std::size_t> with_change;
  std::vector<double> change;
  for (std::size_t i = 0; i < n; ++i) {
    if (auto dr = buffer.reward_change(i)) {
      with_change.push_back(i);
      change.push_back(std::abs(*dr));
    }
  }

  const std::size_t budget = params.attempt_factor * params.k_pairs;
  if (with_change.size() >= 2) {
    std::uniform_int_distribution<std::size_t> pick(0, with_change.size() - 1);
    for (std::size_t attempt = 0; attempt < budget && batch.prop_pairs.size() < params.k_pairs; ++attempt) {
      const std::size_t a = pick(rng);
      const std::size_t b = pick(rng);
      if (a == b) continue;
      if (std::abs(change[b] - change[a]) <= params.delta_sim)
        batch.prop_pairs.emplace_back(with_change[a], with_change[b]);
    }
  }

  if (n >= 2) {
    for (std::size_t attempt = 0; attempt < budget && batch.caus_pairs.size() < params.k_pairs; ++attempt) {
      const std::size_t a = pick_any(rng);
      const std::size_t b = pick_any(rng);
      if (a == b) continue;
      if (different_reward(buffer, a, b, params.delta_diff)) batch.caus_pairs.emplace_back(a, b);
    }
  }
  return batch;
}

double shaping_change_scale(const ReplayBuffer& buffer) {
  double scale = 0.0;
  for (std::size_t i = 0; i < buffer.size(); ++i) {
    auto next = buffer.successor(i);
    if (!next || buffer.at(*next).terminal()) continue;
    scale = std::max(scale, std::abs(buffer.at(*next).reward - buffer.at(i).reward));
  }
  return scale;
}

namespace {

constexpr std::string_view kBufferMagic = "SRLPBUF1";

void put_obs(std::string& out, const sim::Observation& o) {
  io::put<std::uint32_t>(out, static_cast<std::uint32_t>(o.lidar.size()));
  for (double r : o.lidar) io::put<double>(out, r);
  io::put<std::uint32_t>(out, static_cast<std::uint32_t>(o.camera.size()));
  for (const auto& px : o.camera) {
    io::put<double>(out, px.r);
    io::put<double>(out, px.g);
    io::put<double>(out, px.b);
  }
  io::put<std::uint8_t>(out, o.target_xy ? 1 : 0);
  if (o.target_xy) {
    io::put<double>(out, o.target_xy->x);
    io::put<double>(out, o.target_xy->y);
  }
}

sim::Observation get_obs(io::Reader& r) {
  sim::Observation o;
  const auto nl = r.get<std::uint32_t>();
  if (nl > r.remaining() / sizeof(double)) throw FormatError("snapshot: implausible lidar length");
  o.lidar.resize(nl);
  for (auto& v : o.lidar) v = r.get<double>();
  const auto np = r.get<std::uint32_t>();
  if (np > r.remaining() / (3 * sizeof(double))) throw FormatError("snapshot: implausible camera length");
  o.camera.resize(np);
  for (auto& px : o.camera) {
    px.r = r.get<double>();
    px.g = r.get<double>();
    px.b = r.get<double>();
  }
  if (r.get<std::uint8_t>() != 0) {
    const double x = r.get<double>();
    const double y = r.get<double>();
    o.target_xy = geo::Vec2{x, y};
  }
  return o;
}

void put_truth(std::string& out, const sim::Truth& t) {
  io::put<double>(out, t.pose.x);
  io::put<double>(out, t.pose.y);
  io::put<double>(out, t.pose.theta);
  io::put<double>(out, t.distance);
  io::put<double>(out, t.heading_error);
  io::put<std::int32_t>(out, t.target_id);
}

sim::Truth get_truth(io::Reader& r) {
  sim::Truth t;
  t.pose.x = r.get<double>();
  t.pose.y = r.get<double>();
  t.pose.theta = r.get<double>();
  t.distance = r.get<double>();
  t.heading_error = r.get<double>();
  t.target_id = r.get<std::int32_t>();
  return t;
}

}  // namespace

void save_buffer(const std::string& path, const ReplayBuffer& buffer) {
  std::string out;
  io::put_bytes(out, kBufferMagic);
  io::put<std::uint64_t>(out, buffer.capacity());
  io::put<std::uint64_t>(out, buffer.size());
  for (std::size_t i = 0; i < buffer.size(); ++i) {
    const auto& t = buffer.at(i);
    put_obs(out, t.obs);
    io::put<std::uint8_t>(out, static_cast<std::uint8_t>(t.action));
    io::put<double>(out, t.reward);
    put_obs(out, t.next_obs);
    io::put<std::uint8_t>(out, static_cast<std::uint8_t>(t.outcome));
    put_truth(out, t.truth);
    put_truth(out, t.next_truth);
    io::put<std::uint64_t>(out, t.episode);
    io::put<std::uint32_t>(out, t.step);
  }
  io::write_checksummed_file(path, out);
}

ReplayBuffer load_buffer(const std::string& path) {
  const std::string bytes = io::read_checksummed_file(path);
  io::Reader r(bytes);
  r.expect_magic(kBufferMagic);
  const auto capacity = r.get<std::uint64_t>();
  const auto count = r.get<std::uint64_t>();
  if (capacity == 0 || count > capacity || capacity > (1ULL << 32)) throw FormatError("snapshot: bad header");
  ReplayBuffer buffer(static_cast<std::size_t>(capacity));
  for (std::uint64_t i = 0; i < count; ++i) {
    Transition t;
    t.obs = get_obs(r);
    const auto a = r.get<std::uint8_t>();
    if (a >= sim::kActionCount) throw FormatError("snapshot: bad action tag");
    t.action = static_cast<sim::Action>(a);
    t.reward = r.get<double>();
    t.next_obs = get_obs(r);
    const auto o = r.get<std::uint8_t>();
    if (o > static_cast<std::uint8_t>(sim::Terminal::timeout)) throw FormatError("snapshot: bad terminal tag");
    t.outcome = static_cast<sim::Terminal>(o);
    t.truth = get_truth(r);
    t.next_truth = get_truth(r);
    t.episode = r.get<std::uint64_t>();
    t.step = r.get<std::uint32_t>();
    buffer.push(std::move(t));
  }
  if (r.remaining() != 0) throw FormatError("snapshot: trailing bytes");
  return buffer;
}

}  // namespace srlp::replay
