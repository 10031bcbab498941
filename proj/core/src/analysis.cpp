#include "srlp/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace srlp::analysis {

std::vector<StateSample> collect_states(sim::Environment& env, const srl::StateNet* statenet,
                                        const nn::Network* qnet, const rl::FeatureMap* qnet_features,
                                        const CollectOptions& opts, Rng& rng) {
  if (qnet != nullptr && qnet_features == nullptr)
    throw ContractViolation("collect_states: a Q-Net policy needs its feature map");
  std::vector<StateSample> out;
  out.reserve(opts.n_samples);
  std::uniform_int_distribution<std::size_t> pick(0, sim::kActionCount - 1);
  while (out.size() < opts.n_samples) {
    sim::Observation obs = env.reset();
    sim::Truth truth = env.truth();
    bool done = false;
    while (!done && out.size() < opts.n_samples) {
      sim::Action action = sim::action_from_index(0);
      if (qnet != nullptr) {
        action = rl::select_action(*qnet, (*qnet_features)(obs, truth), opts.epsilon, rng);
      } else {
        action = sim::action_from_index(pick(rng));
      }
      sim::StepResult res = env.step(action);
      StateSample s;
      s.raw = rl::observation_features(res.observation);
      s.state = statenet != nullptr ? srl::encode(*statenet, res.observation) : s.raw;
      s.truth = res.truth;
      s.reward = res.reward;
      s.target_id = res.truth.target_id;
      out.push_back(std::move(s));
      done = res.terminal != sim::Terminal::none;
      obs = std::move(res.observation);
      truth = res.truth;
    }
  }
  return out;
}

Matrix state_matrix(const std::vector<StateSample>& samples, bool raw) {
  if (samples.empty()) return Matrix(0, 0);
  const auto& first = raw ? samples.front().raw : samples.front().state;
  Matrix m(static_cast<Eigen::Index>(samples.size()), static_cast<Eigen::Index>(first.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& v = raw ? samples[i].raw : samples[i].state;
    require(v.size() == first.size(), "state_matrix: samples differ in dimension");
    for (std::size_t j = 0; j < v.size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v[j];
  }
  return m;
}

SymmetricEigen jacobi_eigen(const Matrix& symmetric, double tolerance, int max_sweeps) {
  const Eigen::Index n = symmetric.rows();
  require(n == symmetric.cols(), "jacobi_eigen: matrix is not square");
  Matrix a = symmetric;
  Matrix v = Matrix::Identity(n, n);
  const double scale = std::max(a.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off = std::max(off, std::abs(a(p, q)));
    if (off <= tolerance * scale) break;

    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= tolerance * scale * 1e-3) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) { return a(i, i) > a(j, j); });

  SymmetricEigen out;
  out.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index src = order[static_cast<std::size_t>(k)];
    out.values.push_back(a(src, src));
    out.vectors.row(k) = v.col(src).transpose();
  }
  return out;
}

PcaResult pca(const Matrix& data) {
  if (data.rows() < 2) throw ContractViolation("pca: at least 2 samples are required");
  if (data.cols() < 1) throw ContractViolation("pca: samples have no dimensions");
  PcaResult out;
  out.mean = data.colwise().mean().transpose();
  const Matrix centered = data.rowwise() - out.mean.transpose();
  const Matrix cov = (centered.transpose() * centered) / static_cast<double>(data.rows() - 1);
  SymmetricEigen eig = jacobi_eigen(cov);

  double total = 0.0;
  for (auto& ev : eig.values) {
    ev = std::max(ev, 0.0);
    total += ev;
  }
  for (Eigen::Index k = 0; k < eig.vectors.rows(); ++k) {
    Eigen::Index arg = 0;
    eig.vectors.row(k).cwiseAbs().maxCoeff(&arg);
    if (eig.vectors(k, arg) < 0.0) eig.vectors.row(k) *= -1.0;
  }
  out.axes = eig.vectors;
  out.eigenvalues = eig.values;
  out.ratios.resize(eig.values.size(), 0.0);
  if (total > 0.0)
    for (std::size_t k = 0; k < eig.values.size(); ++k) out.ratios[k] = eig.values[k] / total;
  out.scores = centered * out.axes.transpose();
  return out;
}

PcaResult pca(const std::vector<StateSample>& samples) { return pca(state_matrix(samples)); }

std::size_t count_components(const PcaResult& result, double threshold) {
  return static_cast<std::size_t>(
      std::count_if(result.ratios.begin(), result.ratios.end(), [&](double r) { return r >= threshold; }));
}

std::string to_string(Channel c) {
  switch (c) {
    case Channel::x:
      return "x";
    case Channel::y:
      return "y";
    case Channel::theta:
      return "theta";
    case Channel::distance:
      return "distance";
  }
  return "unknown";
}

double channel_value(const sim::Truth& truth, Channel c) {
  switch (c) {
    case Channel::x:
      return truth.pose.x;
    case Channel::y:
      return truth.pose.y;
    case Channel::theta:
      return truth.pose.theta;
    case Channel::distance:
      return truth.distance;
  }
  return 0.0;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b, bool* degenerate) {
  require(a.size() == b.size(), "pearson: series differ in length");
  require(!a.empty(), "pearson: empty series");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  const bool flat = !(saa > 0.0) || !(sbb > 0.0);
  if (degenerate) *degenerate = flat;
  if (flat) return 0.0;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

CorrelationTable correlation_table(const PcaResult& result, const std::vector<StateSample>& samples) {
  if (samples.size() < 3) throw ContractViolation("correlation_table: at least 3 samples are required");
  if (static_cast<std::size_t>(result.scores.rows()) != samples.size())
    throw ContractViolation("correlation_table: score rows do not match the samples");
  const auto comps = static_cast<std::size_t>(result.scores.cols());
  CorrelationTable out;
  out.r = Matrix::Zero(static_cast<Eigen::Index>(comps), static_cast<Eigen::Index>(kChannelCount));
  out.degenerate.assign(comps, std::vector<bool>(kChannelCount, false));

  std::vector<std::vector<double>> channels(kChannelCount, std::vector<double>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (std::size_t c = 0; c < kChannelCount; ++c)
      channels[c][i] = channel_value(samples[i].truth, static_cast<Channel>(c));

  std::vector<double> scores(samples.size());
  for (std::size_t k = 0; k < comps; ++k) {
    for (std::size_t i = 0; i < samples.size(); ++i)
      scores[i] = result.scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
    for (std::size_t c = 0; c < kChannelCount; ++c) {
      bool flat = false;
      out.r(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c)) = pearson(scores, channels[c], &flat);
      out.degenerate[k][c] = flat;
    }
  }
  return out;
}

std::string to_string(BinKey k) { return k == BinKey::distance ? "distance" : "orientation"; }

BinKey bin_key_from_string(const std::string& s) {
  if (s == "distance") return BinKey::distance;
  if (s == "orientation") return BinKey::orientation;
  throw ContractViolation("unknown clustering key '" + s + "'");
}

ClusteringResult reward_bin_clustering(const std::vector<StateSample>& samples, std::size_t n_bins, BinKey key,
                                       bool raw) {
  require(n_bins >= 1, "reward_bin_clustering: n_bins must be positive");
  if (samples.size() < 2) throw ContractViolation("reward_bin_clustering: at least 2 samples are required");
  std::vector<double> keys(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i)
    keys[i] = key == BinKey::distance ? samples[i].truth.distance : samples[i].truth.heading_error;
  const auto [lo_it, hi_it] = std::minmax_element(keys.begin(), keys.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!(hi > lo) || n_bins < 2) throw ContractViolation("reward_bin_clustering: a single bin leaves inter-bin distance undefined");

  std::vector<std::size_t> raw_bin(samples.size());
  std::vector<std::size_t> counts(n_bins, 0);
  const double width = (hi - lo) / static_cast<double>(n_bins);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto b = std::min(static_cast<std::size_t>((keys[i] - lo) / width), n_bins - 1);
    raw_bin[i] = b;
    ++counts[b];
  }

  ClusteringResult out;
  std::vector<std::size_t> merged(n_bins);
  std::size_t label = 0;
  bool seen_any = false;
  for (std::size_t b = 0; b < n_bins; ++b) {
    if (counts[b] == 0) {
      out.merged_empty_bins = true;
      merged[b] = label;
      continue;
    }
    if (seen_any) ++label;
    seen_any = true;
    merged[b] = label;
  }
  out.bins_used = label + 1;
  if (out.bins_used < 2) throw ContractViolation("reward_bin_clustering: a single bin leaves inter-bin distance undefined");

  const Matrix m = state_matrix(samples, raw);
  const Eigen::Index n = m.rows();
  double intra_sum = 0.0;
  double inter_sum = 0.0;
  std::size_t intra_n = 0;
  std::size_t inter_n = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::size_t bi = merged[raw_bin[static_cast<std::size_t>(i)]];
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = (m.row(i) - m.row(j)).norm();
      if (merged[raw_bin[static_cast<std::size_t>(j)]] == bi) {
        intra_sum += d;
        ++intra_n;
      } else {
        inter_sum += d;
        ++inter_n;
      }
    }
  }
  out.intra = intra_n > 0 ? intra_sum / static_cast<double>(intra_n) : 0.0;
  out.inter = inter_sum / static_cast<double>(inter_n);
  out.ratio = out.inter > 0.0 ? out.intra / out.inter : 0.0;
  return out;
}

namespace {

double separation_with_labels(const Matrix& m, const std::vector<int>& labels) {
  std::map<int, std::vector<Eigen::Index>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(static_cast<Eigen::Index>(i));
  if (groups.size() < 2) throw ContractViolation("target_separation: at least two targets are required");
  std::vector<nn::Vector> centroids;
  double spread = 0.0;
  for (const auto& [id, rows] : groups) {
    if (rows.size() < 2)
      throw ContractViolation("target_separation: target " + std::to_string(id) + " has fewer than 2 samples");
    nn::Vector c = nn::Vector::Zero(m.cols());
    for (auto r : rows) c += m.row(r).transpose();
    c /= static_cast<double>(rows.size());
    double s = 0.0;
    for (auto r : rows) s += (m.row(r).transpose() - c).norm();
    spread += s / static_cast<double>(rows.size());
    centroids.push_back(std::move(c));
  }
  spread /= static_cast<double>(groups.size());
  double between = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < centroids.size(); ++a)
    for (std::size_t b = a + 1; b < centroids.size(); ++b) {
      between += (centroids[a] - centroids[b]).norm();
      ++pairs;
    }
  between /= static_cast<double>(pairs);
  if (between == 0.0) return 0.0;
  if (spread == 0.0) return std::numeric_limits<double>::infinity();
  return between / spread;
}

std::vector<int> labels_of(const std::vector<StateSample>& samples) {
  std::vector<int> labels(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) labels[i] = samples[i].target_id;
  return labels;
}

}  // namespace

double target_separation(const std::vector<StateSample>& samples) {
  return separation_with_labels(state_matrix(samples), labels_of(samples));
}

double target_separation_baseline(const std::vector<StateSample>& samples, std::size_t repetitions, Rng& rng) {
  require(repetitions > 0, "target_separation_baseline: repetitions must be positive");
  const Matrix m = state_matrix(samples);
  std::vector<int> labels = labels_of(samples);
  double total = 0.0;
  for (std::size_t r = 0; r < repetitions; ++r) {
    for (std::size_t i = labels.size(); i > 1; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i - 1);
      std::swap(labels[i - 1], labels[pick(rng)]);
    }
    total += separation_with_labels(m, labels);
  }
  return total / static_cast<double>(repetitions);
}

}  // namespace srlp::analysis
