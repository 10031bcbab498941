#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "srlp/nn.hpp"
#include "srlp/rl.hpp"
#include "srlp/simulator.hpp"
#include "srlp/srl.hpp"

// Representation diagnostics: PCA, component counting, correlation with the
// physical state, reward-bin clustering and multi-target separation.
namespace srlp::analysis {

using nn::Matrix;

struct StateSample {
  std::vector<double> state;  // encoder output (or raw features when no encoder is given)
  std::vector<double> raw;    // observation features as fed to the observation baseline
  sim::Truth truth;           // simulator ground truth after the step
  double reward = 0.0;        // reward received on that step
  int target_id = 0;
};

/// Rollouts under an epsilon-greedy policy over `qnet` (or a uniform random
/// policy when `qnet` is null); one sample per step, `n_samples` in total.
struct CollectOptions {
  std::size_t n_samples = 5000;
  double epsilon = 0.2;
};
std::vector<StateSample> collect_states(sim::Environment& env, const srl::StateNet* statenet,
                                        const nn::Network* qnet, const rl::FeatureMap* qnet_features,
                                        const CollectOptions& opts, Rng& rng);

/// Stacks the chosen vectors into one row per sample.
Matrix state_matrix(const std::vector<StateSample>& samples, bool raw = false);

struct PcaResult {
  nn::Vector mean;
  Matrix axes;                        // row k is the k-th principal axis (unit length)
  std::vector<double> eigenvalues;    // descending
  std::vector<double> ratios;         // eigenvalue / total variance; all zero if the data is constant
  Matrix scores;                      // (data - mean) * axes^T
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Eigenvalues are
/// returned in descending order with matching unit eigenvectors as rows.
struct SymmetricEigen {
  std::vector<double> values;
  Matrix vectors;
};
SymmetricEigen jacobi_eigen(const Matrix& symmetric, double tolerance = 1e-14, int max_sweeps = 100);

/// Throws ContractViolation with fewer than 2 rows or 0 columns. Each axis is
/// signed so that its largest-magnitude entry is positive.
PcaResult pca(const Matrix& data);
PcaResult pca(const std::vector<StateSample>& samples);

/// Number of components whose explained-variance ratio is >= threshold.
std::size_t count_components(const PcaResult& result, double threshold);

enum class Channel : std::uint8_t { x = 0, y = 1, theta = 2, distance = 3 };
inline constexpr std::size_t kChannelCount = 4;
std::string to_string(Channel c);
double channel_value(const sim::Truth& truth, Channel c);

struct CorrelationTable {
  Matrix r;                                   // components x channels
  std::vector<std::vector<bool>> degenerate;  // true where either series had zero variance (r reported as 0)
};

/// Sample Pearson correlation; zero-variance input yields 0 and sets `degenerate`.
double pearson(const std::vector<double>& a, const std::vector<double>& b, bool* degenerate = nullptr);

/// Throws ContractViolation with fewer than 3 samples or mismatched sizes.
CorrelationTable correlation_table(const PcaResult& result, const std::vector<StateSample>& samples);

enum class BinKey : std::uint8_t { distance = 0, orientation = 1 };
std::string to_string(BinKey k);
BinKey bin_key_from_string(const std::string& s);

struct ClusteringResult {
  double intra = 0.0;  // mean pairwise distance within bins
  double inter = 0.0;  // mean pairwise distance across bins
  double ratio = 0.0;  // intra / inter
  std::size_t bins_used = 0;
  bool merged_empty_bins = false;
};

/// Equal-width bins over the observed range of the key (distance to target or
/// heading error). Empty bins are merged into a neighbour and flagged; fewer
/// than two occupied bins throws ContractViolation. `raw` selects the raw
/// observation features instead of the encoded states.
ClusteringResult reward_bin_clustering(const std::vector<StateSample>& samples, std::size_t n_bins, BinKey key,
                                       bool raw = false);

/// (mean distance between target centroids) / (mean distance of samples to
/// their own target centroid). Throws ContractViolation with fewer than two
/// targets or a target with fewer than two samples.
double target_separation(const std::vector<StateSample>& samples);

/// Mean target_separation over `repetitions` random relabelings that keep
/// the per-target counts.
double target_separation_baseline(const std::vector<StateSample>& samples, std::size_t repetitions, Rng& rng);

}  // namespace srlp::analysis
