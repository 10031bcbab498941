#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <vector>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "srlp/analysis.hpp"
#include "srlp/svg.hpp"
#include "test_support.hpp"

using namespace srlp;
using namespace srlp::analysis;

namespace {

StateSample sample(std::vector<double> state, double x = 0.0, double distance = 0.0, int target = 0) {
  StateSample s;
  s.state = std::move(state);
  s.raw = s.state;
  s.truth.pose.x = x;
  s.truth.distance = distance;
  s.truth.target_id = target;
  s.target_id = target;
  return s;
}

std::vector<StateSample> gaussian_cloud(Rng& rng, std::size_t n, std::size_t dim, std::vector<double> centre,
                                        int target) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<StateSample> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> v(dim);
    for (std::size_t d = 0; d < dim; ++d) v[d] = centre[d] + g(rng);
    out.push_back(sample(std::move(v), 0.0, 0.0, target));
  }
  return out;
}

PcaResult with_ratios(std::vector<double> ratios) {
  PcaResult p;
  p.ratios = std::move(ratios);
  p.eigenvalues = p.ratios;
  return p;
}

}  // namespace

TEST_SUITE("analysis") {
  TEST_CASE("Jacobi eigensolver agrees with a reference solver") {
    Rng rng(1);
    for (std::size_t n : {1, 2, 3, 5, 10, 24}) {
      const Matrix a = srlp::testing::random_matrix(rng, n, n);
      const Matrix sym = a * a.transpose();
      const SymmetricEigen mine = jacobi_eigen(sym);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ref{Eigen::MatrixXd(sym)};
      const Eigen::VectorXd ref_values = ref.eigenvalues().reverse();
      for (std::size_t k = 0; k < n; ++k) {
        CHECK(mine.values[k] == doctest::Approx(ref_values(static_cast<Eigen::Index>(k))).epsilon(1e-9).scale(1.0));
        // A v = lambda v
        const Eigen::VectorXd v = mine.vectors.row(static_cast<Eigen::Index>(k)).transpose();
        CHECK((sym * v - mine.values[k] * v).norm() < 1e-8 * std::max(1.0, std::abs(mine.values[k])));
      }
      CHECK((mine.vectors * mine.vectors.transpose() - Matrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n))).cwiseAbs().maxCoeff() < 1e-10);
    }
  }

  TEST_CASE("data on a line has a single component") {
    Matrix data(50, 2);
    for (int i = 0; i < 50; ++i) {
      data(i, 0) = 0.3 * i - 2.0;
      data(i, 1) = -0.6 * i + 1.0;
    }
    const PcaResult p = pca(data);
    CHECK(p.ratios[0] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(std::abs(p.ratios[1]) < 1e-10);
  }

  TEST_CASE("an isotropic Gaussian splits variance evenly") {
    Rng rng(2);
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix data(10000, 2);
    for (Eigen::Index i = 0; i < data.size(); ++i) data.data()[i] = g(rng);
    const PcaResult p = pca(data);
    CHECK(std::abs(p.ratios[0] - 0.5) <= 0.02);
    CHECK(std::abs(p.ratios[1] - 0.5) <= 0.02);
  }

  TEST_CASE("PCA invariants on random data") {
    Rng rng(3);
    for (int trial = 0; trial < 10; ++trial) {
      const Matrix data = srlp::testing::random_matrix(rng, 40, 6) * srlp::testing::random_matrix(rng, 6, 6);
      const PcaResult p = pca(data);
      // orthonormal axes
      CHECK((p.axes * p.axes.transpose() - Matrix::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-8);
      // descending, non-negative, summing to one
      CHECK(std::accumulate(p.ratios.begin(), p.ratios.end(), 0.0) == doctest::Approx(1.0));
      for (std::size_t k = 0; k < p.ratios.size(); ++k) {
        CHECK(p.eigenvalues[k] >= -1e-12);
        if (k > 0) CHECK(p.ratios[k] <= p.ratios[k - 1]);
      }
      // exact reconstruction from all components
      const Matrix rebuilt = (p.scores * p.axes).rowwise() + p.mean.transpose();
      CHECK((rebuilt - data).cwiseAbs().maxCoeff() < 1e-8);
      // translation only moves the mean
      const Matrix shifted = data.rowwise() + Eigen::RowVectorXd::Constant(6, 7.5);
      const PcaResult q = pca(shifted);
      for (std::size_t k = 0; k < 6; ++k) CHECK(q.ratios[k] == doctest::Approx(p.ratios[k]).epsilon(1e-9));
      CHECK((q.axes.cwiseAbs() - p.axes.cwiseAbs()).cwiseAbs().maxCoeff() < 1e-6);
    }
  }

  TEST_CASE("PCA rejects degenerate inputs and handles constant data") {
    CHECK_THROWS_AS(pca(Matrix::Ones(1, 3)), ContractViolation);
    CHECK_THROWS_AS(pca(Matrix(4, 0)), ContractViolation);
    const PcaResult constant = pca(Matrix::Ones(5, 3));
    for (double r : constant.ratios) CHECK(r == 0.0);
  }

  TEST_CASE("component counting examples") {
    const PcaResult p = with_ratios({0.5, 0.3, 0.15, 0.04, 0.01});
    CHECK(count_components(p, 0.05) == 3);
    CHECK(count_components(p, 0.0) == 5);
    CHECK(count_components(p, 0.6) == 0);
    std::size_t last = count_components(p, 0.0);
    for (double t = 0.0; t <= 0.6; t += 0.01) {
      const std::size_t c = count_components(p, t);
      CHECK(c <= last);
      last = c;
    }
  }

  TEST_CASE("correlation with a channel the scores copy is one") {
    std::vector<StateSample> samples;
    for (int i = 0; i < 30; ++i) samples.push_back(sample({0.1 * i * i, 1.0}, 0.1 * i * i));
    PcaResult p = pca(samples);
    const CorrelationTable t = correlation_table(p, samples);
    CHECK(std::abs(t.r(0, 0)) == doctest::Approx(1.0));
    CHECK(t.degenerate[0][static_cast<std::size_t>(Channel::y)]);
    CHECK(t.r(0, 1) == 0.0);

    for (Eigen::Index i = 0; i < p.scores.rows(); ++i) p.scores(i, 0) = samples[static_cast<std::size_t>(i)].truth.pose.x;
    CHECK(correlation_table(p, samples).r(0, 0) == doctest::Approx(1.0));
    p.scores.col(0) *= -1.0;
    CHECK(correlation_table(p, samples).r(0, 0) == doctest::Approx(-1.0));
  }

  TEST_CASE("independent channels are uncorrelated") {
    Rng rng(4);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<StateSample> samples;
    for (int i = 0; i < 10000; ++i) {
      StateSample s = sample({g(rng), g(rng)}, g(rng), std::abs(g(rng)));
      s.truth.pose.y = g(rng);
      s.truth.pose.theta = g(rng);
      samples.push_back(s);
    }
    const CorrelationTable t = correlation_table(pca(samples), samples);
    for (Eigen::Index i = 0; i < t.r.size(); ++i) {
      CHECK(std::abs(t.r.data()[i]) < 0.05);
    }
  }

  TEST_CASE("correlation entries stay within [-1, 1] and need three samples") {
    Rng rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<StateSample> samples;
    for (int i = 0; i < 200; ++i) {
      StateSample s = sample({u(rng), u(rng) + 0.5 * i / 200.0, u(rng)}, u(rng), u(rng) + 1.0);
      s.truth.pose.y = u(rng);
      samples.push_back(s);
    }
    const CorrelationTable t = correlation_table(pca(samples), samples);
    CHECK(t.r.cwiseAbs().maxCoeff() <= 1.0);
    std::vector<StateSample> two(samples.begin(), samples.begin() + 2);
    CHECK_THROWS_AS(correlation_table(pca(two), two), ContractViolation);
  }

  TEST_CASE("clustering is perfect when states are constant within bins") {
    std::vector<StateSample> samples;
    for (int i = 0; i < 100; ++i) {
      const double d = (i % 4) * 1.0;
      samples.push_back(sample({10.0 * d, -3.0 * d}, 0.0, d));
    }
    const ClusteringResult r = reward_bin_clustering(samples, 4, BinKey::distance);
    CHECK(r.intra == 0.0);
    CHECK(r.inter > 0.0);
    CHECK(r.ratio == 0.0);
    CHECK(r.bins_used == 4);
    CHECK_FALSE(r.merged_empty_bins);
  }

  TEST_CASE("clustering of states unrelated to the key is near one") {
    Rng rng(6);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    std::vector<StateSample> samples;
    for (int i = 0; i < 10000; ++i) samples.push_back(sample({g(rng), g(rng), g(rng)}, 0.0, u(rng)));
    const ClusteringResult r = reward_bin_clustering(samples, 10, BinKey::distance);
    CHECK(std::abs(r.ratio - 1.0) < 0.1);
  }

  TEST_CASE("a single bin is rejected and empty bins are merged") {
    std::vector<StateSample> flat;
    for (int i = 0; i < 10; ++i) flat.push_back(sample({static_cast<double>(i)}, 0.0, 1.0));
    CHECK_THROWS_AS(reward_bin_clustering(flat, 10, BinKey::distance), ContractViolation);
    std::vector<StateSample> gapped;
    for (int i = 0; i < 10; ++i) gapped.push_back(sample({static_cast<double>(i)}, 0.0, i < 5 ? 0.0 : 10.0));
    const ClusteringResult r = reward_bin_clustering(gapped, 10, BinKey::distance);
    CHECK(r.merged_empty_bins);
    CHECK(r.bins_used == 2);
    CHECK_THROWS_AS(reward_bin_clustering(gapped, 1, BinKey::distance), ContractViolation);
  }

  TEST_CASE("orientation key bins by heading error") {
    std::vector<StateSample> samples;
    for (int i = 0; i < 40; ++i) {
      StateSample s = sample({i % 2 == 0 ? 0.0 : 5.0}, 0.0, 1.0 + 0.01 * i);
      s.truth.heading_error = i % 2 == 0 ? 0.1 : 3.0;
      samples.push_back(s);
    }
    CHECK(reward_bin_clustering(samples, 2, BinKey::orientation).ratio == 0.0);
    CHECK(reward_bin_clustering(samples, 2, BinKey::distance).ratio > 0.5);
  }

  TEST_CASE("target separation examples") {
    Rng rng(7);
    const std::vector<StateSample> cloud = gaussian_cloud(rng, 500, 3, {0, 0, 0}, 0);
    std::vector<StateSample> same = cloud;
    for (StateSample copy : cloud) {
      copy.target_id = 1;
      copy.truth.target_id = 1;
      same.push_back(copy);
    }
    CHECK(target_separation(same) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));

    std::vector<StateSample> apart = gaussian_cloud(rng, 300, 3, {0, 0, 0}, 0);
    const auto far = gaussian_cloud(rng, 300, 3, {100, 0, 0}, 1);
    apart.insert(apart.end(), far.begin(), far.end());
    const double score = target_separation(apart);
    CHECK(score > 10.0);

    Rng perm(8);
    const double baseline = target_separation_baseline(apart, 20, perm);
    CHECK(score > 3.0 * baseline);
    // Shuffled labels look like one cloud: its score is near zero.
    CHECK(baseline < 0.5);
  }

  TEST_CASE("target separation preconditions") {
    Rng rng(9);
    const auto one_target = gaussian_cloud(rng, 20, 2, {0, 0}, 0);
    CHECK_THROWS_AS(target_separation(one_target), ContractViolation);
    auto lonely = one_target;
    lonely.push_back(sample({1, 1}, 0.0, 0.0, 1));
    CHECK_THROWS_AS(target_separation(lonely), ContractViolation);
  }

  TEST_CASE("collect_states contracts") {
    sim::EnvConfig cfg;
    cfg.seed = 10;
    sim::Environment env(cfg);
    Rng rng(10);
    CollectOptions none;
    none.n_samples = 0;
    CHECK(collect_states(env, nullptr, nullptr, nullptr, none, rng).empty());

    auto collect = [&] {
      sim::Environment e(cfg);
      Rng r(11);
      Rng init(12);
      const srl::StateNet net = srl::StateNet::create({}, init);
      CollectOptions opts;
      opts.n_samples = 400;
      return collect_states(e, &net, nullptr, nullptr, opts, r);
    };
    const auto a = collect();
    const auto b = collect();
    REQUIRE(a.size() == 400);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].state == b[i].state);
      CHECK(a[i].state.size() == 10);
      CHECK(a[i].raw.size() == 36 + 96);
      CHECK(env.map().bounds.contains({a[i].truth.pose.x, a[i].truth.pose.y}));
    }
  }

  TEST_CASE("collect_states follows a Q-Net policy") {
    sim::EnvConfig cfg;
    cfg.seed = 13;
    sim::Environment env(cfg);
    Rng init(14);
    const std::vector<std::size_t> hidden{8};
    const nn::Network q = rl::make_qnet(4, hidden, init);
    const rl::FeatureMap features(rl::InputKind::ground_truth, nullptr);
    Rng rng(15);
    CollectOptions opts;
    opts.n_samples = 100;
    const auto s = collect_states(env, nullptr, &q, &features, opts, rng);
    CHECK(s.size() == 100);
    CHECK(s.front().state == s.front().raw);
    CHECK_THROWS_AS(collect_states(env, nullptr, &q, nullptr, opts, rng), ContractViolation);
  }

  TEST_CASE("svg output is well formed and escaped") {
    std::ostringstream out;
    svg::scatter(out, "a < b & c", "x", "y", {{0, 1, 2}, {2, 1, 0}});
    const std::string text = out.str();
    CHECK(text.rfind("<svg", 0) == 0);
    CHECK(text.find("a &lt; b &amp; c") != std::string::npos);
    CHECK(text.find("</svg>") != std::string::npos);
    std::ostringstream bars;
    svg::bars(bars, "variance", {"1", "2"}, {0.7, 0.3});
    CHECK(bars.str().find("<rect") != std::string::npos);
  }
}
