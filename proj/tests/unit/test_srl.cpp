#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "srlp/binary_io.hpp"
#include "srlp/experience.hpp"
#include "srlp/srl.hpp"
#include "test_support.hpp"

using namespace srlp;
using namespace srlp::srl;
using srlp::testing::LossKind;

namespace {

StateBatch batch_of(std::initializer_list<std::vector<double>> current, std::initializer_list<std::vector<double>> next) {
  auto to_matrix = [](std::initializer_list<std::vector<double>> rows) {
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
    Eigen::Index r = 0;
    for (const auto& row : rows) {
      for (std::size_t c = 0; c < row.size(); ++c) m(r, static_cast<Eigen::Index>(c)) = row[c];
      ++r;
    }
    return m;
  };
  return {to_matrix(current), to_matrix(next)};
}

/// Env1 transitions under a uniformly random policy.
replay::ReplayBuffer env_buffer(std::uint64_t seed, std::size_t n, bool multi_target = false) {
  sim::EnvConfig cfg;
  cfg.seed = seed;
  cfg.multi_target = multi_target;
  sim::Environment env(cfg);
  Rng rng(seed + 100);
  std::discrete_distribution<int> pick({0.6, 0.2, 0.2});
  replay::ReplayBuffer buffer(n);
  std::uint64_t episode = 0;
  sim::Observation obs = env.reset();
  std::uint32_t step = 0;
  while (buffer.size() < n) {
    replay::Transition t;
    t.obs = obs;
    t.truth = env.truth();
    t.action = sim::action_from_index(static_cast<std::size_t>(pick(rng)));
    const sim::StepResult r = env.step(t.action);
    t.reward = r.reward;
    t.next_obs = r.observation;
    t.next_truth = r.truth;
    t.outcome = r.terminal;
    t.episode = episode;
    t.step = step++;
    buffer.push(t);
    obs = r.observation;
    if (r.terminal != sim::Terminal::none) {
      obs = env.reset();
      ++episode;
      step = 0;
    }
  }
  return buffer;
}

}  // namespace

TEST_SUITE("srl") {
  TEST_CASE("temporal coherence examples") {
    CHECK(loss_temporal(batch_of({{1, 2}}, {{1, 2}})).value == 0.0);
    CHECK(loss_temporal(batch_of({{0, 0}}, {{1, 1}})).value == doctest::Approx(2.0));
    CHECK(loss_temporal(batch_of({{0, 0}, {3, 3}}, {{1, 1}, {3, 3}})).value == doctest::Approx(1.0));
  }

  TEST_CASE("proportionality examples") {
    const StateBatch s = batch_of({{0, 0}, {0, 0}}, {{1, 0}, {0, 2}});
    const std::vector<RowPair> pair{{0, 1}};
    CHECK(loss_proportionality(s, pair).value == doctest::Approx(1.0));
    const StateBatch equal = batch_of({{0, 0}, {5, 5}}, {{1, 0}, {5, 6}});
    CHECK(loss_proportionality(equal, pair).value == doctest::Approx(0.0));
    const auto empty = loss_proportionality(s, {});
    CHECK(empty.value == 0.0);
    CHECK(empty.d_current.isZero());
    CHECK(empty.d_next.isZero());
  }

  TEST_CASE("proportionality stays finite when state changes collapse") {
    const StateBatch s = batch_of({{1, 1}, {2, 2}}, {{1, 1}, {2, 2}});
    const std::vector<RowPair> pair{{0, 1}};
    const auto g = loss_proportionality(s, pair);
    CHECK(g.value == 0.0);
    CHECK(g.d_current.allFinite());
    CHECK(g.d_next.allFinite());
  }

  TEST_CASE("causality examples") {
    const std::vector<RowPair> pair{{0, 1}};
    CHECK(loss_causality(batch_of({{1, 1}, {1, 1}}, {{0, 0}, {0, 0}}), pair).value == doctest::Approx(1.0));
    CHECK(loss_causality(batch_of({{0, 0}, {1, 0}}, {{0, 0}, {0, 0}}), pair).value ==
          doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    CHECK(loss_causality(batch_of({{0, 0}, {10, 0}}, {{0, 0}, {0, 0}}), pair).value < 1e-40);
    CHECK(loss_causality(batch_of({{0, 0}, {10, 0}}, {{0, 0}, {0, 0}}), {}).value == 0.0);
  }

  TEST_CASE("repeatability examples") {
    const std::vector<RowPair> pair{{0, 1}};
    CHECK(loss_repeatability(batch_of({{0, 0}, {3, 1}}, {{1, 1}, {4, 2}}), pair).value == doctest::Approx(0.0));
    CHECK(loss_repeatability(batch_of({{0, 0}, {0, 0}}, {{2, 0}, {0, 0}}), pair).value == doctest::Approx(4.0));
    CHECK(loss_repeatability(batch_of({{0, 0}, {20, 0}}, {{2, 0}, {20, 0}}), pair).value < 1e-100);
    CHECK(loss_repeatability(batch_of({{0, 0}, {20, 0}}, {{2, 0}, {20, 0}}), {}).value == 0.0);
  }

  TEST_CASE("prior losses are non-negative and causality lies in (0, 1]") {
    Rng rng(1);
    for (int trial = 0; trial < 50; ++trial) {
      const StateNet net = srlp::testing::tiny_statenet(rng);
      const auto fixture = srlp::testing::random_prior_fixture(rng, net, 6, 5);
      const auto batch = fixture.encode(net);
      const auto states = batch.states();
      CHECK(loss_temporal(states, batch.base).value >= 0.0);
      CHECK(loss_proportionality(states, batch.prop_pairs).value >= 0.0);
      const double l3 = loss_causality(states, batch.caus_pairs).value;
      CHECK(l3 > 0.0);
      CHECK(l3 <= 1.0);
      CHECK(loss_repeatability(states, batch.prop_pairs).value >= 0.0);
    }
  }

  TEST_CASE("every loss gradient matches finite differences through the encoder") {
    Rng rng(2);
    for (LossKind kind : {LossKind::temporal, LossKind::proportionality, LossKind::causality,
                          LossKind::repeatability, LossKind::total}) {
      for (int trial = 0; trial < 10; ++trial) {
        const auto check = srlp::testing::gradient_instance(kind, rng);
        INFO(srlp::testing::to_string(kind) << " trial " << trial << " worst " << check.worst_rel);
        CHECK(check.ok());
      }
    }
  }

  TEST_CASE("total loss equals the direct re-evaluation from encoded states") {
    Rng rng(3);
    for (int trial = 0; trial < 40; ++trial) {
      CHECK(srlp::testing::oracle_instance(rng, trial % 2 == 0) < 1e-9);
    }
  }

  TEST_CASE("default weights are 3, 15, 15, 15, 3") {
    const PriorWeights w;
    CHECK(w.temporal == 3.0);
    CHECK(w.proportionality == 15.0);
    CHECK(w.causality == 15.0);
    CHECK(w.repeatability == 15.0);
    CHECK(w.regularization == 3.0);
    Rng rng(4);
    const StateNet net = srlp::testing::tiny_statenet(rng);
    const auto fixture = srlp::testing::random_prior_fixture(rng, net, 6, 4);
    const auto c = total_loss(net, fixture.encode(net), w).components;
    CHECK(c.total == 3 * c.temporal + 15 * c.proportionality + 15 * c.causality + 15 * c.repeatability +
                         3 * c.regularization);
  }

  TEST_CASE("zero weights give zero loss and zero gradients") {
    Rng rng(5);
    const StateNet net = srlp::testing::tiny_statenet(rng);
    const auto fixture = srlp::testing::random_prior_fixture(rng, net, 6, 4);
    const auto loss = total_loss(net, fixture.encode(net), {0, 0, 0, 0, 0});
    CHECK(loss.components.total == 0.0);
    CHECK(loss.grads.lidar.max_abs() == 0.0);
    CHECK(loss.grads.camera.max_abs() == 0.0);
    CHECK(loss.grads.fusion.max_abs() == 0.0);
  }

  TEST_CASE("regularization weight alone reduces to the L2 penalty") {
    Rng rng(6);
    const StateNet net = srlp::testing::tiny_statenet(rng);
    const auto fixture = srlp::testing::random_prior_fixture(rng, net, 6, 4);
    const auto loss = total_loss(net, fixture.encode(net), {0, 0, 0, 0, 1});
    const auto [penalty, grads] = statenet_l2_penalty(net);
    CHECK(loss.components.total == doctest::Approx(penalty).epsilon(1e-14));
    CHECK(penalty == doctest::Approx(nn::l2_penalty(net.lidar_branch()).value +
                                     nn::l2_penalty(net.camera_branch()).value + nn::l2_penalty(net.fusion()).value));
    CHECK(nn::accumulate(loss.grads.fusion, grads.fusion, -1.0).max_abs() < 1e-12);
  }

  TEST_CASE("prior losses are invariant under a global state translation") {
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
      StateNet net = srlp::testing::tiny_statenet(rng);
      const auto fixture = srlp::testing::random_prior_fixture(rng, net, 6, 5);
      const auto before = total_loss(net, fixture.encode(net), {}).components;
      auto& out = net.fusion().mutable_layer(net.fusion().layer_count() - 1);
      out.biases += srlp::testing::random_matrix(rng, out.biases.size(), 1, 3.0).col(0);
      const auto after = total_loss(net, fixture.encode(net), {}).components;
      CHECK(after.temporal == doctest::Approx(before.temporal).epsilon(1e-10));
      CHECK(after.proportionality == doctest::Approx(before.proportionality).epsilon(1e-10));
      CHECK(after.causality == doctest::Approx(before.causality).epsilon(1e-10));
      CHECK(after.repeatability == doctest::Approx(before.repeatability).epsilon(1e-10));
    }
  }

  TEST_CASE("negative prior weights are rejected") {
    PriorWeights w;
    w.causality = -1.0;
    CHECK_THROWS_AS(w.validate(), ConfigError);
  }

  TEST_CASE("encoding rejects observations of the wrong shape") {
    Rng rng(8);
    const StateNet net = srlp::testing::tiny_statenet(rng);
    sim::Observation wrong = srlp::testing::random_observation(rng, 5, 2, false);
    CHECK_THROWS_AS(encode(net, wrong), ContractViolation);
    sim::Observation targeted = srlp::testing::random_observation(rng, 4, 2, true);
    CHECK_THROWS_AS(encode(net, targeted), ContractViolation);
  }

  TEST_CASE("batched encoding agrees with the plain-loop encoder") {
    Rng rng(9);
    const StateNet net = srlp::testing::tiny_statenet(rng, true);
    const sim::Observation o = srlp::testing::random_observation(rng, 4, 2, true);
    const auto a = encode(net, o);
    const auto b = srlp::testing::oracle_encode(net, o);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-13));
  }

  TEST_CASE("zero epochs leave the State-Net unchanged") {
    const auto buffer = env_buffer(10, 200);
    Rng rng(10);
    StateNet net = StateNet::create({}, rng);
    const StateNet before = net;
    SrlTrainConfig cfg;
    cfg.epochs = 0;
    auto opt = StateNetOptimizer::for_net(net, cfg.learning_rate);
    const auto report = train_statenet(net, buffer, cfg, opt, rng);
    CHECK(report.epochs.empty());
    CHECK(net.same_parameters(before));
  }

  TEST_CASE("total loss does not increase over 20 epochs in at least 9 of 10 seeded runs") {
    const auto buffer = env_buffer(11, 600);
    int non_increasing = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      Rng rng(seed);
      StateNet net = StateNet::create({}, rng);
      SrlTrainConfig cfg;
      cfg.epochs = 20;
      cfg.k_base = 64;
      cfg.k_pairs = 64;
      auto opt = StateNetOptimizer::for_net(net, cfg.learning_rate);
      const auto report = train_statenet(net, buffer, cfg, opt, rng);
      REQUIRE(report.epochs.size() == 20);
      if (report.epochs.back().mean.total <= report.epochs.front().mean.total) ++non_increasing;
    }
    CHECK(non_increasing >= 9);
  }

  TEST_CASE("training is deterministic for a fixed seed and buffer") {
    const auto buffer = env_buffer(12, 300, true);
    auto train = [&] {
      Rng rng(5);
      StateNetSpec spec;
      spec.multi_target = true;
      StateNet net = StateNet::create(spec, rng);
      SrlTrainConfig cfg;
      cfg.epochs = 2;
      cfg.k_base = 32;
      cfg.k_pairs = 32;
      auto opt = StateNetOptimizer::for_net(net, cfg.learning_rate);
      train_statenet(net, buffer, cfg, opt, rng);
      return net;
    };
    CHECK(train().same_parameters(train()));
  }

  TEST_CASE("training report CSV columns") {
    const auto buffer = env_buffer(13, 100);
    Rng rng(13);
    StateNet net = StateNet::create({}, rng);
    SrlTrainConfig cfg;
    cfg.epochs = 2;
    auto opt = StateNetOptimizer::for_net(net, cfg.learning_rate);
    const auto report = train_statenet(net, buffer, cfg, opt, rng);
    std::ostringstream out;
    write_report_csv(out, {report});
    const std::string text = out.str();
    CHECK(text.rfind("update,epoch,L1,L2,L3,L4,L_reg,total\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 3);
  }

  TEST_CASE("State-Net checkpoints round trip and reject corruption") {
    Rng rng(14);
    StateNetSpec spec;
    spec.state_dim = 4;
    spec.multi_target = true;
    const StateNet net = StateNet::create(spec, rng);
    const auto dir = srlp::testing::scratch_dir("statenet_ckpt");
    const std::string path = (dir / "statenet.bin").string();
    save_statenet(path, net);
    const StateNet loaded = load_statenet(path);
    CHECK(loaded.same_parameters(net));
    CHECK(loaded.multi_target());
    CHECK(loaded.state_dim() == 4);
    CHECK(loaded.n_beams() == spec.n_beams);
    CHECK(loaded.n_px() == spec.n_px);

    std::string bytes = statenet_file_bytes(net);
    bytes[40] ^= 0x7f;
    io::write_file_atomic(path, bytes);
    CHECK_THROWS_AS(load_statenet(path), FormatError);
  }
}
