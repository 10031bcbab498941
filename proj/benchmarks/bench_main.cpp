#include <benchmark/benchmark.h>

#include <vector>

#include "srlp/analysis.hpp"
#include "srlp/experience.hpp"
#include "srlp/rl.hpp"
#include "srlp/simulator.hpp"
#include "srlp/srl.hpp"

using namespace srlp;
using nn::Matrix;

namespace {

replay::ReplayBuffer random_policy_buffer(std::size_t n, std::uint64_t seed) {
  sim::EnvConfig cfg;
  cfg.seed = seed;
  sim::Environment env(cfg);
  replay::ReplayBuffer buffer(n);
  Rng rng = make_rng(seed, Stream::exploration);
  std::uniform_int_distribution<std::size_t> pick(0, sim::kActionCount - 1);
  sim::Observation obs = env.reset();
  sim::Truth truth = env.truth();
  std::size_t episode = 0;
  while (buffer.size() < n) {
    const sim::Action action = sim::action_from_index(pick(rng));
    const sim::StepResult r = env.step(action);
    replay::Transition t;
    t.obs = obs;
    t.action = action;
    t.reward = r.reward;
    t.next_obs = r.observation;
    t.outcome = r.terminal;
    t.truth = truth;
    t.next_truth = r.truth;
    t.episode = episode;
    t.step = static_cast<std::uint32_t>(env.steps() - 1);
    buffer.push(std::move(t));
    if (env.episode_over()) {
      obs = env.reset();
      ++episode;
    } else {
      obs = r.observation;
    }
    truth = env.truth();
  }
  return buffer;
}

void BM_NetworkForward(benchmark::State& state) {
  Rng rng = make_rng(1, Stream::init);
  const std::vector<std::size_t> sizes = {10, 64, 64, 3};
  const nn::Network net = nn::Network::glorot(sizes, nn::Activation::relu, nn::Activation::identity, rng);
  const Matrix input = Matrix::Random(state.range(0), 10);
  for (auto _ : state) benchmark::DoNotOptimize(nn::forward_batch(net, input, nullptr));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_NetworkForward)->Arg(1)->Arg(64)->Arg(256);

void BM_LidarScan(benchmark::State& state) {
  const sim::WorldMap map = sim::builtin_layout("Env3");
  const sim::Pose pose{-1.2, -1.3, 0.7};
  for (auto _ : state) benchmark::DoNotOptimize(sim::lidar_scan(map, pose, 36, 5.0));
}
BENCHMARK(BM_LidarScan);

void BM_CameraRender(benchmark::State& state) {
  const sim::WorldMap map = sim::builtin_layout("Env2");
  const sim::Pose pose{0.3, -0.4, 2.1};
  for (auto _ : state) benchmark::DoNotOptimize(sim::camera_render(map, pose, 1.0472, 32, 5.0));
}
BENCHMARK(BM_CameraRender);

void BM_EnvironmentStep(benchmark::State& state) {
  sim::EnvConfig cfg;
  sim::Environment env(cfg);
  env.reset();
  std::size_t i = 0;
  for (auto _ : state) {
    if (env.episode_over()) env.reset();
    benchmark::DoNotOptimize(env.step(sim::action_from_index(1 + (i++ % 2))));
  }
}
BENCHMARK(BM_EnvironmentStep);

void BM_BuildPriorBatch(benchmark::State& state) {
  const replay::ReplayBuffer buffer = random_policy_buffer(5000, 3);
  replay::PriorBatchParams params;
  Rng rng = make_rng(3, Stream::sampling);
  for (auto _ : state) benchmark::DoNotOptimize(replay::build_prior_batch(buffer, params, rng));
}
BENCHMARK(BM_BuildPriorBatch);

void BM_PriorTotalLoss(benchmark::State& state) {
  const replay::ReplayBuffer buffer = random_policy_buffer(5000, 4);
  Rng init = make_rng(4, Stream::init);
  const srl::StateNet net = srl::StateNet::create(srl::StateNetSpec{}, init);
  Rng rng = make_rng(4, Stream::sampling);
  const replay::PriorBatch batch = replay::build_prior_batch(buffer, replay::PriorBatchParams{}, rng);
  const srl::PriorWeights weights;
  for (auto _ : state) {
    const srl::PriorBatchStates states = srl::encode_prior_batch(net, buffer, batch);
    benchmark::DoNotOptimize(srl::total_loss(net, states, weights));
  }
}
BENCHMARK(BM_PriorTotalLoss)->Unit(benchmark::kMillisecond);

void BM_DdqnUpdate(benchmark::State& state) {
  Rng rng = make_rng(5, Stream::init);
  const std::vector<std::size_t> hidden = {64, 64};
  nn::Network qnet = rl::make_qnet(10, hidden, rng);
  const nn::Network target = qnet;
  nn::AdamState opt = nn::AdamState::for_network(qnet);
  rl::TdBatch batch;
  batch.states = Matrix::Random(64, 10);
  batch.next_states = Matrix::Random(64, 10);
  for (std::size_t i = 0; i < 64; ++i) {
    batch.actions.push_back(i % sim::kActionCount);
    batch.rewards.push_back(0.1 * static_cast<double>(i % 7));
    batch.done.push_back(i % 9 == 0);
  }
  for (auto _ : state) benchmark::DoNotOptimize(rl::ddqn_update(qnet, target, batch, 0.99, opt));
}
BENCHMARK(BM_DdqnUpdate);

void BM_Pca(benchmark::State& state) {
  const Matrix data = Matrix::Random(3000, state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(analysis::pca(data));
}
BENCHMARK(BM_Pca)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
