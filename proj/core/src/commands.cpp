#include "srlp/commands.hpp"

#include <chrono>
#include <filesystem>
#include <mutex>
#include <ostream>
#include <sstream>

#include "srlp/experiment.hpp"

namespace srlp::cli {

namespace fs = std::filesystem;

namespace {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string seed_dir(std::uint64_t seed) { return "seed_" + std::to_string(seed); }

std::string optional_count(const std::optional<std::size_t>& v) { return v ? std::to_string(*v) : ""; }

void append(FileSet& into, FileSet&& from) {
  for (auto& f : from) into.push_back(std::move(f));
}

const fs::path& require_checkpoint(const CommandOptions& opts, fs::path& storage) {
  if (opts.checkpoint.empty()) throw ConfigError("--checkpoint", 0, "--checkpoint: a run directory is required");
  storage = opts.checkpoint;
  if (!fs::is_directory(storage)) throw FormatError("checkpoint directory '" + opts.checkpoint + "' does not exist");
  return storage;
}

std::uint64_t analysis_seed(const CommandOptions& opts, const ExperimentConfig& cfg) {
  return opts.seed ? *opts.seed : cfg.seeds.front();
}

void check_statenet_matches(const srl::StateNet& net, const ExperimentConfig& cfg) {
  if (net.n_beams() != static_cast<std::size_t>(cfg.env.n_beams) ||
      net.n_px() != static_cast<std::size_t>(cfg.env.n_px) || net.multi_target() != cfg.env.multi_target) {
    std::ostringstream msg;
    msg << "checkpoint State-Net (beams " << net.n_beams() << ", pixels " << net.n_px() << ", multi_target "
        << net.multi_target() << ") is incompatible with the config (beams " << cfg.env.n_beams << ", pixels "
        << cfg.env.n_px << ", multi_target " << cfg.env.multi_target << ")";
    throw FormatError(msg.str());
  }
}

struct TrainedRun {
  RunSummary summary;
  rl::TrainingLog log;
};

TrainedRun train_and_write(const ExperimentConfig& cfg, const Condition& cond, const fs::path& dir,
                           const std::string& command) {
  Stopwatch clock;
  FileSet checkpoints;
  rl::TrainingResult result = run_condition(cfg, cond, {}, &checkpoints);
  FileSet files = training_files(result);
  append(files, std::move(checkpoints));
  RunManifest manifest;
  manifest.command = command;
  manifest.seed = cond.seed;
  manifest.wall_seconds = clock.seconds();
  write_outputs(dir, files, cfg, manifest);
  return {summarize(result.log, cfg.analysis.compare_final_window, cfg.analysis.success_window),
          std::move(result.log)};
}

}  // namespace

ExperimentConfig resolve_config(const CommandOptions& opts) {
  if (opts.config_path.empty()) throw ConfigError("--config", 0, "--config: a configuration file is required");
  ExperimentConfig cfg = load_config(opts.config_path);
  if (opts.seed) cfg.seeds = {*opts.seed};
  if (opts.out) cfg.out = *opts.out;
  if (opts.threads < 1) throw ConfigError("--threads", 0, "--threads: must be >= 1");
  cfg.validate();
  return cfg;
}

void cmd_train(const CommandOptions& opts, std::ostream& log) {
  const ExperimentConfig cfg = resolve_config(opts);
  std::mutex log_mutex;
  parallel_for(cfg.seeds.size(), opts.threads, [&](std::size_t i) {
    const std::uint64_t seed = cfg.seeds[i];
    const Condition cond{seed, cfg.rl.input, cfg.statenet.state_dim};
    const TrainedRun run = train_and_write(cfg, cond, fs::path(cfg.out) / seed_dir(seed), "train");
    std::lock_guard lock(log_mutex);
    log << "train seed " << seed << ": final success " << format_real(run.summary.final_success) << ", crash "
        << format_real(run.summary.final_crash) << ", mean return " << format_real(run.summary.final_mean_return)
        << '\n';
  });
}

void cmd_analyze(const CommandOptions& opts, std::ostream& log) {
  const ExperimentConfig cfg = resolve_config(opts);
  fs::path storage;
  const fs::path& dir = require_checkpoint(opts, storage);
  Stopwatch clock;
  const srl::StateNet statenet = srl::load_statenet((dir / "statenet.bin").string());
  check_statenet_matches(statenet, cfg);
  std::optional<nn::Network> qnet;
  if (fs::exists(dir / "qnet.bin")) qnet = nn::load_network((dir / "qnet.bin").string());
  if (qnet && (qnet->input_size() != statenet.state_dim() || qnet->output_size() != sim::kActionCount))
    throw FormatError("checkpoint Q-Net shape does not match its State-Net");

  const std::uint64_t seed = analysis_seed(opts, cfg);
  const auto samples = collect_for_analysis(cfg, seed, statenet, qnet ? &*qnet : nullptr);
  const AnalysisReport report = analyze_samples(cfg, seed, samples);
  const FileSet files = analysis_files(report, samples);

  RunManifest manifest;
  manifest.command = "analyze";
  manifest.seed = seed;
  manifest.wall_seconds = clock.seconds();
  const fs::path out = opts.out ? fs::path(*opts.out) : dir / "analysis";
  write_outputs(out, files, cfg, manifest);
  log << "analyze: " << report.counts.front().second << " components at threshold "
      << format_real(report.counts.front().first) << ", clustering ratio distance "
      << format_real(report.cluster_distance.ratio) << " orientation " << format_real(report.cluster_orientation.ratio)
      << '\n';
}

void cmd_sweep_statedim(const CommandOptions& opts, std::ostream& log) {
  const ExperimentConfig cfg = resolve_config(opts);
  const std::size_t n_seeds = cfg.seeds.size();
  const std::size_t jobs = cfg.sweep_dims.size() * n_seeds;
  std::vector<RunSummary> summaries(jobs);
  parallel_for(jobs, opts.threads, [&](std::size_t j) {
    const std::size_t dim = cfg.sweep_dims[j / n_seeds];
    const std::uint64_t seed = cfg.seeds[j % n_seeds];
    const fs::path dir = fs::path(cfg.out) / ("dim_" + std::to_string(dim)) / seed_dir(seed);
    TrainedRun run = train_and_write(cfg, {seed, rl::InputKind::srl, dim}, dir, "sweep-statedim");
    summaries[j] = summarize(run.log, cfg.analysis.sweep_final_window, cfg.analysis.success_window);
  });

  std::ostringstream table;
  table << "dim,seed,crash_ratio_final,success_final,mean_return_final,episodes_to_half_success\n";
  for (std::size_t j = 0; j < jobs; ++j) {
    const auto& s = summaries[j];
    table << cfg.sweep_dims[j / n_seeds] << ',' << cfg.seeds[j % n_seeds] << ',' << format_real(s.final_crash) << ','
          << format_real(s.final_success) << ',' << format_real(s.final_mean_return) << ','
          << optional_count(s.episodes_to_half_success) << '\n';
  }
  RunManifest manifest;
  manifest.command = "sweep-statedim";
  manifest.seed = cfg.seeds.front();
  write_outputs(cfg.out, {{"statedim_summary.csv", table.str()}}, cfg, manifest);
  log << table.str();
}

void cmd_compare(const CommandOptions& opts, std::ostream& log) {
  const ExperimentConfig cfg = resolve_config(opts);
  const std::vector<rl::InputKind> kinds = {rl::InputKind::ground_truth, rl::InputKind::srl,
                                            rl::InputKind::observation};
  const std::size_t n_seeds = cfg.seeds.size();
  const std::size_t jobs = kinds.size() * n_seeds;
  std::vector<TrainedRun> runs(jobs);
  parallel_for(jobs, opts.threads, [&](std::size_t j) {
    const rl::InputKind kind = kinds[j / n_seeds];
    const std::uint64_t seed = cfg.seeds[j % n_seeds];
    const fs::path dir = fs::path(cfg.out) / rl::to_string(kind) / seed_dir(seed);
    runs[j] = train_and_write(cfg, {seed, kind, cfg.statenet.state_dim}, dir, "compare");
  });

  std::ostringstream returns;
  std::ostringstream summary;
  returns << "condition,seed,episode,return,terminal\n";
  summary << "condition,seed,mean_return_final,success_final,crash_ratio_final,episodes_to_half_success\n";
  for (std::size_t j = 0; j < jobs; ++j) {
    const std::string name = rl::to_string(kinds[j / n_seeds]);
    const std::uint64_t seed = cfg.seeds[j % n_seeds];
    for (const auto& e : runs[j].log.episodes)
      returns << name << ',' << seed << ',' << e.episode << ',' << format_real(e.discounted_return) << ','
              << sim::to_string(e.terminal) << '\n';
    const auto& s = runs[j].summary;
    summary << name << ',' << seed << ',' << format_real(s.final_mean_return) << ',' << format_real(s.final_success)
            << ',' << format_real(s.final_crash) << ',' << optional_count(s.episodes_to_half_success) << '\n';
  }
  RunManifest manifest;
  manifest.command = "compare";
  manifest.seed = cfg.seeds.front();
  write_outputs(cfg.out, {{"compare_returns.csv", returns.str()}, {"compare_summary.csv", summary.str()}}, cfg,
                manifest);
  log << summary.str();
}

void cmd_eval(const CommandOptions& opts, std::ostream& log) {
  const ExperimentConfig cfg = resolve_config(opts);
  fs::path storage;
  const fs::path& dir = require_checkpoint(opts, storage);
  Stopwatch clock;
  const nn::Network qnet = nn::load_network((dir / "qnet.bin").string());
  std::optional<srl::StateNet> statenet;
  if (cfg.rl.input == rl::InputKind::srl) {
    statenet = srl::load_statenet((dir / "statenet.bin").string());
    check_statenet_matches(*statenet, cfg);
  }
  const std::uint64_t seed = analysis_seed(opts, cfg);
  Rng rng = make_rng(seed, Stream::analysis, 3);
  sim::Environment env = make_environment(cfg, rng());
  const rl::FeatureMap features(cfg.rl.input, statenet ? &*statenet : nullptr);
  if (qnet.input_size() != features.dimension(env.config()) || qnet.output_size() != sim::kActionCount)
    throw FormatError("checkpoint Q-Net shape does not match the configured input");

  std::vector<std::vector<sim::TrajectoryRow>> trajectories;
  const rl::EvalResult result = rl::evaluate(env, features, qnet, opts.eval_episodes, cfg.rl.gamma, &trajectories);

  FileSet files;
  std::ostringstream episodes;
  episodes << "episode,return,steps,terminal\n";
  for (std::size_t i = 0; i < result.returns.size(); ++i)
    episodes << i << ',' << format_real(result.returns[i]) << ',' << trajectories[i].size() - 1 << ','
             << sim::to_string(result.outcomes[i]) << '\n';
  files.emplace_back("eval.csv", episodes.str());
  std::ostringstream summary;
  summary << "episodes,success_rate,crash_ratio,mean_return\n"
          << opts.eval_episodes << ',' << format_real(result.success_rate) << ',' << format_real(result.crash_ratio)
          << ',' << format_real(result.mean_return) << '\n';
  files.emplace_back("eval_summary.csv", summary.str());
  for (std::size_t i = 0; i < std::min<std::size_t>(3, trajectories.size()); ++i) {
    std::ostringstream t;
    sim::write_trajectory_csv(t, trajectories[i]);
    files.emplace_back("trajectory_" + std::to_string(i) + ".csv", t.str());
  }
  RunManifest manifest;
  manifest.command = "eval";
  manifest.seed = seed;
  manifest.wall_seconds = clock.seconds();
  write_outputs(opts.out ? fs::path(*opts.out) : dir / "eval", files, cfg, manifest);
  log << "eval: success " << format_real(result.success_rate) << ", crash " << format_real(result.crash_ratio)
      << ", mean return " << format_real(result.mean_return) << '\n';
}

}  // namespace srlp::cli
