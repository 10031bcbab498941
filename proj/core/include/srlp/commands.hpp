#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "srlp/config.hpp"

// The five driver subcommands. Each throws ConfigError for configuration
// problems and any other exception for runtime failures.
namespace srlp::cli {

struct CommandOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;  // replaces run.seeds with a single seed
  std::optional<std::string> out;     // replaces run.out
  std::size_t threads = 1;
  std::string checkpoint;             // run directory for analyze / eval
  std::size_t eval_episodes = 100;
};

/// Loads the configuration and applies the command line overrides.
ExperimentConfig resolve_config(const CommandOptions& opts);

/// <out>/seed_<s>/: training_log.csv, srl_report.csv, qnet.bin, statenet.bin,
/// checkpoints/, config.resolved, manifest.json.
void cmd_train(const CommandOptions& opts, std::ostream& log);

/// Reads statenet.bin (and qnet.bin if present) from the checkpoint directory
/// and writes variance, component-count, correlation, clustering and
/// separation tables plus SVG charts to <out> (default <checkpoint>/analysis).
void cmd_analyze(const CommandOptions& opts, std::ostream& log);

/// <out>/dim_<n>/seed_<s>/ per state dimension plus statedim_summary.csv.
void cmd_sweep_statedim(const CommandOptions& opts, std::ostream& log);

/// <out>/<condition>/seed_<s>/ for ground_truth, srl and observation plus
/// compare_returns.csv and compare_summary.csv.
void cmd_compare(const CommandOptions& opts, std::ostream& log);

/// Greedy rollouts of a trained run: eval.csv, eval_summary.csv and the
/// first trajectories, written to <out> (default <checkpoint>/eval).
void cmd_eval(const CommandOptions& opts, std::ostream& log);

}  // namespace srlp::cli
