#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "srlp/rl.hpp"
#include "srlp/simulator.hpp"
#include "srlp/srl.hpp"

// Experiment configuration: one flat `section.key = value` text file.
namespace srlp::cli {

struct AnalysisConfig {
  std::size_t n_samples = 3000;
  double epsilon = 0.2;
  double threshold = 0.05;
  std::vector<double> sensitivity = {0.02, 0.10};
  std::size_t n_bins = 10;
  std::size_t permutations = 20;
  /// Rolling window used for episodes-to-success statistics.
  std::size_t success_window = 50;
  /// Trailing episodes summarized by sweep-statedim and compare.
  std::size_t sweep_final_window = 200;
  std::size_t compare_final_window = 300;
};

struct ExperimentConfig {
  sim::EnvConfig env;
  rl::AgentConfig rl;
  srl::SrlTrainConfig srl;
  srl::StateNetSpec statenet;
  AnalysisConfig analysis;
  /// Save Q-Net (and State-Net) checkpoints every this many episodes; 0 keeps
  /// only the final checkpoint.
  std::size_t checkpoint_interval = 0;
  std::vector<std::uint64_t> seeds;
  std::string out = "runs";
  std::vector<std::size_t> sweep_dims = {2, 10, 100};

  /// Throws ConfigError naming the first offending key.
  void validate() const;
};

/// Keys that must appear in every configuration file.
const std::vector<std::string>& required_keys();
/// Every accepted key, sorted.
std::vector<std::string> known_keys();

/// Unknown or repeated keys, malformed values and missing required keys all
/// throw ConfigError carrying the key and line.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::string& path);

/// Every key with its effective value, one per line, sorted by key. Parsing
/// this text yields an identical configuration.
std::string resolved_config_text(const ExperimentConfig& cfg);

/// FNV-1a of the resolved text; independent of key order in the source file.
std::uint64_t config_hash(const ExperimentConfig& cfg);

/// Applies `key = value` on top of an existing configuration.
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value, int line = 0);

}  // namespace srlp::cli
