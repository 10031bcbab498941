#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "srlp/analysis.hpp"
#include "srlp/config.hpp"
#include "srlp/rl.hpp"

// Experiment orchestration shared by the command line driver and the
// acceptance suite.
namespace srlp::cli {

/// One training run: a seed, the Q-Net input and the State-Net size.
struct Condition {
  std::uint64_t seed = 0;
  rl::InputKind input = rl::InputKind::srl;
  std::size_t state_dim = 10;
};

/// In-memory output files: relative path -> bytes. Written all at once so a
/// failing command leaves nothing behind.
using FileSet = std::vector<std::pair<std::string, std::string>>;

/// The environment every condition of `seed` trains in.
sim::Environment make_environment(const ExperimentConfig& cfg, std::uint64_t seed);

/// Trains one condition. When `checkpoints` is given and the configured
/// interval is positive, intermediate network files are appended to it.
rl::TrainingResult run_condition(const ExperimentConfig& cfg, const Condition& cond,
                                 const std::function<void(const rl::EpisodeRecord&)>& on_episode = {},
                                 FileSet* checkpoints = nullptr);

/// Samples for analysis: epsilon-greedy rollouts of the trained agent in a
/// fresh environment seeded from the analysis sub-stream.
std::vector<analysis::StateSample> collect_for_analysis(const ExperimentConfig& cfg, std::uint64_t seed,
                                                        const srl::StateNet& statenet, const nn::Network* qnet);

/// Summary numbers derived from a training log.
struct RunSummary {
  double final_mean_return = 0.0;  // over the last `final_window` episodes
  double final_success = 0.0;
  double final_crash = 0.0;
  std::optional<std::size_t> episodes_to_half_success;
};
RunSummary summarize(const rl::TrainingLog& log, std::size_t final_window, std::size_t success_window);

/// Everything cmd_analyze reports for one representation.
struct AnalysisReport {
  analysis::PcaResult pca;
  std::vector<std::pair<double, std::size_t>> counts;  // (threshold, components)
  analysis::CorrelationTable correlation;
  analysis::ClusteringResult cluster_distance;
  analysis::ClusteringResult cluster_orientation;
  analysis::ClusteringResult raw_cluster_distance;
  analysis::ClusteringResult raw_cluster_orientation;
  std::optional<double> separation;
  std::optional<double> separation_baseline;
};
AnalysisReport analyze_samples(const ExperimentConfig& cfg, std::uint64_t seed,
                               const std::vector<analysis::StateSample>& samples);

FileSet analysis_files(const AnalysisReport& report, const std::vector<analysis::StateSample>& samples);
FileSet training_files(const rl::TrainingResult& result);

struct RunManifest {
  std::string command;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::string version;
  double wall_seconds = 0.0;
  std::vector<std::string> files;
};
std::string manifest_json(const RunManifest& m);

/// Writes every file below `dir` (creating it) through a temporary name and a
/// rename, then the resolved config and the manifest. Returns the file list.
std::vector<std::string> write_outputs(const std::filesystem::path& dir, const FileSet& files,
                                       const ExperimentConfig& cfg, RunManifest manifest);

/// Runs `jobs` tasks on up to `threads` workers; the first exception is
/// rethrown after all workers stop.
void parallel_for(std::size_t jobs, std::size_t threads, const std::function<void(std::size_t)>& task);

}  // namespace srlp::cli
