#include "srlp/experiment.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "srlp/binary_io.hpp"
#include "srlp/layout.hpp"
#include "srlp/svg.hpp"

namespace srlp::cli {

sim::Environment make_environment(const ExperimentConfig& cfg, std::uint64_t seed) {
  sim::EnvConfig env = cfg.env;
  env.seed = seed;
  return sim::Environment(sim::resolve_layout(env.layout), env);
}

namespace {

srl::StateNetSpec statenet_spec(const ExperimentConfig& cfg, std::size_t state_dim) {
  srl::StateNetSpec spec = cfg.statenet;
  spec.state_dim = state_dim;
  spec.n_beams = static_cast<std::size_t>(cfg.env.n_beams);
  spec.n_px = static_cast<std::size_t>(cfg.env.n_px);
  spec.multi_target = cfg.env.multi_target;
  return spec;
}

std::string padded(std::size_t value, std::size_t width) {
  std::string s = std::to_string(value);
  if (s.size() < width) s.insert(0, width - s.size(), '0');
  return s;
}

}  // namespace

rl::TrainingResult run_condition(const ExperimentConfig& cfg, const Condition& cond,
                                 const std::function<void(const rl::EpisodeRecord&)>& on_episode,
                                 FileSet* checkpoints) {
  sim::Environment env = make_environment(cfg, cond.seed);
  rl::AgentConfig agent = cfg.rl;
  agent.input = cond.input;
  Rng init = make_rng(cond.seed, Stream::init);
  std::optional<srl::StateNet> statenet;
  if (cond.input == rl::InputKind::srl) statenet = srl::StateNet::create(statenet_spec(cfg, cond.state_dim), init);
  const rl::FeatureMap features(cond.input, statenet ? &*statenet : nullptr);
  nn::Network qnet = rl::make_qnet(features.dimension(env.config()), agent.hidden, init);

  rl::TrainingHooks hooks;
  hooks.on_episode = on_episode;
  if (checkpoints != nullptr && cfg.checkpoint_interval > 0) {
    const std::size_t width = std::to_string(agent.episodes).size();
    hooks.checkpoint_interval = cfg.checkpoint_interval;
    hooks.on_checkpoint = [checkpoints, width](std::size_t done, const nn::Network& q, const srl::StateNet* s) {
      const std::string tag = padded(done, width);
      checkpoints->emplace_back("checkpoints/qnet_ep" + tag + ".bin", nn::network_file_bytes(q));
      if (s != nullptr) checkpoints->emplace_back("checkpoints/statenet_ep" + tag + ".bin", srl::statenet_file_bytes(*s));
    };
  }
  return rl::run_training(std::move(env), std::move(statenet), std::move(qnet), agent, cfg.srl, cond.seed, hooks);
}

std::vector<analysis::StateSample> collect_for_analysis(const ExperimentConfig& cfg, std::uint64_t seed,
                                                        const srl::StateNet& statenet, const nn::Network* qnet) {
  Rng rng = make_rng(seed, Stream::analysis);
  sim::EnvConfig env_cfg = cfg.env;
  env_cfg.seed = rng();
  sim::Environment env(sim::resolve_layout(env_cfg.layout), env_cfg);
  const rl::FeatureMap features(rl::InputKind::srl, &statenet);
  if (qnet != nullptr && qnet->input_size() != statenet.state_dim())
    throw ContractViolation("Q-Net input size " + std::to_string(qnet->input_size()) +
                            " does not match the State-Net dimension " + std::to_string(statenet.state_dim()));
  analysis::CollectOptions opts;
  opts.n_samples = cfg.analysis.n_samples;
  opts.epsilon = cfg.analysis.epsilon;
  return analysis::collect_states(env, &statenet, qnet, qnet ? &features : nullptr, opts, rng);
}

RunSummary summarize(const rl::TrainingLog& log, std::size_t final_window, std::size_t success_window) {
  RunSummary s;
  const std::size_t n = log.episodes.size();
  const std::size_t first = n > final_window ? n - final_window : 0;
  s.final_mean_return = rl::mean_return(log, first, n);
  s.final_success = rl::success_ratio(log, first, n);
  s.final_crash = rl::crash_ratio(log, first, n);
  s.episodes_to_half_success = rl::episodes_to_success(log, success_window, 0.5);
  return s;
}

AnalysisReport analyze_samples(const ExperimentConfig& cfg, std::uint64_t seed,
                               const std::vector<analysis::StateSample>& samples) {
  AnalysisReport r;
  r.pca = analysis::pca(samples);
  r.counts.emplace_back(cfg.analysis.threshold, analysis::count_components(r.pca, cfg.analysis.threshold));
  for (double t : cfg.analysis.sensitivity) r.counts.emplace_back(t, analysis::count_components(r.pca, t));
  r.correlation = analysis::correlation_table(r.pca, samples);
  const std::size_t bins = cfg.analysis.n_bins;
  r.cluster_distance = analysis::reward_bin_clustering(samples, bins, analysis::BinKey::distance);
  r.cluster_orientation = analysis::reward_bin_clustering(samples, bins, analysis::BinKey::orientation);
  r.raw_cluster_distance = analysis::reward_bin_clustering(samples, bins, analysis::BinKey::distance, true);
  r.raw_cluster_orientation = analysis::reward_bin_clustering(samples, bins, analysis::BinKey::orientation, true);
  if (cfg.env.multi_target) {
    Rng rng = make_rng(seed, Stream::analysis, 2);
    r.separation = analysis::target_separation(samples);
    r.separation_baseline = analysis::target_separation_baseline(samples, cfg.analysis.permutations, rng);
  }
  return r;
}

FileSet analysis_files(const AnalysisReport& report, const std::vector<analysis::StateSample>& samples) {
  FileSet files;
  const auto& p = report.pca;

  std::ostringstream variance;
  variance << "component,eigenvalue,ratio\n";
  for (std::size_t k = 0; k < p.ratios.size(); ++k)
    variance << k + 1 << ',' << format_real(p.eigenvalues[k]) << ',' << format_real(p.ratios[k]) << '\n';
  files.emplace_back("variance.csv", variance.str());

  std::ostringstream counts;
  counts << "threshold,components\n";
  for (const auto& [t, c] : report.counts) counts << format_real(t) << ',' << c << '\n';
  files.emplace_back("components.csv", counts.str());

  std::ostringstream corr;
  corr << "component,ratio,x,y,theta,distance,degenerate\n";
  for (Eigen::Index k = 0; k < report.correlation.r.rows(); ++k) {
    corr << k + 1 << ',' << format_real(p.ratios[static_cast<std::size_t>(k)]);
    std::string flags;
    for (std::size_t c = 0; c < analysis::kChannelCount; ++c) {
      corr << ',' << format_real(report.correlation.r(k, static_cast<Eigen::Index>(c)));
      if (report.correlation.degenerate[static_cast<std::size_t>(k)][c]) {
        if (!flags.empty()) flags += ';';
        flags += analysis::to_string(static_cast<analysis::Channel>(c));
      }
    }
    corr << ',' << (flags.empty() ? "none" : flags) << '\n';
  }
  files.emplace_back("correlation.csv", corr.str());

  std::ostringstream cluster;
  cluster << "source,key,intra,inter,ratio,bins_used,merged_empty_bins\n";
  auto row = [&](const char* source, const char* key, const analysis::ClusteringResult& c) {
    cluster << source << ',' << key << ',' << format_real(c.intra) << ',' << format_real(c.inter) << ','
            << format_real(c.ratio) << ',' << c.bins_used << ',' << (c.merged_empty_bins ? "true" : "false") << '\n';
  };
  row("state", "distance", report.cluster_distance);
  row("state", "orientation", report.cluster_orientation);
  row("raw", "distance", report.raw_cluster_distance);
  row("raw", "orientation", report.raw_cluster_orientation);
  files.emplace_back("clustering.csv", cluster.str());

  if (report.separation) {
    std::ostringstream sep;
    sep << "score,baseline,ratio_to_baseline\n";
    const double base = *report.separation_baseline;
    sep << format_real(*report.separation) << ',' << format_real(base) << ','
        << format_real(base > 0.0 ? *report.separation / base : 0.0) << '\n';
    files.emplace_back("separation.csv", sep.str());
  }

  std::ostringstream scores;
  const std::size_t shown = std::min<std::size_t>(2, static_cast<std::size_t>(p.scores.cols()));
  scores << "sample,x,y,theta,distance,reward,target";
  for (std::size_t k = 0; k < shown; ++k) scores << ",pc" << k + 1;
  scores << '\n';
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& t = samples[i].truth;
    scores << i << ',' << format_real(t.pose.x) << ',' << format_real(t.pose.y) << ',' << format_real(t.pose.theta)
           << ',' << format_real(t.distance) << ',' << format_real(samples[i].reward) << ',' << samples[i].target_id;
    for (std::size_t k = 0; k < shown; ++k)
      scores << ',' << format_real(p.scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)));
    scores << '\n';
  }
  files.emplace_back("scores.csv", scores.str());

  std::vector<std::string> labels;
  for (std::size_t k = 0; k < p.ratios.size(); ++k) labels.push_back("PC" + std::to_string(k + 1));
  std::ostringstream spectrum;
  svg::bars(spectrum, "Explained variance ratio", labels, p.ratios);
  files.emplace_back("variance.svg", spectrum.str());

  for (std::size_t k = 0; k < shown; ++k) {
    for (std::size_t c = 0; c < analysis::kChannelCount; ++c) {
      const auto channel = static_cast<analysis::Channel>(c);
      svg::Series series;
      for (std::size_t i = 0; i < samples.size(); ++i) {
        series.x.push_back(analysis::channel_value(samples[i].truth, channel));
        series.y.push_back(p.scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)));
      }
      const std::string pc = "PC" + std::to_string(k + 1);
      std::ostringstream plot;
      svg::scatter(plot, pc + " vs " + analysis::to_string(channel), analysis::to_string(channel), pc, series);
      files.emplace_back("pc" + std::to_string(k + 1) + "_" + analysis::to_string(channel) + ".svg", plot.str());
    }
  }
  return files;
}

FileSet training_files(const rl::TrainingResult& result) {
  FileSet files;
  std::ostringstream log;
  rl::write_training_log_csv(log, result.log);
  files.emplace_back("training_log.csv", log.str());
  if (!result.srl_reports.empty()) {
    std::ostringstream report;
    srl::write_report_csv(report, result.srl_reports);
    files.emplace_back("srl_report.csv", report.str());
  }
  files.emplace_back("qnet.bin", nn::network_file_bytes(result.qnet));
  if (result.statenet) files.emplace_back("statenet.bin", srl::statenet_file_bytes(*result.statenet));
  return files;
}

std::string manifest_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["command"] = m.command;
  j["config_hash"] = hex64(m.config_hash);
  j["seed"] = m.seed;
  j["version"] = m.version;
  j["wall_seconds"] = m.wall_seconds;
  j["files"] = m.files;
  return j.dump(2) + "\n";
}

std::vector<std::string> write_outputs(const std::filesystem::path& dir, const FileSet& files,
                                       const ExperimentConfig& cfg, RunManifest manifest) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::vector<std::string> written;
  auto put = [&](const std::string& rel, const std::string& bytes) {
    const fs::path target = dir / rel;
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    io::write_file_atomic(target.string(), bytes);
    written.push_back(rel);
  };
  for (const auto& [rel, bytes] : files) put(rel, bytes);
  put("config.resolved", resolved_config_text(cfg));
  manifest.config_hash = config_hash(cfg);
  manifest.version = version_tag();
  manifest.files = written;
  manifest.files.push_back("manifest.json");
  put("manifest.json", manifest_json(manifest));
  return written;
}

void parallel_for(std::size_t jobs, std::size_t threads, const std::function<void(std::size_t)>& task) {
  threads = std::max<std::size_t>(1, std::min(threads, jobs));
  if (threads == 1) {
    for (std::size_t i = 0; i < jobs; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        {
          std::lock_guard lock(error_mutex);
          if (error) return;
        }
        const std::size_t i = next.fetch_add(1);
        if (i >= jobs) return;
        try {
          task(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace srlp::cli
