#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "srlp/commands.hpp"
#include "srlp/config.hpp"
#include "srlp/keyvalue.hpp"
#include "test_support.hpp"

using namespace srlp;
using namespace srlp::cli;
namespace fs = std::filesystem;

namespace {

const char* const kTinyConfig = R"(# tiny end-to-end configuration
env.layout = Env1
env.max_steps = 30
rl.episodes = 4
rl.warmup = 32
rl.batch_size = 8
rl.state_net_updates = 2
srl.epochs = 1
srl.k_base = 32
srl.k_pairs = 32
srl.state_dim = 4
srl.hidden = 8
analysis.n_samples = 200
analysis.permutations = 3
run.seeds = 1
)";

fs::path write_config(const fs::path& dir, const std::string& text, const std::string& name = "config.txt") {
  const fs::path p = dir / name;
  std::ofstream(p) << text;
  return p;
}

#ifdef SRLP_CLI_PATH
struct Run {
  int code = -1;
  std::string err;
};

Run run_cli(const std::string& args, const fs::path& dir) {
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = std::string("\"") + SRLP_CLI_PATH + "\" " + args + " > \"" + (dir / "stdout.txt").string() +
                          "\" 2> \"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = read_text_file(err.string());
  return r;
}
#endif

std::string slurp(const fs::path& p) { return read_text_file(p.string()); }

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("a minimal configuration parses with defaults") {
    const ExperimentConfig cfg = parse_config("env.layout = Env2\nrun.seeds = 3, 4\n");
    CHECK(cfg.env.layout == "Env2");
    CHECK(cfg.seeds == std::vector<std::uint64_t>{3, 4});
    CHECK(cfg.rl.gamma == 0.99);
    CHECK(cfg.statenet.state_dim == 10);
    CHECK(cfg.srl.weights.proportionality == 15.0);
  }

  TEST_CASE("every required key is reported when missing") {
    for (const auto& key : required_keys()) {
      std::string text;
      if (key != "env.layout") text += "env.layout = Env1\n";
      if (key != "run.seeds") text += "run.seeds = 1\n";
      try {
        parse_config(text);
        FAIL("missing " << key << " was accepted");
      } catch (const ConfigError& e) {
        CHECK(e.field() == key);
        CHECK(std::string(e.what()).find(key) != std::string::npos);
      }
    }
  }

  TEST_CASE("unknown, repeated and malformed keys carry their line") {
    try {
      parse_config("env.layout = Env1\nrun.seeds = 1\nrl.gama = 0.9\n");
      FAIL("unknown key accepted");
    } catch (const ConfigError& e) {
      CHECK(e.field() == "rl.gama");
      CHECK(e.line() == 3);
    }
    try {
      parse_config("env.layout = Env1\nenv.layout = Env2\nrun.seeds = 1\n");
      FAIL("duplicate key accepted");
    } catch (const ConfigError& e) {
      CHECK(e.field() == "env.layout");
      CHECK(e.line() == 2);
    }
    try {
      parse_config("env.layout = Env1\nrun.seeds = 1\nrl.gamma = fast\n");
      FAIL("malformed value accepted");
    } catch (const ConfigError& e) {
      CHECK(e.field() == "rl.gamma");
      CHECK(e.line() == 3);
    }
    CHECK_THROWS_AS(parse_config("env.layout = Env1\nrun.seeds = 1\nrl.gamma = 1.5\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("env.layout = Env9\nrun.seeds = 1\n"), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/config.txt"), ConfigError);
  }

  TEST_CASE("config hash is stable under key reordering") {
    const std::string a = "env.layout = Env3\nrun.seeds = 1, 2\nrl.gamma = 0.95\nsrl.weights.w2 = 7\n";
    const std::string b = "srl.weights.w2 = 7\n# comment\nrl.gamma = 0.95\n\nrun.seeds = 1, 2\nenv.layout = Env3\n";
    CHECK(config_hash(parse_config(a)) == config_hash(parse_config(b)));
    CHECK(config_hash(parse_config(a)) != config_hash(parse_config("env.layout = Env3\nrun.seeds = 1, 2\n")));
  }

  TEST_CASE("resolved config text round trips") {
    const ExperimentConfig cfg = parse_config(kTinyConfig);
    const std::string text = resolved_config_text(cfg);
    const ExperimentConfig again = parse_config(text);
    CHECK(resolved_config_text(again) == text);
    CHECK(config_hash(again) == config_hash(cfg));
    const auto keys = known_keys();
    CHECK(std::is_sorted(keys.begin(), keys.end()));
    for (const auto& k : keys) CHECK(text.find(k + " = ") != std::string::npos);
  }

#ifdef SRLP_CLI_PATH
  TEST_CASE("command line exit codes") {
    const fs::path dir = srlp::testing::scratch_dir("cli_exit");
    CHECK(run_cli("train", dir).code == 2);
    CHECK(run_cli("bogus --config x", dir).code == 2);

    const fs::path missing = write_config(dir, "run.seeds = 1\n", "missing.txt");
    const Run r = run_cli("train --config \"" + missing.string() + "\"", dir);
    CHECK(r.code == 2);
    CHECK(r.err.find("env.layout") != std::string::npos);

    const fs::path good = write_config(dir, kTinyConfig);
    CHECK(run_cli("analyze --config \"" + good.string() + "\" --checkpoint \"" + (dir / "nowhere").string() + "\"", dir)
              .code == 3);
    CHECK(run_cli("train --config \"" + good.string() + "\" --out \"" + (dir / "run").string() + "\"", dir).code == 0);
    CHECK(fs::exists(dir / "run" / "seed_1" / "training_log.csv"));
  }

#endif

  TEST_CASE("training twice gives byte-identical outputs and one log per seed") {
    const fs::path dir = srlp::testing::scratch_dir("cli_train");
    std::string text = kTinyConfig;
    text.replace(text.find("run.seeds = 1"), 13, "run.seeds = 1, 2, 3, 4, 5");
    const fs::path cfg = write_config(dir, text);
    std::ostringstream log;
    CommandOptions a;
    a.config_path = cfg.string();
    a.out = (dir / "a").string();
    a.threads = 2;
    cmd_train(a, log);
    CommandOptions b = a;
    b.out = (dir / "b").string();
    b.threads = 1;
    cmd_train(b, log);
    for (int seed = 1; seed <= 5; ++seed) {
      const std::string sub = "seed_" + std::to_string(seed);
      CHECK(fs::exists(dir / "a" / sub / "training_log.csv"));
      CHECK(slurp(dir / "a" / sub / "training_log.csv") == slurp(dir / "b" / sub / "training_log.csv"));
      CHECK(slurp(dir / "a" / sub / "srl_report.csv") == slurp(dir / "b" / sub / "srl_report.csv"));
      CHECK(slurp(dir / "a" / sub / "qnet.bin") == slurp(dir / "b" / sub / "qnet.bin"));
      CHECK(fs::exists(dir / "a" / sub / "config.resolved"));
      const auto manifest = nlohmann::json::parse(slurp(dir / "a" / sub / "manifest.json"));
      CHECK(manifest["seed"] == seed);
      CHECK(manifest["config_hash"] == hex64(config_hash(resolve_config(a))));
    }
  }

  TEST_CASE("analyze is repeatable and refuses corrupted checkpoints without leaving output") {
    const fs::path dir = srlp::testing::scratch_dir("cli_analyze");
    const fs::path cfg = write_config(dir, kTinyConfig);
    std::ostringstream log;
    CommandOptions train;
    train.config_path = cfg.string();
    train.out = (dir / "run").string();
    cmd_train(train, log);

    CommandOptions analyze;
    analyze.config_path = cfg.string();
    analyze.checkpoint = (dir / "run" / "seed_1").string();
    analyze.out = (dir / "first").string();
    cmd_analyze(analyze, log);
    analyze.out = (dir / "second").string();
    cmd_analyze(analyze, log);
    for (const char* f : {"variance.csv", "components.csv", "correlation.csv", "clustering.csv", "scores.csv"}) {
      CAPTURE(f);
      CHECK(fs::exists(dir / "first" / f));
      CHECK(slurp(dir / "first" / f) == slurp(dir / "second" / f));
    }
    CHECK(slurp(dir / "first" / "components.csv").rfind("threshold,components\n", 0) == 0);

    const fs::path net = dir / "run" / "seed_1" / "statenet.bin";
    const std::string original = slurp(net);
    std::string bytes = original;
    bytes[bytes.size() / 2] ^= 0x21;
    std::ofstream(net, std::ios::binary) << bytes;
    analyze.out = (dir / "third").string();
    CHECK_THROWS_AS(cmd_analyze(analyze, log), FormatError);
    CHECK_FALSE(fs::exists(dir / "third"));

    std::ofstream(net, std::ios::binary) << original;
    const fs::path other = write_config(dir, std::string(kTinyConfig) + "env.n_beams = 12\n", "other.txt");
    analyze.config_path = other.string();
    analyze.out = (dir / "fourth").string();
    CHECK_THROWS_AS(cmd_analyze(analyze, log), FormatError);
    CHECK_FALSE(fs::exists(dir / "fourth"));
  }

  TEST_CASE("sweep writes one summary row per dimension and seed") {
    const fs::path dir = srlp::testing::scratch_dir("cli_sweep");
    std::string text = kTinyConfig;
    text += "sweep.dims = 2, 3\nrl.checkpoint_interval = 0\n";
    text.replace(text.find("run.seeds = 1"), 13, "run.seeds = 1, 2");
    const fs::path cfg = write_config(dir, text);
    std::ostringstream log;
    CommandOptions opts;
    opts.config_path = cfg.string();
    opts.out = dir.string();
    cmd_sweep_statedim(opts, log);
    const std::string summary = slurp(dir / "statedim_summary.csv");
    CHECK(std::count(summary.begin(), summary.end(), '\n') == 1 + 2 * 2);
    CHECK(fs::exists(dir / "dim_3" / "seed_2" / "training_log.csv"));
  }

  TEST_CASE("compare runs the three conditions on shared seeds") {
    const fs::path dir = srlp::testing::scratch_dir("cli_compare");
    const fs::path cfg = write_config(dir, kTinyConfig);
    std::ostringstream log;
    CommandOptions opts;
    opts.config_path = cfg.string();
    opts.out = dir.string();
    cmd_compare(opts, log);
    for (const char* c : {"ground_truth", "srl", "observation"}) CHECK(fs::exists(dir / c / "seed_1" / "training_log.csv"));
    const std::string summary = slurp(dir / "compare_summary.csv");
    CHECK(summary.find("ground_truth,1,") != std::string::npos);
    CHECK(summary.find("observation,1,") != std::string::npos);
    CHECK(fs::exists(dir / "compare_returns.csv"));
    CHECK(fs::exists(dir / "manifest.json"));
  }

  TEST_CASE("eval writes per-episode results and trajectories") {
    const fs::path dir = srlp::testing::scratch_dir("cli_eval");
    const fs::path cfg = write_config(dir, kTinyConfig);
    std::ostringstream log;
    CommandOptions train;
    train.config_path = cfg.string();
    train.out = (dir / "run").string();
    cmd_train(train, log);
    CommandOptions eval;
    eval.config_path = cfg.string();
    eval.checkpoint = (dir / "run" / "seed_1").string();
    eval.eval_episodes = 5;
    cmd_eval(eval, log);
    const std::string table = slurp(dir / "run" / "seed_1" / "eval" / "eval.csv");
    CHECK(table.rfind("episode,return,steps,terminal\n", 0) == 0);
    CHECK(std::count(table.begin(), table.end(), '\n') == 6);
    CHECK(fs::exists(dir / "run" / "seed_1" / "eval" / "trajectory_0.csv"));
  }
}
