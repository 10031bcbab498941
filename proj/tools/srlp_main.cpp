#include <functional>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "srlp/commands.hpp"
#include "srlp/common.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

using Command = std::function<void(const srlp::cli::CommandOptions&, std::ostream&)>;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reward-shaped state representation learning with Double DQN navigation"};
  app.set_version_flag("--version", srlp::version_tag());
  app.require_subcommand(1);

  srlp::cli::CommandOptions opts;
  std::uint64_t seed = 0;
  std::string out;

  const std::map<std::string, std::pair<std::string, Command>> commands = {
      {"train", {"Train the agent for every configured seed", srlp::cli::cmd_train}},
      {"analyze", {"Analyze a trained State-Net checkpoint", srlp::cli::cmd_analyze}},
      {"sweep-statedim", {"Train across State-Net output dimensions", srlp::cli::cmd_sweep_statedim}},
      {"compare", {"Ground-truth, SRL and raw-observation agents on shared seeds", srlp::cli::cmd_compare}},
      {"eval", {"Greedy evaluation of a trained checkpoint", srlp::cli::cmd_eval}},
  };

  std::map<CLI::App*, Command> handlers;
  for (const auto& [name, entry] : commands) {
    CLI::App* sub = app.add_subcommand(name, entry.first);
    sub->add_option("--config", opts.config_path, "Experiment configuration file")->required();
    sub->add_option("--seed", seed, "Run only this seed");
    sub->add_option("--out", out, "Output directory");
    sub->add_option("--threads", opts.threads, "Worker threads for independent runs")->check(CLI::PositiveNumber);
    if (name == "analyze" || name == "eval")
      sub->add_option("--checkpoint", opts.checkpoint, "Run directory holding the trained networks")->required();
    if (name == "eval") sub->add_option("--episodes", opts.eval_episodes, "Evaluation episodes")->check(CLI::PositiveNumber);
    handlers[sub] = entry.second;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  for (const auto& [sub, handler] : handlers) {
    if (!sub->parsed()) continue;
    if (sub->count("--seed") > 0) opts.seed = seed;
    if (sub->count("--out") > 0) opts.out = out;
    try {
      handler(opts, std::cout);
      return kExitOk;
    } catch (const srlp::ConfigError& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return kExitConfig;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kExitRuntime;
    }
  }
  return kExitConfig;
}
