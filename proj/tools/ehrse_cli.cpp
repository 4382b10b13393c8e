// Command-line front end: ehrse <solve|psi|simulate|compare|sweep> --config FILE --out DIR
#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "ehrse/app.hpp"
#include "ehrse/errors.hpp"

namespace {

struct Common {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "Experiment config (JSON)")->required();
  cmd->add_option("--out", c.out, "Output directory")->capture_default_str();
  cmd->add_option("--seed", c.seed, "Override sim.master_seed");
}

}  // namespace

int main(int argc, char** argv) {
  using namespace ehrse;

  CLI::App cli{"Remote state estimation with an energy-harvesting sensor"};
  cli.set_version_flag("--version", std::string(app::tool_version()));
  cli.require_subcommand(1);

  Common common;
  std::string policy = "threshold";
  bool estimates = false;

  auto* solve = cli.add_subcommand("solve", "Optimal policy by relative value iteration");
  auto* psi = cli.add_subcommand("psi", "Threshold-policy chain, q* and power law");
  auto* simulate = cli.add_subcommand("simulate", "Monte Carlo run of one policy");
  auto* compare = cli.add_subcommand("compare", "Monte Carlo comparison under common random numbers");
  auto* sweep = cli.add_subcommand("sweep", "Exact cost of every threshold pair");
  for (auto* cmd : {solve, psi, simulate, compare, sweep}) add_common(cmd, common);
  simulate->add_option("--policy", policy, "optimal, threshold or greedy")
      ->check(CLI::IsMember({"optimal", "threshold", "greedy"}))
      ->capture_default_str();
  simulate->add_flag("--estimates", estimates, "Also write plant and estimator trajectories");

  CLI11_PARSE(cli, argc, argv);

  try {
    app::ExperimentConfig config = app::load_config(common.config);
    if (common.seed) config.sim.master_seed = *common.seed;

    const std::filesystem::path out = common.out;
    const CLI::App* cmd = cli.get_subcommands().front();
    app::Artifacts artifacts;
    if (cmd == solve) {
      artifacts = app::cmd_solve(config, out);
    } else if (cmd == psi) {
      artifacts = app::cmd_psi(config, out);
    } else if (cmd == simulate) {
      artifacts = app::cmd_simulate(config, out, policy, estimates);
    } else if (cmd == compare) {
      artifacts = app::cmd_compare(config, out);
    } else {
      artifacts = app::cmd_sweep(config, out);
    }
    app::write_manifest(config, out, cmd->get_name(), artifacts);
    for (const auto& f : artifacts.files) std::cout << (out / f).string() << '\n';
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
