#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ehrse/channel.hpp"
#include "ehrse/energy.hpp"
#include "ehrse/kalman.hpp"
#include "ehrse/mdp.hpp"
#include "ehrse/policy.hpp"
#include "ehrse/sim.hpp"

namespace ehrse::app {

/// One experiment, fully validated.
struct ExperimentConfig {
  SystemModel system;
  ChannelModel channel;
  EnergyModel energy;
  InitialCondition initial;
  int n_trunc = 30;
  RviOptions rvi{};
  std::optional<ThresholdPolicy> thresholds{};
  SimConfig sim{};
  /// Policies run by `compare`, from {"optimal", "threshold", "greedy"}.
  std::vector<std::string> compare_policies{};
  /// SHA-256 of the source text, hex encoded.
  std::string source_hash{};
};

/// Parses and validates JSON config text. Throws ConfigError naming the field.
ExperimentConfig parse_config(std::string_view text);

ExperimentConfig load_config(const std::filesystem::path& path);

std::string sha256_hex(std::string_view data);

/// Files written by one subcommand, relative to the output root.
struct Artifacts {
  std::vector<std::filesystem::path> files;
};

Artifacts cmd_solve(const ExperimentConfig& config, const std::filesystem::path& out);
Artifacts cmd_psi(const ExperimentConfig& config, const std::filesystem::path& out);
/// `policy` is one of optimal, threshold, greedy. With `estimates` the plant
/// and both estimators of replication 0 are written too.
Artifacts cmd_simulate(const ExperimentConfig& config, const std::filesystem::path& out,
                       std::string_view policy, bool estimates = false);
Artifacts cmd_compare(const ExperimentConfig& config, const std::filesystem::path& out);
Artifacts cmd_sweep(const ExperimentConfig& config, const std::filesystem::path& out);

/// Writes out/manifest.txt ("key = value" lines) listing the artifacts.
void write_manifest(const ExperimentConfig& config, const std::filesystem::path& out,
                    std::string_view command, const Artifacts& artifacts);

std::string_view tool_version() noexcept;

}  // namespace ehrse::app
