#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ehrse/channel.hpp"
#include "ehrse/energy.hpp"
#include "ehrse/kalman.hpp"
#include "ehrse/policy.hpp"

namespace ehrse {

struct SimConfig {
  long horizon = 10'000;
  long replications = 1'000;
  std::uint64_t master_seed = 0x5EED'2014'0001ULL;
  int b0 = 0;
  Condition e0 = Condition::kGood;
  /// Curves keep every record_stride-th step plus the last one.
  long record_stride = 1;
};

/// One simulated step. `battery` is the level after harvesting, `rung` the
/// number of consecutive drops so far (0 after a reception).
struct StepRecord {
  long k = 0;
  Condition condition = Condition::kGood;
  int harvest = 0;
  int battery = 0;
  int power = 0;
  bool arrival = false;
  long rung = 0;
  double trace = 0.0;
  double running_cost = 0.0;
};

/// Plant, sensor and remote estimates along one replication.
struct EstimateRecord {
  long k = 0;
  Vector state;
  Vector local_estimate;
  Vector remote_estimate;
  bool arrival = false;
  double trace = 0.0;
  double squared_error = 0.0;
};

/// Replication-averaged output of a policy run.
struct SimResult {
  std::vector<long> steps;
  std::vector<double> mean_cost;
  std::vector<double> stderr_cost;
  /// J_T for every replication, in replication order.
  std::vector<double> final_cost;
  /// Executed power counts over all steps and replications.
  std::vector<std::int64_t> power_histogram;
  std::int64_t arrivals = 0;
  std::int64_t total_steps = 0;
  /// Steps that started on or above the MDP truncation rung.
  std::int64_t top_rung_visits = 0;

  double mean_final() const;
  double stderr_final() const;
  double top_rung_frequency() const {
    return total_steps == 0 ? 0.0 : static_cast<double>(top_rung_visits) / total_steps;
  }
};

struct NamedPolicy {
  std::string name;
  Policy policy;
};

/// Paired difference J_T(challenger) - J_T(baseline) under common random numbers.
struct ComparisonRow {
  std::size_t baseline = 0;
  std::size_t challenger = 0;
  double mean_diff = 0.0;
  double stderr_diff = 0.0;
};

struct Comparison {
  std::vector<std::string> names;
  std::vector<SimResult> results;
  std::vector<ComparisonRow> rows;
};

/// Closed-loop Monte Carlo of the sensor, channel and remote estimator.
///
/// The remote covariance is tracked through its rung index, so the cost of a
/// step is an exact trace lookup. Traces are precomputed up to the horizon;
/// rungs whose trace overflows are treated as +inf.
///
/// Replication r draws from RandomStream::derive(master_seed, r, ...) with a
/// separate substream for environment, harvest and channel, each consuming one
/// uniform per step, so every policy sees the same random numbers.
class Simulator {
 public:
  Simulator(SystemModel system, ChannelModel channel, EnergyModel energy, SimConfig config,
            int truncation_rung = 30, std::optional<Matrix> steady = std::nullopt);

  const SimConfig& config() const noexcept { return config_; }
  const ChannelModel& channel() const noexcept { return channel_; }
  const Matrix& steady() const noexcept { return steady_; }
  double trace_at(long rung) const noexcept;

  /// OpenMP over fixed blocks of replications; block results are merged by
  /// pairwise reduction in block order, so the output does not depend on the
  /// thread count.
  SimResult run(const Policy& policy) const;

  /// Single-threaded reference: replications in order, running sums.
  SimResult run_serial(const Policy& policy) const;

  std::vector<StepRecord> trajectory(const Policy& policy, std::uint64_t replication) const;

  /// Also samples the plant and runs the sensor filter. The local filter
  /// starts from Pi0 with a zero estimate.
  std::vector<EstimateRecord> estimates(const Policy& policy, std::uint64_t replication) const;

  Comparison compare(std::span<const NamedPolicy> policies) const;

 private:
  template <class Visitor>
  void run_replication(const Policy& policy, std::uint64_t replication, Visitor&& visit) const;

  SystemModel system_;
  ChannelModel channel_;
  EnergyModel energy_;
  SimConfig config_;
  int truncation_rung_;
  Matrix steady_;
  std::vector<double> traces_;
};

/// Spends exactly the harvest of the current step.
Policy greedy_policy();

SimResult simulate(const Policy& policy, const SystemModel& system,
                   const ChannelModel& channel, const EnergyModel& energy,
                   const SimConfig& config);

}  // namespace ehrse
