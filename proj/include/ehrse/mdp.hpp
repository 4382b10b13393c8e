#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "ehrse/channel.hpp"
#include "ehrse/energy.hpp"
#include "ehrse/kalman.hpp"
#include "ehrse/markov.hpp"
#include "ehrse/policy.hpp"

namespace ehrse {

struct Transition {
  int next = 0;
  double prob = 0.0;
};

/// Where the system starts: pre-harvest battery b0 and condition e0, with the
/// remote covariance on the steady-state rung.
struct InitialCondition {
  int b0 = 0;
  Condition e0 = Condition::kGood;
};

/// Truncated average-cost MDP over (m, n, l).
///
/// Rungs run 0..n_trunc; a drop on the top rung stays there. The kernel and
/// the stage costs are tabulated on construction. The ladder holds one rung
/// beyond the truncation so the truncation bound can be reported.
class MdpProblem {
 public:
  MdpProblem(SystemModel system, ChannelModel channel, EnergyModel energy,
             int n_trunc, InitialCondition initial = {});

  /// Same, reusing an already computed steady-state covariance.
  MdpProblem(SystemModel system, ChannelModel channel, EnergyModel energy,
             int n_trunc, InitialCondition initial, const Matrix& steady);

  const SystemModel& system() const noexcept { return system_; }
  const ChannelModel& channel() const noexcept { return channel_; }
  const EnergyModel& energy() const noexcept { return energy_; }
  const CovarianceLadder& ladder() const noexcept { return ladder_; }
  const StateSpace& space() const noexcept { return space_; }
  const InitialCondition& initial() const noexcept { return initial_; }
  int n_trunc() const noexcept { return space_.n_trunc(); }
  int num_states() const noexcept { return space_.size(); }

  /// Actions at a state are exactly {0..m}.
  int num_actions(int flat) const noexcept { return space_.state(flat).m + 1; }

  /// Tabulated kernel row for (state, action); only positive entries.
  std::span<const Transition> transitions(int flat, int action) const;

  /// Tabulated expected trace of the covariance produced this step.
  double cost(int rung, int action) const noexcept {
    return cost_[static_cast<std::size_t>(rung) * (energy_.capacity() + 1) + action];
  }

  /// Law of the first decision state.
  Vector initial_distribution() const;

 private:
  void tabulate();

  SystemModel system_;
  ChannelModel channel_;
  EnergyModel energy_;
  StateSpace space_;
  InitialCondition initial_;
  CovarianceLadder ladder_;

  std::vector<std::size_t> action_offset_;  // per state, into row_offset_
  std::vector<std::size_t> row_offset_;     // per (state, action), into entries_
  std::vector<Transition> entries_;
  std::vector<double> cost_;
};

/// Kernel row computed from the model (not from the tables). Throws
/// ConstraintViolation for an infeasible action.
std::vector<Transition> transition_kernel(const MdpProblem& problem,
                                          const MdpState& state, int action);

/// (1-lambda)^a Tr(rung min(l+1, n_trunc)) + (1 - (1-lambda)^a) Tr(P_bar).
double stage_cost(const MdpProblem& problem, const MdpState& state, int action);

/// One synchronous Bellman backup W = T H with greedy actions. Ties resolve
/// to the smallest power among actions within 1e-12 relative of the minimum.
void bellman_sweep_serial(const MdpProblem& problem, std::span<const double> values,
                          std::span<double> backup, std::span<int> actions);

/// OpenMP version of the same sweep; output is bit-identical to the serial one.
void bellman_sweep_parallel(const MdpProblem& problem, std::span<const double> values,
                            std::span<double> backup, std::span<int> actions);

struct RviOptions {
  double tol = 1e-10;
  long max_iter = 1'000'000;
  /// Sweeps without a new best residual before damping engages.
  int damping_patience = 100;
  double damping = 0.5;
  bool parallel = true;
};

struct SolveResult {
  double avg_cost = 0.0;
  Vector relative_values;
  Policy policy = Policy::greedy();
  double residual = 0.0;
  long iterations = 0;
  bool damped = false;
  /// Stationary mass on rung n_trunc under the extracted policy.
  double top_rung_mass = 0.0;
  /// top_rung_mass * (Tr h^{N+1}(P_bar) - Tr h^N(P_bar)).
  double truncation_bound = 0.0;
  int recurrent_classes = 0;
};

/// Relative value iteration with H(flat 0) pinned to zero. Stops when the
/// span of T H - H is <= tol; J* is the midpoint of its range. Throws
/// ConvergenceError after max_iter sweeps.
SolveResult relative_value_iteration(const MdpProblem& problem, RviOptions options = {});

struct PolicyEvaluation {
  double average_cost = 0.0;
  /// Long-run occupancy over the chain the policy was evaluated on.
  Vector occupancy;
  double top_rung_mass = 0.0;
  int recurrent_classes = 0;
};

/// Exact long-run average cost of a stationary policy from the configured
/// initial condition. Lookup and threshold policies are evaluated on the
/// decision chain over (m, n, l); greedy on the pre-harvest chain.
PolicyEvaluation evaluate_policy(const MdpProblem& problem, const Policy& policy);

double policy_evaluate_exact(const MdpProblem& problem, const Policy& policy);

/// Same quantity computed on the pre-harvest chain over (b, n, l), where the
/// harvest is drawn inside the step. Works for every policy kind.
PolicyEvaluation evaluate_pre_harvest(const MdpProblem& problem, const Policy& policy);

/// Induced transition matrix of a lookup policy over the decision states.
SparseMatrix induced_chain(const MdpProblem& problem, const Policy& lookup_policy);

/// Minimum over every deterministic stationary policy. Throws ModelError when
/// there are more than `max_policies` of them.
std::pair<double, Policy> brute_force_average_cost(const MdpProblem& problem,
                                                   std::uint64_t max_policies = 100'000);

}  // namespace ehrse
