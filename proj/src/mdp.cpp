#include "ehrse/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ehrse/errors.hpp"

namespace ehrse {
namespace {

using Triplet = Eigen::Triplet<double>;

constexpr double kTieTol = 1e-12;

void check_action(const MdpState& s, int action) {
  if (action < 0 || action > s.m) {
    throw ConstraintViolation("action " + std::to_string(action) +
                              " infeasible in state (m=" + std::to_string(s.m) +
                              ", n=" + std::to_string(s.n) + ", l=" + std::to_string(s.l) +
                              ")");
  }
}

// Probability that the post-harvest battery is `next_m` when `residual` units
// remain and the harvest follows condition `n`. The top level collects the
// saturated tail.
double battery_law(const HarvestDistribution& harvest, int n, int residual, int next_m,
                   int capacity) {
  if (next_m < residual) return 0.0;
  if (next_m < capacity) return harvest.prob(n, next_m - residual);
  double tail = 0.0;
  for (int r = capacity - residual; r <= capacity; ++r) tail += harvest.prob(n, r);
  return tail;
}

// Bellman backup of one state; returns min_a {c(l, a) + sum p H} and stores
// the tie-broken minimizer in `action`.
double backup_state(const MdpProblem& problem, std::span<const double> values, int s,
                    int& action) {
  const int rung = problem.space().state(s).l;
  double best = std::numeric_limits<double>::infinity();
  double best_tied = best;
  int best_action = 0;
  const int num_actions = problem.num_actions(s);
  for (int a = 0; a < num_actions; ++a) {
    double v = problem.cost(rung, a);
    for (const Transition& t : problem.transitions(s, a)) v += t.prob * values[t.next];
    if (a == 0 || v < best_tied - kTieTol * (1.0 + std::abs(best_tied))) {
      best_tied = v;
      best_action = a;
    }
    best = std::min(best, v);
  }
  action = best_action;
  return best;
}

double top_mass(const StateSpace& space, const Vector& occupancy) {
  double mass = 0.0;
  for (int s = 0; s < space.size(); ++s) {
    if (space.state(s).l == space.n_trunc()) mass += occupancy(s);
  }
  return mass;
}

}  // namespace

MdpProblem::MdpProblem(SystemModel system, ChannelModel channel, EnergyModel energy,
                       int n_trunc, InitialCondition initial)
    : MdpProblem(system, channel, energy, n_trunc, initial,
                 steady_state_covariance(system)) {}

MdpProblem::MdpProblem(SystemModel system, ChannelModel channel, EnergyModel energy,
                       int n_trunc, InitialCondition initial, const Matrix& steady)
    : system_(std::move(system)),
      channel_(channel),
      energy_(std::move(energy)),
      space_(energy_.capacity(), n_trunc),
      initial_(initial) {
  if (n_trunc < 1) throw ModelError("n_trunc must be at least 1");
  if (initial_.b0 < 0 || initial_.b0 > energy_.capacity()) {
    throw ModelError("initial battery b0 must lie in [0, b_max]");
  }
  ladder_ = build_ladder_from(system_, steady, static_cast<std::size_t>(n_trunc) + 1);
  tabulate();
}

void MdpProblem::tabulate() {
  const int num_states = space_.size();
  const int num_costs = energy_.capacity() + 1;
  action_offset_.assign(static_cast<std::size_t>(num_states) + 1, 0);
  row_offset_.clear();
  entries_.clear();
  for (int s = 0; s < num_states; ++s) {
    action_offset_[s] = row_offset_.size();
    const MdpState state = space_.state(s);
    for (int a = 0; a <= state.m; ++a) {
      row_offset_.push_back(entries_.size());
      const auto row = transition_kernel(*this, state, a);
      entries_.insert(entries_.end(), row.begin(), row.end());
    }
  }
  action_offset_[num_states] = row_offset_.size();
  row_offset_.push_back(entries_.size());

  cost_.assign(static_cast<std::size_t>(space_.rungs()) * num_costs, 0.0);
  for (int l = 0; l < space_.rungs(); ++l) {
    for (int a = 0; a < num_costs; ++a) {
      cost_[static_cast<std::size_t>(l) * num_costs + a] = stage_cost(*this, {a, 0, l}, a);
    }
  }
}

std::span<const Transition> MdpProblem::transitions(int flat, int action) const {
  const std::size_t row = action_offset_[flat] + static_cast<std::size_t>(action);
  return {entries_.data() + row_offset_[row], row_offset_[row + 1] - row_offset_[row]};
}

Vector MdpProblem::initial_distribution() const {
  Vector init = Vector::Zero(space_.size());
  const int n = index_of(initial_.e0);
  const int capacity = energy_.capacity();
  for (int r = 0; r <= capacity; ++r) {
    const int m = battery_after_harvest(initial_.b0, r, capacity);
    init(space_.flat_index({m, n, 0})) += energy_.harvest.prob(n, r);
  }
  return init;
}

std::vector<Transition> transition_kernel(const MdpProblem& problem, const MdpState& state,
                                          int action) {
  check_action(state, action);
  const StateSpace& space = problem.space();
  const EnergyModel& energy = problem.energy();
  const int capacity = energy.capacity();
  const double drop = drop_probability(problem.channel(), action);
  const int drop_rung = std::min(state.l + 1, space.n_trunc());
  const int residual = battery_next(state.m, action);

  std::vector<Transition> row;
  for (int next_n = 0; next_n < 2; ++next_n) {
    const double env = energy.chain.prob(state.n, next_n);
    if (env == 0.0) continue;
    for (int next_m = residual; next_m <= capacity; ++next_m) {
      const double battery = battery_law(energy.harvest, next_n, residual, next_m, capacity);
      if (battery == 0.0) continue;
      const double p_drop = drop * env * battery;
      const double p_arrive = (1.0 - drop) * env * battery;
      if (p_drop > 0.0) row.push_back({space.flat_index({next_m, next_n, drop_rung}), p_drop});
      if (p_arrive > 0.0) row.push_back({space.flat_index({next_m, next_n, 0}), p_arrive});
    }
  }
  return row;
}

double stage_cost(const MdpProblem& problem, const MdpState& state, int action) {
  check_action(state, action);
  const auto& traces = problem.ladder().traces;
  const double drop = drop_probability(problem.channel(), action);
  const int drop_rung = std::min(state.l + 1, problem.n_trunc());
  return drop * traces[drop_rung] + (1.0 - drop) * traces[0];
}

void bellman_sweep_serial(const MdpProblem& problem, std::span<const double> values,
                          std::span<double> backup, std::span<int> actions) {
  const int num_states = problem.num_states();
  for (int s = 0; s < num_states; ++s) {
    backup[s] = backup_state(problem, values, s, actions[s]);
  }
}

void bellman_sweep_parallel(const MdpProblem& problem, std::span<const double> values,
                            std::span<double> backup, std::span<int> actions) {
  const int num_states = problem.num_states();
  // Synchronous sweep: reads `values` only, each state writes its own slot.
#pragma omp parallel for schedule(static)
  for (int s = 0; s < num_states; ++s) {
    backup[s] = backup_state(problem, values, s, actions[s]);
  }
}

SolveResult relative_value_iteration(const MdpProblem& problem, RviOptions options) {
  const int n = problem.num_states();
  const int ref = 0;
  std::vector<double> values(n, 0.0), backup(n, 0.0);
  std::vector<int> actions(n, 0);

  double tau = 1.0;
  double best_span = std::numeric_limits<double>::infinity();
  int stall = 0;

  SolveResult result;
  for (long it = 1; it <= options.max_iter; ++it) {
    if (options.parallel) {
      bellman_sweep_parallel(problem, values, backup, actions);
    } else {
      bellman_sweep_serial(problem, values, backup, actions);
    }

    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (int s = 0; s < n; ++s) {
      const double d = backup[s] - values[s];
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
    const double span = hi - lo;

    if (span <= options.tol) {
      result.avg_cost = 0.5 * (lo + hi);
      result.residual = span;
      result.iterations = it;
      result.damped = tau < 1.0;
      result.relative_values.resize(n);
      for (int s = 0; s < n; ++s) result.relative_values(s) = backup[s] - backup[ref];
      result.policy = Policy::lookup(problem.space(), actions);

      const PolicyEvaluation eval = evaluate_policy(problem, result.policy);
      const auto& traces = problem.ladder().traces;
      const int top = problem.n_trunc();
      result.top_rung_mass = eval.top_rung_mass;
      result.truncation_bound = eval.top_rung_mass * (traces[top + 1] - traces[top]);
      result.recurrent_classes = eval.recurrent_classes;
      return result;
    }

    if (span < best_span) {
      best_span = span;
      stall = 0;
    } else if (++stall >= options.damping_patience && tau == 1.0) {
      tau = options.damping;
    }

    // H <- H + tau * ((TH - H) - (TH - H)(ref)); keeps H(ref) = 0.
    const double shift = backup[ref] - values[ref];
    for (int s = 0; s < n; ++s) {
      values[s] += tau * ((backup[s] - values[s]) - shift);
    }
  }
  throw ConvergenceError("relative value iteration did not converge in " +
                         std::to_string(options.max_iter) + " sweeps");
}

SparseMatrix induced_chain(const MdpProblem& problem, const Policy& lookup_policy) {
  const Policy lifted = lookup_policy.lift(problem.space());
  const int n = problem.num_states();
  std::vector<Triplet> triplets;
  for (int s = 0; s < n; ++s) {
    for (const Transition& t : problem.transitions(s, lifted.table()[s])) {
      triplets.emplace_back(s, t.next, t.prob);
    }
  }
  SparseMatrix P(n, n);
  P.setFromTriplets(triplets.begin(), triplets.end());
  P.makeCompressed();
  return P;
}

PolicyEvaluation evaluate_policy(const MdpProblem& problem, const Policy& policy) {
  if (policy.kind() == PolicyKind::kGreedy) return evaluate_pre_harvest(problem, policy);

  const Policy lifted = policy.lift(problem.space());
  const ChainLimit limit = cesaro_limit(induced_chain(problem, lifted),
                                        problem.initial_distribution());
  PolicyEvaluation out;
  out.occupancy = limit.distribution;
  out.recurrent_classes = limit.recurrent_classes;
  for (int s = 0; s < problem.num_states(); ++s) {
    if (out.occupancy(s) == 0.0) continue;
    const int rung = problem.space().state(s).l;
    out.average_cost += out.occupancy(s) * problem.cost(rung, lifted.table()[s]);
  }
  out.top_rung_mass = top_mass(problem.space(), out.occupancy);
  return out;
}

double policy_evaluate_exact(const MdpProblem& problem, const Policy& policy) {
  return evaluate_policy(problem, policy).average_cost;
}

PolicyEvaluation evaluate_pre_harvest(const MdpProblem& problem, const Policy& policy) {
  const StateSpace& space = problem.space();
  const EnergyModel& energy = problem.energy();
  const int capacity = energy.capacity();
  const int n = space.size();

  std::vector<Triplet> triplets;
  Vector step_cost = Vector::Zero(n);
  for (int s = 0; s < n; ++s) {
    const MdpState pre = space.state(s);  // m holds the pre-harvest battery here
    const int drop_rung = std::min(pre.l + 1, space.n_trunc());
    for (int r = 0; r <= capacity; ++r) {
      const double p_harvest = energy.harvest.prob(pre.n, r);
      if (p_harvest == 0.0) continue;
      const int m = battery_after_harvest(pre.m, r, capacity);
      const int action = policy.action(m, pre.n, pre.l, r);
      check_action({m, pre.n, pre.l}, action);
      const int next_b = battery_next(m, action);
      const double drop = drop_probability(problem.channel(), action);
      step_cost(s) += p_harvest * problem.cost(pre.l, action);
      for (int next_n = 0; next_n < 2; ++next_n) {
        const double p = p_harvest * energy.chain.prob(pre.n, next_n);
        if (p == 0.0) continue;
        if (drop > 0.0) {
          triplets.emplace_back(s, space.flat_index({next_b, next_n, drop_rung}), p * drop);
        }
        if (drop < 1.0) {
          triplets.emplace_back(s, space.flat_index({next_b, next_n, 0}), p * (1.0 - drop));
        }
      }
    }
  }
  SparseMatrix P(n, n);
  P.setFromTriplets(triplets.begin(), triplets.end());
  P.makeCompressed();

  Vector init = Vector::Zero(n);
  init(space.flat_index({problem.initial().b0, index_of(problem.initial().e0), 0})) = 1.0;
  const ChainLimit limit = cesaro_limit(P, init);

  PolicyEvaluation out;
  out.occupancy = limit.distribution;
  out.recurrent_classes = limit.recurrent_classes;
  out.average_cost = out.occupancy.dot(step_cost);
  out.top_rung_mass = top_mass(space, out.occupancy);
  return out;
}

std::pair<double, Policy> brute_force_average_cost(const MdpProblem& problem,
                                                   std::uint64_t max_policies) {
  const int n = problem.num_states();
  std::uint64_t count = 1;
  for (int s = 0; s < n; ++s) {
    count *= static_cast<std::uint64_t>(problem.num_actions(s));
    if (count > max_policies) {
      throw ModelError("brute force needs more than " + std::to_string(max_policies) +
                       " policies");
    }
  }

  std::vector<int> actions(n, 0);
  double best_cost = std::numeric_limits<double>::infinity();
  std::vector<int> best_actions = actions;
  for (std::uint64_t k = 0; k < count; ++k) {
    const double cost =
        policy_evaluate_exact(problem, Policy::lookup(problem.space(), actions));
    if (cost < best_cost) {
      best_cost = cost;
      best_actions = actions;
    }
    // Mixed-radix increment.
    for (int s = 0; s < n; ++s) {
      if (++actions[s] < problem.num_actions(s)) break;
      actions[s] = 0;
    }
  }
  return {best_cost, Policy::lookup(problem.space(), std::move(best_actions))};
}

}  // namespace ehrse
