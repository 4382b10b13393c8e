#include "ehrse/threshold.hpp"

#include "ehrse/errors.hpp"
#include "ehrse/markov.hpp"

namespace ehrse {

Matrix build_psi(const ThresholdPolicy& policy, const EnergyModel& energy) {
  const int capacity = energy.capacity();
  if (policy.r_good < 0 || policy.r_good > capacity || policy.r_bad < 0 ||
      policy.r_bad > capacity) {
    throw ModelError("thresholds must lie in [0, b_max]");
  }
  const int size = 2 * (capacity + 1);
  Matrix psi = Matrix::Zero(size, size);
  for (int b = 0; b <= capacity; ++b) {
    for (int n = 0; n < 2; ++n) {
      const Condition e = condition_at(n);
      const int residual = battery_next(b, threshold_action(b, e, policy));
      const int row = pair_index(b, e);
      for (int next_n = 0; next_n < 2; ++next_n) {
        const double env = energy.chain.prob(n, next_n);
        for (int r = 0; r <= capacity; ++r) {
          const int next_b = battery_after_harvest(residual, r, capacity);
          psi(row, pair_index(next_b, condition_at(next_n))) +=
              env * energy.harvest.prob(next_n, r);
        }
      }
    }
  }
  return psi;
}

Vector stationary_distribution(const Matrix& psi, std::optional<Vector> init) {
  if (psi.rows() != psi.cols() || psi.rows() == 0) {
    throw ModelError("transition matrix must be square and non-empty");
  }
  Vector start = Vector::Zero(psi.rows());
  if (init) {
    start = *init;
  } else {
    start(0) = 1.0;
  }
  return cesaro_limit(psi, start).distribution;
}

Vector omega_distribution(const Vector& q, const ThresholdPolicy& policy, int capacity) {
  if (q.size() != 2 * (capacity + 1)) {
    throw ModelError("distribution length does not match 2(b_max + 1)");
  }
  Vector omega = Vector::Zero(capacity + 1);
  for (int b = 0; b <= capacity; ++b) {
    for (Condition e : {Condition::kGood, Condition::kBad}) {
      omega(threshold_action(b, e, policy)) += q(pair_index(b, e));
    }
  }
  return omega;
}

GridSearchResult threshold_grid_search(const MdpProblem& problem) {
  const int capacity = problem.energy().capacity();
  GridSearchResult result;
  result.table.reserve(static_cast<std::size_t>(capacity + 1) * (capacity + 1));
  bool have_best = false;
  for (int rg = 0; rg <= capacity; ++rg) {
    for (int rb = 0; rb <= capacity; ++rb) {
      const ThresholdPolicy thresholds{rg, rb};
      const double cost = policy_evaluate_exact(problem, Policy::threshold(thresholds));
      result.table.push_back({thresholds, cost});
      if (!have_best || cost < result.best.cost) {
        result.best = {thresholds, cost};
        have_best = true;
      }
    }
  }
  return result;
}

}  // namespace ehrse
