#pragma once

#include <optional>
#include <vector>

#include "ehrse/energy.hpp"
#include "ehrse/kalman.hpp"
#include "ehrse/mdp.hpp"
#include "ehrse/policy.hpp"

namespace ehrse {

/// Index of the pair (battery after harvest, condition) in Psi and q*:
/// 2 * battery + condition, with G = 0 before B = 1.
inline int pair_index(int battery, Condition e) noexcept {
  return 2 * battery + index_of(e);
}

/// Transition matrix of S_k = (b'_k, e_k) under a threshold policy. Size
/// 2(b_max+1) square, row-stochastic.
Matrix build_psi(const ThresholdPolicy& policy, const EnergyModel& energy);

/// q* with q* Psi = q*. For a reducible chain this is the Cesaro limit from
/// `init`, which defaults to the point mass on (b' = 0, G).
Vector stationary_distribution(const Matrix& psi, std::optional<Vector> init = std::nullopt);

/// Stationary law of the transmitted power: q* pushed through
/// threshold_action. Length capacity + 1.
Vector omega_distribution(const Vector& q, const ThresholdPolicy& policy, int capacity);

struct ThresholdCost {
  ThresholdPolicy thresholds;
  double cost = 0.0;
};

struct GridSearchResult {
  ThresholdCost best;
  /// Every pair, R_G-major.
  std::vector<ThresholdCost> table;
};

/// Exact average cost of every (R_G, R_B) in {0..b_max}^2 through the MDP
/// evaluator; the best pair is the first minimum in R_G-major order.
GridSearchResult threshold_grid_search(const MdpProblem& problem);

}  // namespace ehrse
