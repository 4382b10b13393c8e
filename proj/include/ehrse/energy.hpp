#pragma once

#include <array>
#include <string_view>
#include <vector>

#include "ehrse/rng.hpp"

namespace ehrse {

/// Environment condition. The numeric value is the index used everywhere
/// (G = 0, B = 1).
enum class Condition : int { kGood = 0, kBad = 1 };

inline int index_of(Condition e) noexcept { return static_cast<int>(e); }
inline Condition condition_at(int n) noexcept {
  return n == 0 ? Condition::kGood : Condition::kBad;
}
std::string_view to_string(Condition e) noexcept;

/// Two-state Markov chain of the harvesting environment.
class EnvironmentChain {
 public:
  /// Rows (p_gg, p_gb) and (p_bg, p_bb) must each sum to 1 within 1e-12.
  EnvironmentChain(double p_gg, double p_gb, double p_bg, double p_bb);

  /// Convenience form with the complementary entries filled in.
  static EnvironmentChain from_stay_probabilities(double p_gg, double p_bb);

  /// P(next = to | current = from).
  double prob(Condition from, Condition to) const noexcept {
    return p_[index_of(from)][index_of(to)];
  }
  double prob(int from, int to) const noexcept { return p_[from][to]; }

 private:
  std::array<std::array<double, 2>, 2> p_{};
};

/// Condition-dependent distributions of harvested energy over {0..b_max}.
class HarvestDistribution {
 public:
  /// Both vectors must have the same length b_max + 1, entries >= 0 and sum
  /// to 1 within 1e-12. Longer supports are rejected, not folded.
  HarvestDistribution(std::vector<double> good, std::vector<double> bad);

  int capacity() const noexcept { return static_cast<int>(good_.size()) - 1; }
  const std::vector<double>& good() const noexcept { return good_; }
  const std::vector<double>& bad() const noexcept { return bad_; }
  const std::vector<double>& of(Condition e) const noexcept {
    return e == Condition::kGood ? good_ : bad_;
  }
  double prob(int condition, int r) const noexcept {
    return condition == 0 ? good_[r] : bad_[r];
  }

 private:
  std::vector<double> good_, bad_;
};

/// Everything about energy: environment, harvest law, battery capacity.
struct EnergyModel {
  EnvironmentChain chain;
  HarvestDistribution harvest;

  int capacity() const noexcept { return harvest.capacity(); }
};

struct BatteryState {
  int level = 0;
  int capacity = 0;
};

/// Next condition, one uniform from `rng`.
Condition env_step(Condition e, const EnvironmentChain& chain, RandomStream& rng);

/// Stationary law (q_G, q_B). For a chain that cannot leave one state the
/// result is the point mass on that state (G when both are absorbing).
std::array<double, 2> env_stationary(const EnvironmentChain& chain);

/// Harvest draw from the distribution of condition e, one uniform from `rng`.
int harvest_sample(Condition e, const HarvestDistribution& dist, RandomStream& rng);

/// min(b + r, capacity).
int battery_after_harvest(int b, int r, int capacity);

/// b_after_harvest - power; throws ConstraintViolation when the power exceeds
/// the available energy or is negative.
int battery_next(int b_after_harvest, int power);

}  // namespace ehrse
