#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ehrse/energy.hpp"

namespace ehrse {

/// Decision state (m, n, l): battery after harvesting, condition index and
/// covariance rung of the previous step.
struct MdpState {
  int m = 0;
  int n = 0;
  int l = 0;

  friend bool operator==(const MdpState&, const MdpState&) = default;
};

/// Flat indexing of the truncated state space. The (m, n) pair is ordered with
/// the condition fastest (index 2m + n), and the rung is fastest overall:
/// flat = (2m + n) * (n_trunc + 1) + l.
class StateSpace {
 public:
  StateSpace(int capacity, int n_trunc) : capacity_(capacity), n_trunc_(n_trunc) {}

  int capacity() const noexcept { return capacity_; }
  int n_trunc() const noexcept { return n_trunc_; }
  int rungs() const noexcept { return n_trunc_ + 1; }
  int size() const noexcept { return 2 * (capacity_ + 1) * rungs(); }

  int flat_index(const MdpState& s) const noexcept {
    return (2 * s.m + s.n) * rungs() + s.l;
  }
  MdpState state(int flat) const noexcept {
    const int pair = flat / rungs();
    return {pair / 2, pair % 2, flat % rungs()};
  }

 private:
  int capacity_;
  int n_trunc_;
};

/// Power rule w = min(b', R_G) in good conditions, min(b', R_B) in bad ones.
struct ThresholdPolicy {
  int r_good = 0;
  int r_bad = 0;

  int cap(Condition e) const noexcept { return e == Condition::kGood ? r_good : r_bad; }
  friend bool operator==(const ThresholdPolicy&, const ThresholdPolicy&) = default;
};

int threshold_action(int b_after_harvest, Condition e, const ThresholdPolicy& policy);

enum class PolicyKind { kLookup, kThreshold, kGreedy };

/// A stationary sensor power rule.
///
/// Lookup policies are indexed by the flat MDP state; rungs beyond the table
/// depth use the deepest row. Greedy spends exactly the fresh harvest, so it
/// needs the harvest of the current step and is not a function of (m, n, l).
class Policy {
 public:
  static Policy lookup(const StateSpace& space, std::vector<int> actions);
  static Policy threshold(ThresholdPolicy thresholds);
  static Policy greedy();

  PolicyKind kind() const noexcept { return kind_; }
  const std::vector<int>& table() const noexcept { return table_; }
  const ThresholdPolicy& thresholds() const noexcept { return thresholds_; }

  /// Action in state (m, n, l) when `harvest` was just collected.
  int action(int m, int n, int l, int harvest) const;

  /// Tabulates a threshold policy over `space`. Lookup policies must already
  /// match the space; greedy has no tabulation and throws.
  Policy lift(const StateSpace& space) const;

  std::string describe() const;

 private:
  PolicyKind kind_ = PolicyKind::kGreedy;
  std::vector<int> table_;
  ThresholdPolicy thresholds_;
  int capacity_ = 0;
  int n_trunc_ = 0;
};

}  // namespace ehrse
