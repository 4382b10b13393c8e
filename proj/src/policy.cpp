#include "ehrse/policy.hpp"

#include <algorithm>
#include <sstream>

#include "ehrse/errors.hpp"

namespace ehrse {

int threshold_action(int b_after_harvest, Condition e, const ThresholdPolicy& policy) {
  if (b_after_harvest < 0) throw ConstraintViolation("negative battery level");
  return std::min(b_after_harvest, policy.cap(e));
}

Policy Policy::lookup(const StateSpace& space, std::vector<int> actions) {
  if (static_cast<int>(actions.size()) != space.size()) {
    throw ModelError("lookup policy has " + std::to_string(actions.size()) +
                     " entries, state space has " + std::to_string(space.size()));
  }
  for (int i = 0; i < space.size(); ++i) {
    const int m = space.state(i).m;
    if (actions[i] < 0 || actions[i] > m) {
      throw ConstraintViolation("lookup policy action " + std::to_string(actions[i]) +
                                " infeasible at flat index " + std::to_string(i));
    }
  }
  Policy p;
  p.kind_ = PolicyKind::kLookup;
  p.table_ = std::move(actions);
  p.capacity_ = space.capacity();
  p.n_trunc_ = space.n_trunc();
  return p;
}

Policy Policy::threshold(ThresholdPolicy thresholds) {
  if (thresholds.r_good < 0 || thresholds.r_bad < 0) {
    throw ModelError("thresholds must be non-negative");
  }
  Policy p;
  p.kind_ = PolicyKind::kThreshold;
  p.thresholds_ = thresholds;
  return p;
}

Policy Policy::greedy() {
  Policy p;
  p.kind_ = PolicyKind::kGreedy;
  return p;
}

int Policy::action(int m, int n, int l, int harvest) const {
  switch (kind_) {
    case PolicyKind::kLookup: {
      const StateSpace space(capacity_, n_trunc_);
      return table_[space.flat_index({m, n, std::min(l, n_trunc_)})];
    }
    case PolicyKind::kThreshold:
      return threshold_action(m, condition_at(n), thresholds_);
    case PolicyKind::kGreedy:
      return harvest;
  }
  return 0;
}

Policy Policy::lift(const StateSpace& space) const {
  switch (kind_) {
    case PolicyKind::kLookup:
      if (capacity_ != space.capacity() || n_trunc_ != space.n_trunc()) {
        throw ModelError("lookup policy was built for a different state space");
      }
      return *this;
    case PolicyKind::kThreshold: {
      std::vector<int> actions(space.size());
      for (int i = 0; i < space.size(); ++i) {
        const MdpState s = space.state(i);
        actions[i] = threshold_action(s.m, condition_at(s.n), thresholds_);
      }
      return lookup(space, std::move(actions));
    }
    case PolicyKind::kGreedy:
      break;
  }
  throw ModelError("greedy policy depends on the harvest and has no state table");
}

std::string Policy::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case PolicyKind::kLookup:
      os << "lookup(" << table_.size() << " states)";
      break;
    case PolicyKind::kThreshold:
      os << "threshold(R_G=" << thresholds_.r_good << ", R_B=" << thresholds_.r_bad << ")";
      break;
    case PolicyKind::kGreedy:
      os << "greedy";
      break;
  }
  return os.str();
}

}  // namespace ehrse
