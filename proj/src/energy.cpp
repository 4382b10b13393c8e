#include "ehrse/energy.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "ehrse/errors.hpp"

namespace ehrse {
namespace {

constexpr double kSumTol = 1e-12;

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

void check_distribution(const std::vector<double>& v, const char* name) {
  if (v.empty()) throw ModelError(std::string(name) + " harvest distribution is empty");
  double sum = 0.0;
  for (double p : v) {
    if (!std::isfinite(p) || p < 0.0) {
      throw ModelError(std::string(name) + " harvest distribution has a negative entry");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kSumTol) {
    throw ModelError(std::string(name) + " harvest distribution sums to " +
                     std::to_string(sum) + ", not 1");
  }
}

}  // namespace

std::string_view to_string(Condition e) noexcept {
  return e == Condition::kGood ? "G" : "B";
}

EnvironmentChain::EnvironmentChain(double p_gg, double p_gb, double p_bg, double p_bb) {
  for (double p : {p_gg, p_gb, p_bg, p_bb}) {
    if (!is_probability(p)) throw ModelError("environment probabilities must lie in [0, 1]");
  }
  if (std::abs(p_gg + p_gb - 1.0) > kSumTol) {
    throw ModelError("environment row G does not sum to 1");
  }
  if (std::abs(p_bg + p_bb - 1.0) > kSumTol) {
    throw ModelError("environment row B does not sum to 1");
  }
  p_ = {{{p_gg, p_gb}, {p_bg, p_bb}}};
}

EnvironmentChain EnvironmentChain::from_stay_probabilities(double p_gg, double p_bb) {
  return EnvironmentChain(p_gg, 1.0 - p_gg, 1.0 - p_bb, p_bb);
}

HarvestDistribution::HarvestDistribution(std::vector<double> good, std::vector<double> bad)
    : good_(std::move(good)), bad_(std::move(bad)) {
  check_distribution(good_, "good");
  check_distribution(bad_, "bad");
  if (good_.size() != bad_.size()) {
    throw ModelError("good and bad harvest distributions must both have length b_max + 1");
  }
}

Condition env_step(Condition e, const EnvironmentChain& chain, RandomStream& rng) {
  const double u = rng.uniform();
  return u < chain.prob(e, Condition::kGood) ? Condition::kGood : Condition::kBad;
}

std::array<double, 2> env_stationary(const EnvironmentChain& chain) {
  const double leave_good = chain.prob(0, 1);
  const double leave_bad = chain.prob(1, 0);
  if (leave_good == 0.0) return {1.0, 0.0};
  if (leave_bad == 0.0) return {0.0, 1.0};
  const double q_good = leave_bad / (leave_good + leave_bad);
  return {q_good, 1.0 - q_good};
}

int harvest_sample(Condition e, const HarvestDistribution& dist, RandomStream& rng) {
  const std::vector<double>& pmf = dist.of(e);
  const double u = rng.uniform();
  double cdf = 0.0;
  int last_positive = 0;
  for (int r = 0; r < static_cast<int>(pmf.size()); ++r) {
    if (pmf[r] <= 0.0) continue;
    last_positive = r;
    cdf += pmf[r];
    if (u < cdf) return r;
  }
  // Rounding can leave the cumulative sum a hair below 1.
  return last_positive;
}

int battery_after_harvest(int b, int r, int capacity) {
  if (b < 0 || b > capacity || r < 0) {
    throw ConstraintViolation("battery level or harvest out of range");
  }
  return std::min(b + r, capacity);
}

int battery_next(int b_after_harvest, int power) {
  if (power < 0 || power > b_after_harvest) {
    throw ConstraintViolation("power " + std::to_string(power) +
                              " infeasible with available energy " +
                              std::to_string(b_after_harvest));
  }
  return b_after_harvest - power;
}

}  // namespace ehrse
