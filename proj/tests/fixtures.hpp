#pragma once

#include <random>

#include "ehrse/channel.hpp"
#include "ehrse/energy.hpp"
#include "ehrse/kalman.hpp"
#include "ehrse/mdp.hpp"
#include "ehrse/policy.hpp"

namespace ehrse::test {

inline Matrix scalar(double x) { return Matrix::Constant(1, 1, x); }

// A = 0.9, C = 0.7, Q = R = 0.8.
inline SystemModel scalar_system() {
  return SystemModel(scalar(0.9), scalar(0.7), scalar(0.8), scalar(0.8), scalar(0.8));
}

inline EnergyModel example_energy() {
  return EnergyModel{EnvironmentChain(0.7, 0.3, 0.2, 0.8),
                     HarvestDistribution({0.1, 0.2, 0.3, 0.4}, {0.4, 0.3, 0.2, 0.1})};
}

inline ChannelModel example_channel() { return ChannelModel::from_lambda(0.7); }

inline MdpProblem example_problem(int n_trunc = 30) {
  return MdpProblem(scalar_system(), example_channel(), example_energy(), n_trunc);
}

inline constexpr double kSteadyOracle = 0.7576539242404993;

// Positive root of 0.3969 X^2 + 0.544 X - 0.64 = 0.
inline double steady_quadratic_root() {
  const double a = 0.3969, b = 0.544, c = -0.64;
  return (-b + std::sqrt(b * b - 4 * a * c)) / (2 * a);
}

inline std::vector<double> random_simplex(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<double> p(n);
  double sum = 0.0;
  for (double& x : p) sum += (x = u(rng));
  for (double& x : p) x /= sum;
  // Fold the rounding residue into the last entry so the sum is exactly 1.
  double head = 0.0;
  for (int i = 0; i + 1 < n; ++i) head += p[i];
  p.back() = 1.0 - head;
  return p;
}

inline EnergyModel random_energy(std::mt19937_64& rng, int capacity) {
  std::uniform_real_distribution<double> u(0.05, 0.95);
  const double gg = u(rng), bb = u(rng);
  return EnergyModel{EnvironmentChain::from_stay_probabilities(gg, bb),
                     HarvestDistribution(random_simplex(rng, capacity + 1),
                                         random_simplex(rng, capacity + 1))};
}

}  // namespace ehrse::test
