#include <gtest/gtest.h>

#include "ehrse/errors.hpp"
#include "ehrse/threshold.hpp"
#include "fixtures.hpp"
#include "power_law_oracle.hpp"

namespace ehrse {
namespace {

TEST(Threshold, Action) {
  const ThresholdPolicy t{1, 2};
  EXPECT_EQ(threshold_action(3, Condition::kGood, t), 1);
  EXPECT_EQ(threshold_action(3, Condition::kBad, t), 2);
  EXPECT_EQ(threshold_action(1, Condition::kBad, t), 1);
  EXPECT_EQ(threshold_action(0, Condition::kGood, t), 0);
}

TEST(Psi, FirstRowWithSwappedThresholds) {
  const Matrix psi = build_psi({2, 1}, test::example_energy());
  const double expected[] = {0.07, 0.12, 0.14, 0.09, 0.21, 0.06, 0.28, 0.03};
  for (int j = 0; j < 8; ++j) EXPECT_NEAR(psi(0, j), expected[j], 1e-15) << j;
}

TEST(Psi, RowsStochasticForEveryPair) {
  const EnergyModel e = test::example_energy();
  for (int g = 0; g <= 3; ++g) {
    for (int b = 0; b <= 3; ++b) {
      const Matrix psi = build_psi({g, b}, e);
      ASSERT_EQ(psi.rows(), 8);
      EXPECT_GE(psi.minCoeff(), 0.0);
      for (int i = 0; i < 8; ++i) EXPECT_NEAR(psi.row(i).sum(), 1.0, 1e-14);
    }
  }
}

TEST(Psi, IdentityEnvironmentIsBlockDiagonalInCondition) {
  const EnergyModel e{EnvironmentChain(1.0, 0.0, 0.0, 1.0),
                      HarvestDistribution({0.1, 0.2, 0.3, 0.4}, {0.4, 0.3, 0.2, 0.1})};
  const Matrix psi = build_psi({2, 1}, e);
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) {
      if (i % 2 != j % 2) EXPECT_EQ(psi(i, j), 0.0);
    }
  }
}

TEST(Psi, RejectsThresholdAboveCapacity) {
  EXPECT_THROW(build_psi({4, 0}, test::example_energy()), ModelError);
}

TEST(Psi, StationaryDistribution) {
  const Matrix psi = build_psi({2, 1}, test::example_energy());
  const Vector q = stationary_distribution(psi);
  EXPECT_NEAR(q.sum(), 1.0, 1e-14);
  EXPECT_TRUE((q.transpose() * psi).isApprox(q.transpose(), 1e-13));
  // Condition marginals equal the environment's stationary law.
  double good = 0.0;
  for (int b = 0; b <= 3; ++b) good += q(pair_index(b, Condition::kGood));
  EXPECT_NEAR(good, 0.4, 1e-13);
}

TEST(Omega, MatchesPiecewiseOracle) {
  const EnergyModel e = test::example_energy();
  for (int r0 = 0; r0 <= 3; ++r0) {
    for (int r1 = r0 + 1; r1 <= 3; ++r1) {
      const ThresholdPolicy t{r0, r1};
      const Vector q = stationary_distribution(build_psi(t, e));
      const Vector omega = omega_distribution(q, t, 3);
      const Vector oracle = test::power_law_oracle(q, r0, r1, 3);
      EXPECT_NEAR(omega.sum(), 1.0, 1e-14);
      for (int i = 0; i <= 3; ++i) EXPECT_NEAR(omega(i), oracle(i), 1e-12);
    }
  }
}

TEST(Omega, SimplePushForward) {
  Vector q = Vector::Zero(4);  // b_max = 1
  q << 0.1, 0.2, 0.3, 0.4;
  const Vector w = omega_distribution(q, {0, 1}, 1);
  EXPECT_NEAR(w(0), 0.1 + 0.2 + 0.3, 1e-15);
  EXPECT_NEAR(w(1), 0.4, 1e-15);
}

TEST(GridSearch, CoversAllPairsInOrder) {
  const MdpProblem p = test::example_problem(20);
  const GridSearchResult g = threshold_grid_search(p);
  ASSERT_EQ(g.table.size(), 16u);
  for (std::size_t i = 0; i < g.table.size(); ++i) {
    EXPECT_EQ(g.table[i].thresholds.r_good, static_cast<int>(i / 4));
    EXPECT_EQ(g.table[i].thresholds.r_bad, static_cast<int>(i % 4));
    EXPECT_GE(g.table[i].cost, g.best.cost);
  }
  EXPECT_EQ(g.best.thresholds, (ThresholdPolicy{2, 1}));
}

}  // namespace
}  // namespace ehrse
