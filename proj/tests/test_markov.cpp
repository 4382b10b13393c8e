#include <gtest/gtest.h>

#include "ehrse/markov.hpp"

namespace ehrse {
namespace {

Vector point(int n, int i) {
  Vector v = Vector::Zero(n);
  v(i) = 1.0;
  return v;
}

TEST(Cesaro, IrreducibleTwoState) {
  Matrix P(2, 2);
  P << 0.7, 0.3, 0.2, 0.8;
  const ChainLimit lim = cesaro_limit(P, point(2, 0));
  EXPECT_EQ(lim.recurrent_classes, 1);
  EXPECT_NEAR(lim.distribution(0), 0.4, 1e-14);
  EXPECT_NEAR(lim.distribution(1), 0.6, 1e-14);
}

TEST(Cesaro, PeriodicChainAverages) {
  Matrix P(2, 2);
  P << 0, 1, 1, 0;
  const ChainLimit lim = cesaro_limit(P, point(2, 0));
  EXPECT_NEAR(lim.distribution(0), 0.5, 1e-14);
  EXPECT_NEAR(lim.distribution(1), 0.5, 1e-14);
}

TEST(Cesaro, IdentityKeepsInitialLaw) {
  const Matrix P = Matrix::Identity(3, 3);
  Vector init(3);
  init << 0.2, 0.5, 0.3;
  const ChainLimit lim = cesaro_limit(P, init);
  EXPECT_EQ(lim.recurrent_classes, 3);
  EXPECT_TRUE(lim.distribution.isApprox(init, 1e-14));
}

TEST(Cesaro, TransientSplitsBetweenAbsorbingClasses) {
  // 0 -> {0: 0.5, 1: 0.2, 2: 0.3}; 1 and 2 absorbing.
  Matrix P(3, 3);
  P << 0.5, 0.2, 0.3, 0, 1, 0, 0, 0, 1;
  const ChainLimit lim = cesaro_limit(P, point(3, 0));
  EXPECT_EQ(lim.recurrent_classes, 2);
  EXPECT_NEAR(lim.distribution(0), 0.0, 1e-14);
  EXPECT_NEAR(lim.distribution(1), 0.4, 1e-14);
  EXPECT_NEAR(lim.distribution(2), 0.6, 1e-14);
}

TEST(Cesaro, TransientIntoRecurrentClass) {
  // State 0 transient, {1, 2} a periodic closed class.
  Matrix P(3, 3);
  P << 0, 1, 0, 0, 0, 1, 0, 1, 0;
  const ChainLimit lim = cesaro_limit(P, point(3, 0));
  EXPECT_EQ(lim.recurrent_classes, 1);
  EXPECT_NEAR(lim.distribution(0), 0.0, 1e-14);
  EXPECT_NEAR(lim.distribution(1), 0.5, 1e-14);
  EXPECT_NEAR(lim.distribution(2), 0.5, 1e-14);
}

TEST(Cesaro, MatchesLongPowerAverage) {
  Matrix P(4, 4);
  P << 0.1, 0.6, 0.3, 0.0,
       0.0, 0.2, 0.3, 0.5,
       0.4, 0.0, 0.1, 0.5,
       0.3, 0.3, 0.3, 0.1;
  const Vector init = point(4, 2);
  Eigen::RowVectorXd row = init.transpose();
  Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(4);
  const int T = 20000;
  for (int t = 0; t < T; ++t) {
    acc += row;
    row = row * P;
  }
  const ChainLimit lim = cesaro_limit(P, init);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(lim.distribution(i), acc(i) / T, 1e-3);
  EXPECT_NEAR(lim.distribution.sum(), 1.0, 1e-14);
  // Stationary: pi P = pi.
  const Eigen::RowVectorXd pi = lim.distribution.transpose();
  EXPECT_TRUE((pi * P).isApprox(pi, 1e-13));
}

TEST(Cesaro, SparseAndDenseAgree) {
  Matrix P(3, 3);
  P << 0.5, 0.5, 0, 0.25, 0.5, 0.25, 0, 0.5, 0.5;
  const SparseMatrix S = P.sparseView();
  const Vector init = point(3, 1);
  EXPECT_TRUE(cesaro_limit(S, init).distribution.isApprox(cesaro_limit(P, init).distribution,
                                                          1e-15));
}

}  // namespace
}  // namespace ehrse
