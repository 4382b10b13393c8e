#pragma once

#include <Eigen/Sparse>

#include "ehrse/kalman.hpp"

namespace ehrse {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Long-run behaviour of a finite chain from a given initial law.
struct ChainLimit {
  /// Cesaro limit of the occupancy distribution started from `init`. For an
  /// irreducible chain this is the stationary distribution.
  Vector distribution;
  /// Number of closed communicating classes; 1 means unichain.
  int recurrent_classes = 0;
};

/// Computes the Cesaro limit lim (1/T) sum_t init' P^t exactly: stationary
/// laws of the closed classes are mixed with the absorption probabilities of
/// the transient states. P must be row-stochastic.
ChainLimit cesaro_limit(const SparseMatrix& P, const Vector& init);

/// Dense convenience overload.
ChainLimit cesaro_limit(const Matrix& P, const Vector& init);

}  // namespace ehrse
