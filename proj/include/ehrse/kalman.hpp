#pragma once

#include <Eigen/Dense>

#include <utility>
#include <vector>

namespace ehrse {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Result of the rank tests on (A, C) and (A, Q^{1/2}).
struct StructureReport {
  bool observable = false;
  bool controllable = false;
};

/// LTI plant x' = A x + w, y = C x + v with w ~ N(0, Q), v ~ N(0, R) and
/// x_0 ~ N(0, Pi0).
///
/// The constructor checks dimensions and the covariance conditions (Q, Pi0 PSD,
/// R PD). `validated` additionally requires (A, C) observable and
/// (A, Q^{1/2}) controllable, which is what the config loader uses.
class SystemModel {
 public:
  SystemModel(Matrix A, Matrix C, Matrix Q, Matrix R, Matrix Pi0);

  static SystemModel validated(Matrix A, Matrix C, Matrix Q, Matrix R,
                               Matrix Pi0);

  const Matrix& A() const noexcept { return A_; }
  const Matrix& C() const noexcept { return C_; }
  const Matrix& Q() const noexcept { return Q_; }
  const Matrix& R() const noexcept { return R_; }
  const Matrix& Pi0() const noexcept { return Pi0_; }

  Eigen::Index state_dim() const noexcept { return A_.rows(); }
  Eigen::Index output_dim() const noexcept { return C_.rows(); }

 private:
  Matrix A_, C_, Q_, R_, Pi0_;
};

/// Singular-value rank tests with threshold 1e-8 * sigma_max.
StructureReport check_structure(const SystemModel& model);

/// Numerical rank of M with threshold rel_tol * sigma_max.
Eigen::Index numerical_rank(const Matrix& M, double rel_tol = 1e-8);

/// True when every eigenvalue of sym(X) is >= -1e-9 * (1 + ||X||_2).
bool is_psd(const Matrix& X);

/// Symmetrizes X and clips eigenvalues in the tolerance band to zero. Throws
/// ModelError when X is non-square or has an eigenvalue below the band.
Matrix sanitize_psd(const Matrix& X);

/// h(X) = A X A' + Q.
Matrix lyapunov_step(const Matrix& X, const SystemModel& model);

/// g~(X) = X - X C' (C X C' + R)^{-1} C X.
Matrix riccati_reduce(const Matrix& X, const SystemModel& model);

struct SteadyStateOptions {
  double tol = 1e-12;
  long max_iter = 1'000'000;
};

/// Fixed point of g~(h(.)) by iterating from Pi0. Converged when
/// ||g~(h(X)) - X||_F <= tol * max(1, ||X||_F).
Matrix steady_state_covariance(const SystemModel& model,
                               SteadyStateOptions options = {});

/// The remote error covariances reachable after t consecutive drops following
/// a reception: rungs[t] = h^t(P_bar).
struct CovarianceLadder {
  std::vector<Matrix> rungs;
  std::vector<double> traces;

  std::size_t depth() const noexcept { return rungs.empty() ? 0 : rungs.size() - 1; }
  const Matrix& steady() const { return rungs.front(); }
};

/// Builds rungs 0..depth starting from steady_state_covariance(model).
/// Throws ModelError if a trace ever decreases.
CovarianceLadder build_ladder(const SystemModel& model, std::size_t depth,
                              SteadyStateOptions options = {});

/// Same, from an already computed steady-state covariance.
CovarianceLadder build_ladder_from(const SystemModel& model, const Matrix& steady,
                                   std::size_t depth);

struct FilterState {
  Vector estimate;
  Matrix covariance;
};

/// One step of the sensor's Kalman filter: time update, gain, measurement
/// update. The returned covariance equals g~(h(prev_cov)).
FilterState local_filter_step(const Vector& prev_estimate, const Matrix& prev_cov,
                              const Vector& measurement, const SystemModel& model);

/// Remote covariance after one step: `steady` on arrival, h(prev) on a drop.
Matrix remote_update(const Matrix& prev_remote_cov, bool arrival,
                     const SystemModel& model, const Matrix& steady);

}  // namespace ehrse
