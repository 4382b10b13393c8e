#include "ehrse/kalman.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "ehrse/errors.hpp"

namespace ehrse {
namespace {

constexpr double kPsdTol = 1e-9;

void require_square(const Matrix& M, Eigen::Index n, const char* name) {
  if (M.rows() != n || M.cols() != n) {
    std::ostringstream os;
    os << name << " must be " << n << "x" << n << ", got " << M.rows() << "x"
       << M.cols();
    throw ModelError(os.str());
  }
}

bool all_finite(const Matrix& M) { return M.allFinite(); }

}  // namespace

SystemModel::SystemModel(Matrix A, Matrix C, Matrix Q, Matrix R, Matrix Pi0)
    : A_(std::move(A)), C_(std::move(C)), Q_(std::move(Q)), R_(std::move(R)),
      Pi0_(std::move(Pi0)) {
  const Eigen::Index n = A_.rows();
  if (n == 0) throw ModelError("A must be non-empty");
  require_square(A_, n, "A");
  if (C_.cols() != n || C_.rows() == 0) {
    throw ModelError("C must have " + std::to_string(n) + " columns and at least one row");
  }
  require_square(Q_, n, "Q");
  require_square(R_, C_.rows(), "R");
  require_square(Pi0_, n, "Pi0");
  for (const Matrix* M : {&A_, &C_, &Q_, &R_, &Pi0_}) {
    if (!all_finite(*M)) throw ModelError("system matrices must be finite");
  }
  if (!is_psd(Q_)) throw ModelError("Q must be positive semi-definite");
  if (!is_psd(Pi0_)) throw ModelError("Pi0 must be positive semi-definite");
  Eigen::LLT<Matrix> llt(0.5 * (R_ + R_.transpose()));
  if (llt.info() != Eigen::Success) throw ModelError("R must be positive definite");
  Q_ = sanitize_psd(Q_);
  Pi0_ = sanitize_psd(Pi0_);
  R_ = 0.5 * (R_ + R_.transpose());
}

SystemModel SystemModel::validated(Matrix A, Matrix C, Matrix Q, Matrix R,
                                   Matrix Pi0) {
  SystemModel model(std::move(A), std::move(C), std::move(Q), std::move(R),
                    std::move(Pi0));
  const StructureReport report = check_structure(model);
  if (!report.observable) throw ModelError("(A, C) is not observable");
  if (!report.controllable) throw ModelError("(A, Q^{1/2}) is not controllable");
  return model;
}

Eigen::Index numerical_rank(const Matrix& M, double rel_tol) {
  if (M.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(M);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  const double threshold = rel_tol * s(0);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > threshold) ++rank;
  }
  return rank;
}

StructureReport check_structure(const SystemModel& model) {
  const Eigen::Index n = model.state_dim();
  const Matrix& A = model.A();

  // Observability matrix [C; CA; ...; CA^{n-1}].
  const Eigen::Index ny = model.output_dim();
  Matrix obs(ny * n, n);
  Matrix block = model.C();
  for (Eigen::Index i = 0; i < n; ++i) {
    obs.middleRows(i * ny, ny) = block;
    block = block * A;
  }

  // Q^{1/2} from the eigendecomposition of the (sanitized) Q.
  Eigen::SelfAdjointEigenSolver<Matrix> es(model.Q());
  const Matrix sqrt_q = es.eigenvectors() *
                        es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                        es.eigenvectors().transpose();
  Matrix ctrb(n, n * n);
  block = sqrt_q;
  for (Eigen::Index i = 0; i < n; ++i) {
    ctrb.middleCols(i * n, n) = block;
    block = A * block;
  }

  return {numerical_rank(obs) == n, numerical_rank(ctrb) == n};
}

bool is_psd(const Matrix& X) {
  if (X.rows() != X.cols() || !X.allFinite()) return false;
  if (X.size() == 0) return true;
  const Matrix sym = 0.5 * (X + X.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  const double norm = ev.cwiseAbs().maxCoeff();
  return ev.minCoeff() >= -kPsdTol * (1.0 + norm);
}

Matrix sanitize_psd(const Matrix& X) {
  if (X.rows() != X.cols()) throw ModelError("expected a square matrix");
  if (!X.allFinite()) throw ModelError("matrix has non-finite entries");
  Matrix sym = 0.5 * (X + X.transpose());
  if (sym.size() == 0) return sym;
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  const auto& ev = es.eigenvalues();
  const double norm = ev.cwiseAbs().maxCoeff();
  if (ev.minCoeff() < -kPsdTol * (1.0 + norm)) {
    std::ostringstream os;
    os << "matrix is not positive semi-definite (min eigenvalue " << ev.minCoeff()
       << ")";
    throw ModelError(os.str());
  }
  if (ev.minCoeff() < 0.0) {
    // Reconstruct only when clipping is needed; otherwise keep the entries.
    sym = es.eigenvectors() * ev.cwiseMax(0.0).asDiagonal() *
          es.eigenvectors().transpose();
    sym = 0.5 * (sym + sym.transpose());
  }
  return sym;
}

Matrix lyapunov_step(const Matrix& X, const SystemModel& model) {
  require_square(X, model.state_dim(), "X");
  const Matrix& A = model.A();
  return sanitize_psd(A * sanitize_psd(X) * A.transpose() + model.Q());
}

Matrix riccati_reduce(const Matrix& X, const SystemModel& model) {
  require_square(X, model.state_dim(), "X");
  const Matrix& C = model.C();
  const Matrix XCt = X * C.transpose();
  const Matrix S = C * XCt + model.R();
  // X - X C' S^{-1} C X, with S symmetric positive definite.
  const Matrix gain_term = XCt * S.ldlt().solve(XCt.transpose());
  return sanitize_psd(X - gain_term);
}

Matrix steady_state_covariance(const SystemModel& model, SteadyStateOptions options) {
  Matrix X = model.Pi0();
  for (long it = 0; it < options.max_iter; ++it) {
    Matrix next = riccati_reduce(lyapunov_step(X, model), model);
    const double step = (next - X).norm();
    const double scale = std::max(1.0, next.norm());
    X = std::move(next);
    if (step <= options.tol * scale) return X;
  }
  throw ConvergenceError("steady-state covariance did not converge in " +
                         std::to_string(options.max_iter) + " iterations");
}

CovarianceLadder build_ladder_from(const SystemModel& model, const Matrix& steady,
                                   std::size_t depth) {
  if (depth < 1) throw ModelError("ladder depth must be at least 1");
  CovarianceLadder ladder;
  ladder.rungs.reserve(depth + 1);
  ladder.traces.reserve(depth + 1);
  ladder.rungs.push_back(sanitize_psd(steady));
  ladder.traces.push_back(ladder.rungs.back().trace());
  for (std::size_t t = 1; t <= depth; ++t) {
    ladder.rungs.push_back(lyapunov_step(ladder.rungs.back(), model));
    ladder.traces.push_back(ladder.rungs.back().trace());
    // Strict growth can be lost to rounding far up a stable ladder, but a
    // genuine decrease means the input was not a valid steady state.
    const double prev = ladder.traces[t - 1];
    if (ladder.traces[t] < prev - 1e-12 * (1.0 + std::abs(prev))) {
      throw ModelError("covariance ladder trace decreased at rung " + std::to_string(t));
    }
  }
  return ladder;
}

CovarianceLadder build_ladder(const SystemModel& model, std::size_t depth,
                              SteadyStateOptions options) {
  return build_ladder_from(model, steady_state_covariance(model, options), depth);
}

FilterState local_filter_step(const Vector& prev_estimate, const Matrix& prev_cov,
                              const Vector& measurement, const SystemModel& model) {
  const Eigen::Index n = model.state_dim();
  if (prev_estimate.size() != n) throw ModelError("estimate dimension mismatch");
  if (measurement.size() != model.output_dim()) {
    throw ModelError("measurement dimension mismatch");
  }
  require_square(prev_cov, n, "prev_cov");

  const Matrix& A = model.A();
  const Matrix& C = model.C();

  const Vector predicted = A * prev_estimate;
  const Matrix predicted_cov = lyapunov_step(prev_cov, model);
  const Matrix S = C * predicted_cov * C.transpose() + model.R();
  // K = P C' S^{-1}, solved as S K' = C P.
  const Matrix gain = S.ldlt().solve(C * predicted_cov).transpose();

  FilterState out;
  out.estimate = predicted + gain * (measurement - C * predicted);
  out.covariance = sanitize_psd((Matrix::Identity(n, n) - gain * C) * predicted_cov);
  return out;
}

Matrix remote_update(const Matrix& prev_remote_cov, bool arrival,
                     const SystemModel& model, const Matrix& steady) {
  if (arrival) return steady;
  return lyapunov_step(prev_remote_cov, model);
}

}  // namespace ehrse
