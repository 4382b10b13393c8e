#include "ehrse/markov.hpp"

#include <Eigen/SparseLU>
#include <boost/graph/adjacency_list.hpp>
#include <boost/graph/strong_components.hpp>

#include <vector>

#include "ehrse/errors.hpp"

namespace ehrse {
namespace {

using Graph = boost::adjacency_list<boost::vecS, boost::vecS, boost::directedS>;
using Triplet = Eigen::Triplet<double>;

Eigen::SparseMatrix<double> to_column_major(const std::vector<Triplet>& triplets,
                                            Eigen::Index n) {
  Eigen::SparseMatrix<double> M(n, n);
  M.setFromTriplets(triplets.begin(), triplets.end());
  M.makeCompressed();
  return M;
}

Vector solve_sparse(const Eigen::SparseMatrix<double>& M, const Vector& rhs) {
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(M);
  if (lu.info() != Eigen::Success) {
    throw ConvergenceError("singular system while analysing Markov chain");
  }
  Vector x = lu.solve(rhs);
  if (lu.info() != Eigen::Success || !x.allFinite()) {
    throw ConvergenceError("failed to solve Markov chain system");
  }
  return x;
}

// Stationary law of the closed class `members` (global indices).
Vector class_stationary(const SparseMatrix& P, const std::vector<int>& members,
                        const std::vector<int>& local) {
  const auto k = static_cast<Eigen::Index>(members.size());
  Vector pi = Vector::Zero(k);
  if (k == 1) {
    pi(0) = 1.0;
    return pi;
  }
  // Rows 0..k-2 of (P_CC' - I) pi = 0, last row sum(pi) = 1.
  std::vector<Triplet> triplets;
  for (Eigen::Index a = 0; a < k; ++a) {
    const int i = members[a];
    for (SparseMatrix::InnerIterator it(P, i); it; ++it) {
      if (!(it.value() > 0.0)) continue;
      const int b = local[it.col()];
      if (b < k - 1) triplets.emplace_back(b, a, it.value());
    }
    if (a < k - 1) triplets.emplace_back(a, a, -1.0);
    triplets.emplace_back(k - 1, a, 1.0);
  }
  Vector rhs = Vector::Zero(k);
  rhs(k - 1) = 1.0;
  pi = solve_sparse(to_column_major(triplets, k), rhs);
  pi = pi.cwiseMax(0.0);
  return pi / pi.sum();
}

}  // namespace

ChainLimit cesaro_limit(const SparseMatrix& P, const Vector& init) {
  const auto n = static_cast<int>(P.rows());
  if (P.cols() != n || init.size() != n) {
    throw ModelError("transition matrix and initial law dimensions disagree");
  }

  Graph graph(n);
  for (int i = 0; i < n; ++i) {
    for (SparseMatrix::InnerIterator it(P, i); it; ++it) {
      if (it.value() > 0.0) boost::add_edge(i, static_cast<int>(it.col()), graph);
    }
  }
  std::vector<int> component(n);
  const int num_components = boost::strong_components(graph, component.data());

  std::vector<bool> closed(num_components, true);
  for (int i = 0; i < n; ++i) {
    for (SparseMatrix::InnerIterator it(P, i); it; ++it) {
      if (it.value() > 0.0 && component[it.col()] != component[i]) {
        closed[component[i]] = false;
      }
    }
  }

  // Closed classes get dense ids; transient states get local indices.
  std::vector<int> class_id(num_components, -1);
  int num_classes = 0;
  for (int c = 0; c < num_components; ++c) {
    if (closed[c]) class_id[c] = num_classes++;
  }
  std::vector<std::vector<int>> members(num_classes);
  std::vector<int> transient;
  std::vector<int> local(n, -1);
  for (int i = 0; i < n; ++i) {
    const int c = class_id[component[i]];
    if (c >= 0) {
      local[i] = static_cast<int>(members[c].size());
      members[c].push_back(i);
    } else {
      local[i] = static_cast<int>(transient.size());
      transient.push_back(i);
    }
  }

  // Mass eventually absorbed into each closed class.
  Vector class_mass = Vector::Zero(num_classes);
  for (int i = 0; i < n; ++i) {
    const int c = class_id[component[i]];
    if (c >= 0) class_mass(c) += init(i);
  }
  if (!transient.empty()) {
    // y' (I - P_TT) = init_T'  =>  (I - P_TT)' y = init_T.
    const auto t = static_cast<Eigen::Index>(transient.size());
    std::vector<Triplet> triplets;
    Vector init_t(t);
    for (Eigen::Index a = 0; a < t; ++a) {
      const int i = transient[a];
      init_t(a) = init(i);
      triplets.emplace_back(a, a, 1.0);
      for (SparseMatrix::InnerIterator it(P, i); it; ++it) {
        if (class_id[component[it.col()]] < 0) {
          triplets.emplace_back(local[it.col()], a, -it.value());
        }
      }
    }
    const Vector y = solve_sparse(to_column_major(triplets, t), init_t);
    for (Eigen::Index a = 0; a < t; ++a) {
      if (y(a) == 0.0) continue;
      for (SparseMatrix::InnerIterator it(P, transient[a]); it; ++it) {
        const int c = class_id[component[it.col()]];
        if (c >= 0) class_mass(c) += y(a) * it.value();
      }
    }
  }

  ChainLimit out;
  out.recurrent_classes = num_classes;
  out.distribution = Vector::Zero(n);
  for (int c = 0; c < num_classes; ++c) {
    if (class_mass(c) <= 0.0) continue;
    const Vector pi = class_stationary(P, members[c], local);
    for (std::size_t a = 0; a < members[c].size(); ++a) {
      out.distribution(members[c][a]) += class_mass(c) * pi(static_cast<Eigen::Index>(a));
    }
  }
  const double total = out.distribution.sum();
  if (total > 0.0) out.distribution /= total;
  return out;
}

ChainLimit cesaro_limit(const Matrix& P, const Vector& init) {
  SparseMatrix sparse = P.sparseView();
  return cesaro_limit(sparse, init);
}

}  // namespace ehrse
