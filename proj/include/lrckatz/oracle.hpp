#pragma once

// Dense reference implementations for verification. Every entry point refuses
// instances larger than its cap so it cannot be used at scale by accident.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "lrckatz/cholesky.hpp"
#include "lrckatz/error.hpp"
#include "lrckatz/factor.hpp"
#include "lrckatz/graph.hpp"
#include "lrckatz/linkpred.hpp"
#include "lrckatz/sparse.hpp"

namespace lrckatz::oracle {

using DenseMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using DenseVector = Eigen::VectorXd;

inline constexpr Index default_cap = 2000;

inline void check_cap(Index n, Index cap, const char* what) {
  if (n > cap)
    throw CapExceededError(std::string(what) + ": dimension " + std::to_string(n) + " exceeds oracle cap " +
                           std::to_string(cap));
}

inline DenseVector to_eigen(std::span<const double> v) {
  return Eigen::Map<const DenseVector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline Vector from_eigen(const DenseVector& v) { return Vector(v.data(), v.data() + v.size()); }

inline DenseMatrix dense(const CsrMatrix& m, Index cap = default_cap) {
  check_cap(std::max(m.rows, m.cols), cap, "dense");
  DenseMatrix d = DenseMatrix::Zero(m.rows, m.cols);
  for (Index i = 0; i < m.rows; ++i)
    for (Index k = m.offsets[i]; k < m.offsets[i + 1]; ++k) d(i, m.indices[k]) += m.values[k];
  return d;
}

inline DenseMatrix adjacency(const Graph& g, Index cap = default_cap) {
  const Index n = g.num_nodes();
  check_cap(n, cap, "adjacency");
  DenseMatrix a = DenseMatrix::Zero(n, n);
  for (Index u = 0; u < n; ++u)
    for (Index v : g.neighbors(u)) a(u, v) = 1.0;
  return a;
}

/// Eigenvalues of a symmetric matrix, ascending.
inline std::vector<double> symmetric_eigenvalues(const DenseMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(m), Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return std::vector<double>(ev.data(), ev.data() + ev.size());
}

/// ||G||_2 from a dense symmetric eigensolve.
inline double spectral_norm(const Graph& g, Index cap = default_cap) {
  if (g.num_nodes() == 0) return 0.0;
  auto ev = symmetric_eigenvalues(adjacency(g, cap));
  return std::max(std::abs(ev.front()), std::abs(ev.back()));
}

/// I - alpha G, with the admissibility gate checked against the dense norm.
inline DenseMatrix katz_system(const Graph& g, double alpha, Index cap = default_cap) {
  const Index n = g.num_nodes();
  check_cap(n, cap, "katz_system");
  if (alpha < 0.0) throw AlphaError("alpha must be nonnegative");
  if (alpha > 0.0 && !(alpha * spectral_norm(g, cap) < 1.0))
    throw AlphaError("alpha is inadmissible: I - alpha G is singular or indefinite");
  return DenseMatrix::Identity(n, n) - alpha * adjacency(g, cap);
}

/// K = (I - alpha G)^{-1} - I by a dense Cholesky factorization.
inline DenseMatrix dense_katz_matrix(const Graph& g, double alpha, Index cap = default_cap) {
  const Index n = g.num_nodes();
  const Eigen::MatrixXd m = katz_system(g, alpha, cap);
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) throw AlphaError("I - alpha G is not positive definite");
  Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(n, n));
  inv -= Eigen::MatrixXd::Identity(n, n);
  return 0.5 * (inv + inv.transpose());  // exact symmetry; removes rounding asymmetry
}

/// Truncated series sum_{l=1..L} alpha^l G^l.
inline DenseMatrix neumann_katz(const Graph& g, double alpha, Index terms, Index cap = default_cap) {
  const DenseMatrix a = adjacency(g, cap);
  DenseMatrix power = DenseMatrix::Identity(a.rows(), a.cols());
  DenseMatrix sum = DenseMatrix::Zero(a.rows(), a.cols());
  for (Index l = 1; l <= terms; ++l) {
    power = (alpha * power * a).eval();
    sum += power;
  }
  return sum;
}

/// Dense solve of (I - alpha G) k = alpha g_q (internal ids).
inline Vector katz_solve(const Graph& g, double alpha, Index q, Index cap = default_cap) {
  const Index n = g.num_nodes();
  if (q < 0 || q >= n) throw UnknownNodeError("query node out of range", q);
  const Eigen::MatrixXd m = katz_system(g, alpha, cap);
  DenseVector b = DenseVector::Zero(n);
  for (Index v : g.neighbors(q)) b[v] = alpha;
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) throw AlphaError("I - alpha G is not positive definite");
  return from_eigen(llt.solve(b));
}

/// S = M22 - M12^T M11^{-1} M12.
inline DenseMatrix dense_schur(const DenseMatrix& m11, const DenseMatrix& m12, const DenseMatrix& m22,
                               Index cap = default_cap) {
  check_cap(std::max(m11.rows(), m22.rows()), cap, "dense_schur");
  if (m11.rows() == 0) return m22;
  Eigen::LLT<Eigen::MatrixXd> llt{Eigen::MatrixXd(m11)};
  if (llt.info() != Eigen::Success) throw NonPositivePivotError("M11 is not positive definite", -1, 0.0);
  const Eigen::MatrixXd x = llt.solve(Eigen::MatrixXd(m12));
  DenseMatrix s = m22 - m12.transpose() * x;
  return 0.5 * (s + s.transpose());
}

inline DenseMatrix dense_schur(const CsrMatrix& m11, const CsrMatrix& m12, const CsrMatrix& m22,
                               Index cap = default_cap) {
  return dense_schur(dense(m11, cap), dense(m12, cap), dense(m22, cap), cap);
}

/// Solution of [[M11, M12], [M12^T, M22]] x = [g1; g2] by a dense solve of the
/// full assembled matrix.
inline Vector dense_block_solve(const DenseMatrix& m11, const DenseMatrix& m12, const DenseMatrix& m22,
                                std::span<const double> g1, std::span<const double> g2, Index cap = default_cap) {
  const Index n1 = m11.rows(), n2 = m22.rows();
  check_cap(n1 + n2, cap, "dense_block_solve");
  Eigen::MatrixXd full(n1 + n2, n1 + n2);
  full.topLeftCorner(n1, n1) = m11;
  full.topRightCorner(n1, n2) = m12;
  full.bottomLeftCorner(n2, n1) = m12.transpose();
  full.bottomRightCorner(n2, n2) = m22;
  DenseVector b(n1 + n2);
  b.head(n1) = to_eigen(g1);
  b.tail(n2) = to_eigen(g2);
  return from_eigen(full.ldlt().solve(b));
}

/// The factor C = P^T L of a SparseCholesky, so that C C^T = A and
/// C^{-1} x = L^{-1} P x matches apply_inverse_factor.
inline DenseMatrix factor_matrix(const SparseCholesky& f, Index cap = default_cap) {
  const Index n = f.size();
  check_cap(n, cap, "factor_matrix");
  const LowerCsc& l = f.factor();
  DenseMatrix c = DenseMatrix::Zero(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index k = l.col_ptr[j]; k < l.col_ptr[j + 1]; ++k) c(f.order()[l.row_idx[k]], j) = l.values[k];
  return c;
}

/// R = C^{-1} M12^T M11^{-1} M12 C^{-T} with C the given factor of M22.
inline DenseMatrix dense_R(const DenseMatrix& m11, const DenseMatrix& m12, const DenseMatrix& c,
                           Index cap = default_cap) {
  check_cap(std::max(m11.rows(), c.rows()), cap, "dense_R");
  const Index n2 = c.rows();
  if (m11.rows() == 0) return DenseMatrix::Zero(n2, n2);
  const Eigen::MatrixXd x = Eigen::LLT<Eigen::MatrixXd>(Eigen::MatrixXd(m11)).solve(Eigen::MatrixXd(m12));
  const Eigen::MatrixXd inner = m12.transpose() * x;
  const Eigen::MatrixXd cinv = Eigen::MatrixXd(c).inverse();
  DenseMatrix r = cinv * inner * cinv.transpose();
  return 0.5 * (r + r.transpose());
}

/// S~^{-1} = M22^{-1} + C^{-T} U [(I - Sigma)^{-1} - I] U^T C^{-1}, densely.
inline DenseMatrix dense_Stilde_inv(const DenseMatrix& c, const LowRankCorrection& lr, Index cap = default_cap) {
  const Index n2 = c.rows();
  check_cap(n2, cap, "dense_Stilde_inv");
  const Eigen::MatrixXd cinv = Eigen::MatrixXd(c).inverse();
  Eigen::MatrixXd mid = Eigen::MatrixXd::Identity(n2, n2);
  if (lr.ell > 0) {
    const Eigen::Map<const Eigen::MatrixXd> u(lr.u.data(), n2, lr.ell);
    Eigen::VectorXd d(lr.ell);
    for (Index i = 0; i < lr.ell; ++i) d[i] = 1.0 / (1.0 - lr.sigma[i]) - 1.0;
    mid += u * d.asDiagonal() * u.transpose();
  }
  DenseMatrix out = cinv.transpose() * mid * cinv;
  return 0.5 * (out + out.transpose());
}

/// Eigenvalues of S * P for SPD S and SPD P (ascending), computed from the
/// similar symmetric matrix W^T S W where P = W W^T.
inline std::vector<double> preconditioned_spectrum(const DenseMatrix& s, const DenseMatrix& p) {
  Eigen::LLT<Eigen::MatrixXd> llt{Eigen::MatrixXd(p)};
  if (llt.info() != Eigen::Success) throw SpectrumError("preconditioner is not positive definite");
  const Eigen::MatrixXd w = llt.matrixL();
  const Eigen::MatrixXd sym = w.transpose() * Eigen::MatrixXd(s) * w;
  return symmetric_eigenvalues(0.5 * (sym + sym.transpose()));
}

/// Sparse-Katz reranking computed from the dense Katz matrix: profile(x) is
/// row x of K restricted to columns {q} ∪ anchors. Candidates are given in
/// Katz order; the tie rule is the library's.
inline std::vector<ScoredNode> sparse_katz_rerank(const DenseMatrix& k, Index q, std::span<const Index> candidates,
                                                  std::span<const Index> anchors) {
  auto profile = [&](Index x) {
    Vector p;
    p.reserve(anchors.size() + 1);
    p.push_back(k(x, q));
    for (Index t : anchors) p.push_back(k(x, t));
    return p;
  };
  const Vector pq = profile(q);
  std::vector<double> corr;
  corr.reserve(candidates.size());
  for (Index x : candidates) corr.push_back(pearson(pq, profile(x)));
  return rerank_by_correlation(candidates, corr);
}

}  // namespace lrckatz::oracle
