#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "lrckatz/cholesky.hpp"
#include "lrckatz/error.hpp"
#include "lrckatz/rng.hpp"
#include "lrckatz/sparse.hpp"

namespace lrckatz {

/// Independent sparse Cholesky factors of the diagonal blocks of M11.
class BlockCholesky {
 public:
  BlockCholesky() = default;

  static BlockCholesky factorize(const CsrMatrix& m11, std::span<const Index> boundaries,
                                 Ordering ordering = Ordering::amd) {
    if (m11.rows != m11.cols) throw DimensionError("M11 must be square");
    if (boundaries.empty() || boundaries.front() != 0 || boundaries.back() != m11.rows)
      throw DimensionError("block boundaries must span M11");
    BlockCholesky bc;
    bc.boundaries_.assign(boundaries.begin(), boundaries.end());
    for (std::size_t b = 0; b + 1 < boundaries.size(); ++b) {
      const Index lo = boundaries[b], hi = boundaries[b + 1];
      CsrMatrix block(hi - lo, hi - lo);
      for (Index i = lo; i < hi; ++i) {
        for (Index p = m11.offsets[i]; p < m11.offsets[i + 1]; ++p) {
          const Index j = m11.indices[p];
          if (j < lo || j >= hi) throw DimensionError("M11 has an entry outside its diagonal blocks");
          block.indices.push_back(j - lo);
          block.values.push_back(m11.values[p]);
        }
        block.offsets[i - lo + 1] = block.nnz();
      }
      bc.blocks_.push_back(SparseCholesky::factorize(block, ordering, static_cast<Index>(b)));
      bc.max_block_ = std::max(bc.max_block_, hi - lo);
    }
    return bc;
  }

  static BlockCholesky from_parts(std::vector<Index> boundaries, std::vector<SparseCholesky> blocks) {
    if (boundaries.size() != blocks.size() + 1) throw DimensionError("block count mismatch");
    BlockCholesky bc;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      if (boundaries[b + 1] - boundaries[b] != blocks[b].size()) throw DimensionError("block size mismatch");
      bc.max_block_ = std::max(bc.max_block_, blocks[b].size());
    }
    bc.boundaries_ = std::move(boundaries);
    bc.blocks_ = std::move(blocks);
    return bc;
  }

  Index size() const { return boundaries_.empty() ? 0 : boundaries_.back(); }
  Index max_block_size() const { return max_block_; }
  const std::vector<Index>& boundaries() const { return boundaries_; }
  const std::vector<SparseCholesky>& blocks() const { return blocks_; }

  Index factor_nnz() const {
    Index s = 0;
    for (const auto& b : blocks_) s += b.factor().nnz();
    return s;
  }

  /// x <- M11^{-1} x, two triangular solves per block.
  void solve_in_place(std::span<double> x) const {
    if (static_cast<Index>(x.size()) != size()) throw DimensionError("solve_M11: expected length " + std::to_string(size()));
    Vector work(static_cast<std::size_t>(max_block_));
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      const Index lo = boundaries_[b];
      blocks_[b].solve_in_place(x.subspan(static_cast<std::size_t>(lo), static_cast<std::size_t>(blocks_[b].size())),
                                work);
    }
  }

  friend bool operator==(const BlockCholesky& a, const BlockCholesky& b) {
    return a.boundaries_ == b.boundaries_ && a.blocks_ == b.blocks_;
  }

 private:
  std::vector<Index> boundaries_{0};
  std::vector<SparseCholesky> blocks_;
  Index max_block_ = 0;
};

inline BlockCholesky block_cholesky(const CsrMatrix& m11, std::span<const Index> boundaries) {
  return BlockCholesky::factorize(m11, boundaries);
}

inline Vector solve_M11(const BlockCholesky& bc, std::span<const double> x) {
  Vector y(x.begin(), x.end());
  bc.solve_in_place(y);
  return y;
}

/// R v = C^{-1} M12^T M11^{-1} M12 C^{-T} v, where M22 = C C^T. R is never formed.
inline Vector apply_R(const SparseCholesky& m22_factor, const CsrMatrix& m12, const BlockCholesky& bc,
                      std::span<const double> v) {
  const Index n2 = m22_factor.size();
  if (static_cast<Index>(v.size()) != n2 || m12.cols != n2 || m12.rows != bc.size())
    throw DimensionError("apply_R size mismatch");
  Vector y(v.begin(), v.end());
  m22_factor.apply_inverse_factor_transpose(y);
  Vector w = m12.multiply(y);
  bc.solve_in_place(w);
  Vector z = m12.multiply_transpose(w);
  m22_factor.apply_inverse_factor(z);
  return z;
}

/// Top eigenpairs of R: U (n2 x ell, column-major, orthonormal columns) and
/// sigma sorted descending.
struct LowRankCorrection {
  Index rows = 0;
  Index ell = 0;
  std::vector<double> sigma;
  std::vector<double> u;

  std::span<const double> column(Index i) const {
    return {u.data() + i * rows, static_cast<std::size_t>(rows)};
  }

  friend bool operator==(const LowRankCorrection&, const LowRankCorrection&) = default;
};

struct LanczosResult {
  LowRankCorrection correction;
  Index requested_ell = 0;
  Index steps = 0;
  Index restarts = 0;
  bool converged = false;
  std::vector<double> residuals;  // ||R u_i - sigma_i u_i|| per returned pair
};

using LinearOperator = std::function<void(std::span<const double>, std::span<double>)>;

struct LanczosOptions {
  Index max_iter = 0;  // 0: up to the operator dimension
  double tol = 1e-10;
  std::uint64_t restart_seed = 0x5eed;
};

/// Lanczos with full reorthogonalization for the top-`ell` eigenpairs of a
/// symmetric operator of dimension `n`. On breakdown the process restarts
/// from a random vector orthogonal to the basis built so far, so repeated
/// eigenvalues are still found. Stops once every requested Ritz residual is
/// below `tol` or after max_iter steps; with max_iter >= n the Krylov basis
/// can span the whole space and the pairs are exact up to rounding.
inline LanczosResult lanczos_topk(const LinearOperator& apply, Index n, Index ell, std::span<const double> start,
                                  const LanczosOptions& opts = {}) {
  LanczosResult res;
  res.requested_ell = ell;
  res.correction.rows = n;
  if (ell < 0 || ell > n) throw DimensionError("lanczos_topk: need 0 <= ell <= n");
  if (static_cast<Index>(start.size()) != n) throw DimensionError("lanczos_topk: start vector length");
  if (ell == 0 || n == 0) {
    res.converged = true;
    return res;
  }
  const Index cap = std::min(n, opts.max_iter > 0 ? opts.max_iter : n);
  // first convergence check after the default Krylov size, then every few steps
  const Index first_check = std::min(cap, std::max(3 * ell, ell + 20));
  Rng rng(opts.restart_seed);

  std::vector<Vector> basis;
  std::vector<double> diag, offdiag;  // offdiag[j] couples steps j and j+1
  Vector v(start.begin(), start.end());
  double nv = norm2(v);
  if (!(nv > 0.0)) throw DimensionError("lanczos_topk: start vector is zero");
  scale(1.0 / nv, v);

  Vector w(static_cast<std::size_t>(n));
  double beta = 0.0;
  double scale_est = 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
  auto orthogonalize = [&](Vector& x) {
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : basis) axpy(-dot(x, b), b, x);
  };

  bool done = false;
  while (!done) {
    basis.push_back(v);
    apply(v, w);
    const double a = dot(w, v);
    axpy(-a, v, w);
    if (basis.size() >= 2 && beta != 0.0) axpy(-beta, basis[basis.size() - 2], w);
    orthogonalize(w);
    beta = norm2(w);
    diag.push_back(a);
    scale_est = std::max(scale_est, std::abs(a) + beta);
    const Index j = static_cast<Index>(basis.size());
    const bool breakdown = beta <= 1e-12 * std::max(scale_est, 1e-300) || beta == 0.0;

    const bool at_cap = j >= cap;
    if (j >= ell && (at_cap || (j >= first_check && ((j - first_check) % 5 == 0 || breakdown)))) {
      Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(diag.data(), j);
      Eigen::VectorXd e(j > 1 ? j - 1 : 0);
      for (Index k = 0; k + 1 < j; ++k) e[k] = offdiag[k];
      tri.computeFromTridiagonal(d, e, Eigen::ComputeEigenvectors);
      const double last_beta = breakdown ? 0.0 : beta;
      bool ok = true;
      for (Index i = 0; i < ell; ++i) {
        const Index col = j - 1 - i;
        if (std::abs(last_beta * tri.eigenvectors()(j - 1, col)) > opts.tol) ok = false;
      }
      if (ok || at_cap) {
        res.converged = ok;
        done = true;
        break;
      }
    }
    if (at_cap) break;

    if (breakdown) {
      // restart in the orthogonal complement of the current basis
      Vector r;
      double nr = 0.0;
      for (int attempt = 0; attempt < 8 && !(nr > 1e-8); ++attempt) {
        r = rng.normal_vector(static_cast<std::size_t>(n));
        orthogonalize(r);
        nr = norm2(r);
      }
      if (!(nr > 1e-8)) break;
      scale(1.0 / nr, r);
      v = std::move(r);
      offdiag.push_back(0.0);
      beta = 0.0;
      ++res.restarts;
    } else {
      v = w;
      scale(1.0 / beta, v);
      offdiag.push_back(beta);
    }
  }

  const Index m = static_cast<Index>(basis.size());
  if (!done) {
    Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(diag.data(), m);
    Eigen::VectorXd e(m > 1 ? m - 1 : 0);
    for (Index k = 0; k + 1 < m; ++k) e[k] = offdiag[k];
    tri.computeFromTridiagonal(d, e, Eigen::ComputeEigenvectors);
  }
  res.steps = m;
  const Index got = std::min(ell, m);
  auto& lr = res.correction;
  lr.ell = got;
  lr.sigma.resize(static_cast<std::size_t>(got));
  lr.u.assign(static_cast<std::size_t>(n * got), 0.0);
  for (Index i = 0; i < got; ++i) {
    const Index col = m - 1 - i;
    double s = tri.eigenvalues()[col];
    if (s < 0.0 && s > -1e-10) s = 0.0;  // R is positive semidefinite
    lr.sigma[i] = s;
    double* out = lr.u.data() + i * n;
    for (Index k = 0; k < m; ++k) {
      const double c = tri.eigenvectors()(k, col);
      for (Index r = 0; r < n; ++r) out[r] += c * basis[k][r];
    }
  }
  // exact residuals, one operator application per pair
  res.residuals.resize(static_cast<std::size_t>(got));
  Vector ru(static_cast<std::size_t>(n));
  for (Index i = 0; i < got; ++i) {
    auto ui = lr.column(i);
    apply(ui, ru);
    axpy(-lr.sigma[i], ui, ru);
    res.residuals[i] = norm2(ru);
  }
  return res;
}

/// S~^{-1} r = M22^{-1} r + C^{-T} U [(I - Sigma)^{-1} - I] U^T C^{-1} r,
/// evaluated as C^{-T} (t + U c) with t = C^{-1} r.
inline void apply_Stilde_inv(const SparseCholesky& m22_factor, const LowRankCorrection& lr, std::span<const double> r,
                             std::span<double> out) {
  const Index n2 = m22_factor.size();
  if (static_cast<Index>(r.size()) != n2 || static_cast<Index>(out.size()) != n2 || (lr.ell > 0 && lr.rows != n2))
    throw DimensionError("apply_Stilde_inv size mismatch");
  std::copy(r.begin(), r.end(), out.begin());
  m22_factor.apply_inverse_factor(out);
  if (lr.ell > 0) {
    std::vector<double> c(static_cast<std::size_t>(lr.ell));
    for (Index i = 0; i < lr.ell; ++i) {
      const double s = lr.sigma[i];
      if (!(s < 1.0)) throw SpectrumError("Ritz value " + std::to_string(s) + " >= 1; alpha gate or Lanczos failed");
      c[i] = dot(lr.column(i), out) * (1.0 / (1.0 - s) - 1.0);
    }
    for (Index i = 0; i < lr.ell; ++i) axpy(c[i], lr.column(i), out);
  }
  m22_factor.apply_inverse_factor_transpose(out);
}

inline Vector apply_Stilde_inv(const SparseCholesky& m22_factor, const LowRankCorrection& lr,
                               std::span<const double> r) {
  Vector out(r.size());
  apply_Stilde_inv(m22_factor, lr, r, out);
  return out;
}

}  // namespace lrckatz
