#pragma once

#include <algorithm>
#include <cmath>
#include <tuple>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/OrderingMethods>
#include <Eigen/SparseCore>

#include "lrckatz/error.hpp"
#include "lrckatz/sparse.hpp"

namespace lrckatz {

enum class Ordering { natural, amd };

/// Lower-triangular factor in compressed column form; the diagonal entry is
/// the first stored entry of each column.
struct LowerCsc {
  Index n = 0;
  std::vector<Index> col_ptr{0};
  std::vector<Index> row_idx;
  std::vector<double> values;

  Index nnz() const { return static_cast<Index>(row_idx.size()); }

  /// Solves L x = b in place.
  void solve(std::span<double> x) const {
    for (Index j = 0; j < n; ++j) {
      x[j] /= values[col_ptr[j]];
      const double xj = x[j];
      for (Index p = col_ptr[j] + 1; p < col_ptr[j + 1]; ++p) x[row_idx[p]] -= values[p] * xj;
    }
  }

  /// Solves L^T x = b in place.
  void solve_transpose(std::span<double> x) const {
    for (Index j = n - 1; j >= 0; --j) {
      double s = x[j];
      for (Index p = col_ptr[j] + 1; p < col_ptr[j + 1]; ++p) s -= values[p] * x[row_idx[p]];
      x[j] = s / values[col_ptr[j]];
    }
  }

  double at(Index i, Index j) const {
    for (Index p = col_ptr[j]; p < col_ptr[j + 1]; ++p)
      if (row_idx[p] == i) return values[p];
    return 0.0;
  }

  friend bool operator==(const LowerCsc&, const LowerCsc&) = default;
};

/// Fill-reducing ordering of a symmetric matrix: order[k] is the row
/// eliminated k-th.
inline std::vector<Index> fill_reducing_order(const CsrMatrix& a, Ordering ordering) {
  std::vector<Index> order(static_cast<std::size_t>(a.rows));
  std::iota(order.begin(), order.end(), Index{0});
  if (ordering == Ordering::natural || a.rows <= 1) return order;
  using SpMat = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
  std::vector<Eigen::Triplet<double, int>> trips;
  trips.reserve(static_cast<std::size_t>(a.nnz()));
  for (Index i = 0; i < a.rows; ++i)
    for (Index p = a.offsets[i]; p < a.offsets[i + 1]; ++p)
      trips.emplace_back(static_cast<int>(i), static_cast<int>(a.indices[p]), 1.0);
  SpMat m(static_cast<int>(a.rows), static_cast<int>(a.cols));
  m.setFromTriplets(trips.begin(), trips.end());
  Eigen::AMDOrdering<int>::PermutationType perm;
  Eigen::AMDOrdering<int> amd;
  amd(m, perm);
  for (Index k = 0; k < a.rows; ++k) order[k] = perm.indices()[static_cast<int>(k)];
  return order;
}

/// Sparse Cholesky P A P^T = L L^T (up-looking, row patterns from the
/// elimination tree). Exposes both A^{-1} and the factor C = P^T L with
/// A = C C^T.
class SparseCholesky {
 public:
  SparseCholesky() = default;

  /// `block` only labels the pivot error.
  static SparseCholesky factorize(const CsrMatrix& a, Ordering ordering = Ordering::amd, Index block = -1) {
    if (a.rows != a.cols) throw DimensionError("Cholesky of a non-square matrix");
    return factorize(a, fill_reducing_order(a, ordering), block);
  }

  static SparseCholesky factorize(const CsrMatrix& a, std::vector<Index> order, Index block) {
    const Index n = a.rows;
    SparseCholesky f;
    f.order_ = std::move(order);
    std::vector<Index> pinv(static_cast<std::size_t>(n));
    for (Index k = 0; k < n; ++k) pinv[f.order_[k]] = k;

    // Upper triangle of the permuted matrix, by column (column k lists rows i <= k).
    CsrMatrix c(n, n);
    {
      std::vector<std::tuple<Index, Index, double>> t;
      t.reserve(static_cast<std::size_t>(a.nnz()));
      for (Index i = 0; i < n; ++i)
        for (Index p = a.offsets[i]; p < a.offsets[i + 1]; ++p) {
          const Index pi = pinv[i], pj = pinv[a.indices[p]];
          if (pi <= pj) t.emplace_back(pj, pi, a.values[p]);
        }
      c = CsrMatrix::from_triplets(n, n, std::move(t));
    }

    // elimination tree
    std::vector<Index> parent(static_cast<std::size_t>(n), -1), ancestor(static_cast<std::size_t>(n), -1);
    for (Index k = 0; k < n; ++k)
      for (Index p = c.offsets[k]; p < c.offsets[k + 1]; ++p) {
        Index i = c.indices[p];
        while (i != -1 && i < k) {
          const Index next = ancestor[i];
          ancestor[i] = k;
          if (next == -1) parent[i] = k;
          i = next;
        }
      }

    std::vector<Index> mark(static_cast<std::size_t>(n), -1), stack(static_cast<std::size_t>(n));
    auto row_pattern = [&](Index k) {
      // nodes of row k of L, in topological order at stack[top..n)
      Index top = n;
      mark[k] = k;
      for (Index p = c.offsets[k]; p < c.offsets[k + 1]; ++p) {
        Index i = c.indices[p];
        if (i > k) continue;
        Index len = 0;
        for (; mark[i] != k; i = parent[i]) {
          stack[len++] = i;
          mark[i] = k;
        }
        while (len > 0) stack[--top] = stack[--len];
      }
      return top;
    };

    // column counts
    std::vector<Index> count(static_cast<std::size_t>(n), 1);
    for (Index k = 0; k < n; ++k)
      for (Index t = row_pattern(k); t < n; ++t) ++count[stack[t]];
    std::fill(mark.begin(), mark.end(), -1);

    LowerCsc& l = f.factor_;
    l.n = n;
    l.col_ptr.assign(static_cast<std::size_t>(n) + 1, 0);
    for (Index j = 0; j < n; ++j) l.col_ptr[j + 1] = l.col_ptr[j] + count[j];
    l.row_idx.assign(static_cast<std::size_t>(l.col_ptr[n]), 0);
    l.values.assign(l.row_idx.size(), 0.0);
    std::vector<Index> next(l.col_ptr.begin(), l.col_ptr.end() - 1);
    std::vector<double> x(static_cast<std::size_t>(n), 0.0);

    for (Index k = 0; k < n; ++k) {
      const Index top = row_pattern(k);
      x[k] = 0.0;
      for (Index p = c.offsets[k]; p < c.offsets[k + 1]; ++p)
        if (c.indices[p] <= k) x[c.indices[p]] = c.values[p];
      double d = x[k];
      x[k] = 0.0;
      for (Index t = top; t < n; ++t) {
        const Index i = stack[t];
        const double lki = x[i] / l.values[l.col_ptr[i]];
        x[i] = 0.0;
        for (Index p = l.col_ptr[i] + 1; p < next[i]; ++p) x[l.row_idx[p]] -= l.values[p] * lki;
        d -= lki * lki;
        const Index q = next[i]++;
        l.row_idx[q] = k;
        l.values[q] = lki;
      }
      if (!(d > 0.0)) {
        std::string where = block >= 0 ? " in block " + std::to_string(block) : std::string{};
        throw NonPositivePivotError("nonpositive pivot " + std::to_string(d) + " at row " + std::to_string(k) + where,
                                    block, d);
      }
      const Index q = next[k]++;
      l.row_idx[q] = k;
      l.values[q] = std::sqrt(d);
    }
    return f;
  }

  /// Adopts stored pieces (index loading).
  static SparseCholesky from_parts(std::vector<Index> order, LowerCsc factor) {
    SparseCholesky f;
    f.order_ = std::move(order);
    f.factor_ = std::move(factor);
    if (static_cast<Index>(f.order_.size()) != f.factor_.n) throw DimensionError("ordering and factor differ in size");
    return f;
  }

  Index size() const { return factor_.n; }
  const std::vector<Index>& order() const { return order_; }
  const LowerCsc& factor() const { return factor_; }

  /// x <- A^{-1} x. `work` needs size() entries; the overloads without it allocate.
  void solve_in_place(std::span<double> x, std::span<double> work) const {
    apply_inverse_factor(x, work);
    apply_inverse_factor_transpose(x, work);
  }

  /// x <- C^{-1} x  (C = P^T L)
  void apply_inverse_factor(std::span<double> x, std::span<double> work) const {
    const Index n = size();
    for (Index k = 0; k < n; ++k) work[k] = x[order_[k]];
    factor_.solve(work.first(static_cast<std::size_t>(n)));
    std::copy_n(work.begin(), n, x.begin());
  }

  /// x <- C^{-T} x
  void apply_inverse_factor_transpose(std::span<double> x, std::span<double> work) const {
    const Index n = size();
    std::copy_n(x.begin(), n, work.begin());
    factor_.solve_transpose(work.first(static_cast<std::size_t>(n)));
    for (Index k = 0; k < n; ++k) x[order_[k]] = work[k];
  }

  void solve_in_place(std::span<double> x) const {
    Vector work(static_cast<std::size_t>(size()));
    solve_in_place(x, work);
  }
  void apply_inverse_factor(std::span<double> x) const {
    Vector work(static_cast<std::size_t>(size()));
    apply_inverse_factor(x, work);
  }
  void apply_inverse_factor_transpose(std::span<double> x) const {
    Vector work(static_cast<std::size_t>(size()));
    apply_inverse_factor_transpose(x, work);
  }

  friend bool operator==(const SparseCholesky& a, const SparseCholesky& b) {
    return a.order_ == b.order_ && a.factor_ == b.factor_;
  }

 private:
  std::vector<Index> order_;
  LowerCsc factor_;
};

}  // namespace lrckatz
