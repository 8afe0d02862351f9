#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <span>
#include <tuple>
#include <vector>

#include "lrckatz/error.hpp"

namespace lrckatz {

using Vector = std::vector<double>;

inline double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

/// y += a * x
inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

inline void scale(double a, std::span<double> x) {
  for (double& v : x) v *= a;
}

/// Compressed sparse row matrix with sorted column indices per row.
struct CsrMatrix {
  Index rows = 0;
  Index cols = 0;
  std::vector<Index> offsets{0};
  std::vector<Index> indices;
  std::vector<double> values;

  CsrMatrix() = default;
  CsrMatrix(Index r, Index c) : rows(r), cols(c), offsets(static_cast<std::size_t>(r) + 1, 0) {}

  Index nnz() const { return static_cast<Index>(indices.size()); }

  /// Builds from (row, col, value) triplets; duplicates are summed.
  static CsrMatrix from_triplets(Index r, Index c, std::vector<std::tuple<Index, Index, double>> t) {
    std::sort(t.begin(), t.end(), [](const auto& a, const auto& b) {
      return std::tie(std::get<0>(a), std::get<1>(a)) < std::tie(std::get<0>(b), std::get<1>(b));
    });
    CsrMatrix m(r, c);
    for (std::size_t k = 0; k < t.size();) {
      auto [i, j, v] = t[k];
      if (i < 0 || i >= r || j < 0 || j >= c) throw DimensionError("triplet out of range");
      ++k;
      while (k < t.size() && std::get<0>(t[k]) == i && std::get<1>(t[k]) == j) v += std::get<2>(t[k++]);
      m.indices.push_back(j);
      m.values.push_back(v);
      ++m.offsets[static_cast<std::size_t>(i) + 1];
    }
    for (Index i = 0; i < r; ++i) m.offsets[i + 1] += m.offsets[i];
    return m;
  }

  /// Entry (i, j), zero when not stored.
  double at(Index i, Index j) const {
    auto first = indices.begin() + offsets[i];
    auto last = indices.begin() + offsets[i + 1];
    auto it = std::lower_bound(first, last, j);
    if (it == last || *it != j) return 0.0;
    return values[static_cast<std::size_t>(it - indices.begin())];
  }

  /// y = A x
  void multiply(std::span<const double> x, std::span<double> y) const {
    if (static_cast<Index>(x.size()) != cols || static_cast<Index>(y.size()) != rows)
      throw DimensionError("CsrMatrix::multiply size mismatch");
    for (Index i = 0; i < rows; ++i) {
      double s = 0.0;
      for (Index p = offsets[i]; p < offsets[i + 1]; ++p) s += values[p] * x[indices[p]];
      y[i] = s;
    }
  }

  Vector multiply(std::span<const double> x) const {
    Vector y(static_cast<std::size_t>(rows));
    multiply(x, y);
    return y;
  }

  /// y = A^T x
  void multiply_transpose(std::span<const double> x, std::span<double> y) const {
    if (static_cast<Index>(x.size()) != rows || static_cast<Index>(y.size()) != cols)
      throw DimensionError("CsrMatrix::multiply_transpose size mismatch");
    std::fill(y.begin(), y.end(), 0.0);
    for (Index i = 0; i < rows; ++i) {
      const double xi = x[i];
      if (xi == 0.0) continue;
      for (Index p = offsets[i]; p < offsets[i + 1]; ++p) y[indices[p]] += values[p] * xi;
    }
  }

  Vector multiply_transpose(std::span<const double> x) const {
    Vector y(static_cast<std::size_t>(cols));
    multiply_transpose(x, y);
    return y;
  }

  CsrMatrix transpose() const {
    CsrMatrix t(cols, rows);
    for (Index j : indices) ++t.offsets[j + 1];
    for (Index j = 0; j < cols; ++j) t.offsets[j + 1] += t.offsets[j];
    t.indices.resize(indices.size());
    t.values.resize(values.size());
    std::vector<Index> next(t.offsets.begin(), t.offsets.end() - 1);
    for (Index i = 0; i < rows; ++i) {
      for (Index p = offsets[i]; p < offsets[i + 1]; ++p) {
        const Index q = next[indices[p]]++;
        t.indices[q] = i;
        t.values[q] = values[p];
      }
    }
    return t;
  }

  friend bool operator==(const CsrMatrix&, const CsrMatrix&) = default;
};

}  // namespace lrckatz
