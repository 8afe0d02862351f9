#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <utility>
#include <vector>

#include "lrckatz/error.hpp"
#include "lrckatz/factor.hpp"
#include "lrckatz/index.hpp"
#include "lrckatz/rng.hpp"
#include "lrckatz/sparse.hpp"

namespace lrckatz {

struct SolveReport {
  Index iterations = 0;
  double final_residual_norm = 0.0;
  bool converged = false;
  double wall_seconds = 0.0;
};

inline void write_solve_report(std::ostream& out, const SolveReport& r) {
  auto old = out.precision(17);
  out << "iterations: " << r.iterations << '\n'
      << "final_residual_norm: " << r.final_residual_norm << '\n'
      << "converged: " << (r.converged ? "true" : "false") << '\n'
      << "wall_seconds: " << r.wall_seconds << '\n';
  out.precision(old);
}

/// Preconditioned conjugate gradients for SPD `apply_a`. Converged when
/// ||r_k|| <= tol * ||b||. An empty `precondition` means none. `x0`, when
/// given, replaces the zero initial guess.
inline std::pair<Vector, SolveReport> pcg(const LinearOperator& apply_a, const LinearOperator& precondition,
                                          std::span<const double> b, double tol, Index max_iter,
                                          std::span<const double> x0 = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = b.size();
  SolveReport rep;
  Vector x(n, 0.0), r(b.begin(), b.end());
  const double bnorm = norm2(b);
  const double target = tol * bnorm;
  Vector q(n);
  if (!x0.empty()) {
    if (x0.size() != n) throw DimensionError("pcg: initial guess length");
    x.assign(x0.begin(), x0.end());
    apply_a(x, q);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];
  }
  double rnorm = norm2(r);
  auto finish = [&]() {
    rep.final_residual_norm = rnorm;
    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return std::make_pair(std::move(x), rep);
  };
  if (rnorm <= target) {
    rep.converged = true;
    return finish();
  }
  Vector z(n);
  auto precond = [&](const Vector& in, Vector& out) {
    if (precondition) precondition(in, out);
    else out = in;
  };
  precond(r, z);
  Vector p = z;
  double rz = dot(r, z);
  while (rep.iterations < max_iter) {
    apply_a(p, q);
    const double pq = dot(p, q);
    if (!(pq > 0.0)) break;  // lost positive definiteness or exact stagnation
    const double step = rz / pq;
    axpy(step, p, x);
    axpy(-step, q, r);
    ++rep.iterations;
    rnorm = norm2(r);
    if (rnorm <= target) {
      rep.converged = true;
      break;
    }
    precond(r, z);
    const double rz_next = dot(r, z);
    const double beta = rz_next / rz;
    rz = rz_next;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  return finish();
}

/// Plain conjugate gradients, zero initial guess.
inline std::pair<Vector, SolveReport> cg(const LinearOperator& apply_a, std::span<const double> b, double tol,
                                         Index max_iter) {
  return pcg(apply_a, LinearOperator{}, b, tol, max_iter);
}

/// S v = M22 v - M12^T M11^{-1} M12 v, never formed.
inline void apply_schur(const KatzIndex& idx, std::span<const double> v, std::span<double> out) {
  idx.m22.multiply(v, out);
  Vector w = idx.m12.multiply(v);
  idx.m11_factor.solve_in_place(w);
  Vector t = idx.m12.multiply_transpose(w);
  axpy(-1.0, t, out);
}

/// f = g2 - M12^T M11^{-1} g1
inline Vector compute_f(const KatzIndex& idx, std::span<const double> g1, std::span<const double> g2) {
  if (static_cast<Index>(g1.size()) != idx.n1() || static_cast<Index>(g2.size()) != idx.n2())
    throw DimensionError("compute_f: right-hand side halves have the wrong length");
  Vector w(g1.begin(), g1.end());
  idx.m11_factor.solve_in_place(w);
  Vector f = idx.m12.multiply_transpose(w);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = g2[i] - f[i];
  return f;
}

/// PCG on S k2 = f with the low-rank corrected preconditioner.
inline std::pair<Vector, SolveReport> lrc_pcg(const KatzIndex& idx, std::span<const double> f, double tol,
                                              Index max_iter, std::span<const double> x0 = {}) {
  if (static_cast<Index>(f.size()) != idx.n2()) throw DimensionError("lrc_pcg: f has the wrong length");
  LinearOperator s = [&idx](std::span<const double> v, std::span<double> out) { apply_schur(idx, v, out); };
  LinearOperator pre = [&idx](std::span<const double> v, std::span<double> out) {
    apply_Stilde_inv(idx.m22_factor, idx.correction, v, out);
  };
  return pcg(s, pre, f, tol, max_iter, x0);
}

/// Unpreconditioned CG on the Schur system; the reference point for the
/// preconditioner's effect.
inline std::pair<Vector, SolveReport> schur_cg(const KatzIndex& idx, std::span<const double> f, double tol,
                                               Index max_iter) {
  LinearOperator s = [&idx](std::span<const double> v, std::span<double> out) { apply_schur(idx, v, out); };
  return cg(s, f, tol, max_iter);
}

/// Katz proximity of every node to `query`; scores[i] belongs to internal
/// node i (original id index.graph.original_id(i)).
struct KatzVector {
  std::vector<double> scores;
  Index query = -1;
  double alpha = 0.0;
};

struct QueryOptions {
  double tol = 1e-8;
  Index max_iter = 0;  // 0: 10 * n2 (at least 10)
  bool random_start = false;
  std::uint64_t seed = 1;
};

/// ||M k - alpha g_q|| with M = I - alpha G, in internal coordinates.
inline double katz_residual(const Graph& g, double alpha, Index q, std::span<const double> k) {
  double s = 0.0;
  for (Index u = 0; u < g.num_nodes(); ++u) {
    double mk = k[u];
    for (Index v : g.neighbors(u)) mk -= alpha * k[v];
    const double rhs = g.has_edge(q, u) ? alpha : 0.0;
    s += (mk - rhs) * (mk - rhs);
  }
  return std::sqrt(s);
}

/// Solves (I - alpha G) k = alpha g_q through the block elimination:
/// f from the M11 factors, k2 by low-rank preconditioned CG, then
/// k1 = M11^{-1}(g1 - M12 k2). `q` is an internal node id.
inline std::pair<KatzVector, SolveReport> query_internal(const KatzIndex& idx, Index q, const QueryOptions& opts = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  const Index n = idx.num_nodes();
  if (q < 0 || q >= n) throw UnknownNodeError("query node out of range", q);
  const Index n1 = idx.n1(), n2 = idx.n2();
  const auto& bp = idx.partition;

  Vector g1(static_cast<std::size_t>(n1), 0.0), g2(static_cast<std::size_t>(n2), 0.0);
  for (Index v : idx.graph.neighbors(q)) {
    const Index pos = bp.inv_perm[v];
    if (pos < n1) g1[pos] = idx.alpha;
    else g2[pos - n1] = idx.alpha;
  }
  const double bnorm = idx.alpha * std::sqrt(static_cast<double>(idx.graph.degree(q)));

  Vector f = compute_f(idx, g1, g2);
  const double fnorm = norm2(f);
  // the full-system residual equals the Schur residual; aim at tol*||b||
  // with headroom for the rounding of the M11 back-substitution
  const double schur_tol = fnorm > 0.0 ? 0.5 * opts.tol * bnorm / fnorm : opts.tol;
  const Index max_iter = opts.max_iter > 0 ? opts.max_iter : std::max<Index>(10, 10 * n2);
  Vector x0;
  if (opts.random_start && n2 > 0) {
    Rng rng(opts.seed);
    x0 = rng.normal_vector(static_cast<std::size_t>(n2));
    scale(1.0 / norm2(x0), x0);
  }
  auto [k2, rep] = lrc_pcg(idx, f, schur_tol, max_iter, x0);

  Vector k1 = idx.m12.multiply(k2);
  for (Index i = 0; i < n1; ++i) k1[i] = g1[i] - k1[i];
  idx.m11_factor.solve_in_place(k1);

  KatzVector kv;
  kv.query = q;
  kv.alpha = idx.alpha;
  kv.scores.resize(static_cast<std::size_t>(n));
  for (Index pos = 0; pos < n; ++pos) kv.scores[bp.perm[pos]] = pos < n1 ? k1[pos] : k2[pos - n1];

  rep.final_residual_norm = katz_residual(idx.graph, idx.alpha, q, kv.scores);
  rep.converged = rep.converged && rep.final_residual_norm <= opts.tol * bnorm;
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(kv), rep};
}

/// Same as query_internal, addressed by original node id.
inline std::pair<KatzVector, SolveReport> query(const KatzIndex& idx, std::int64_t original_id,
                                                const QueryOptions& opts = {}) {
  const Index q = idx.graph.internal_id(original_id);
  if (q < 0) throw UnknownNodeError("unknown node id " + std::to_string(original_id), original_id);
  return query_internal(idx, q, opts);
}

/// Baseline: plain CG on the full n x n system (I - alpha G) k = alpha g_q.
inline std::pair<KatzVector, SolveReport> full_cg_query(const Graph& g, double alpha, Index q, double tol = 1e-8,
                                                        Index max_iter = 0) {
  const Index n = g.num_nodes();
  if (q < 0 || q >= n) throw UnknownNodeError("query node out of range", q);
  Vector b(static_cast<std::size_t>(n), 0.0);
  for (Index v : g.neighbors(q)) b[v] = alpha;
  LinearOperator m = [&g, alpha](std::span<const double> x, std::span<double> out) {
    g.multiply(x, out);
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - alpha * out[i];
  };
  auto [x, rep] = cg(m, b, tol, max_iter > 0 ? max_iter : std::max<Index>(10, 10 * n));
  return {KatzVector{std::move(x), q, alpha}, rep};
}

}  // namespace lrckatz
