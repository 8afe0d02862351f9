#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "lrckatz/cholesky.hpp"
#include "lrckatz/error.hpp"
#include "lrckatz/factor.hpp"
#include "lrckatz/graph.hpp"
#include "lrckatz/partition.hpp"
#include "lrckatz/rng.hpp"
#include "lrckatz/sparse.hpp"

namespace lrckatz {

/// Offline artifact: everything a query needs, in permuted coordinates
/// except `graph`, which keeps the internal (LCC) numbering and the
/// internal -> original id map.
struct KatzIndex {
  static constexpr std::uint32_t format_version = 1;

  double alpha = 0.0;
  double spectral_norm = 0.0;
  std::uint64_t seed = 0;
  Graph graph;
  BlockPartition partition;
  CsrMatrix m12;
  CsrMatrix m22;
  BlockCholesky m11_factor;
  SparseCholesky m22_factor;
  LowRankCorrection correction;

  Index num_nodes() const { return graph.num_nodes(); }
  Index n1() const { return partition.n1; }
  Index n2() const { return partition.n2; }

  /// Dimensional consistency and the alpha gate.
  bool is_consistent() const {
    const Index n = graph.num_nodes();
    return partition.size() == n && m12.rows == n1() && m12.cols == n2() && m22.rows == n2() &&
           m22.cols == n2() && m11_factor.size() == n1() && m22_factor.size() == n2() &&
           (correction.ell == 0 || correction.rows == n2()) && alpha * spectral_norm < 1.0;
  }

  friend bool operator==(const KatzIndex&, const KatzIndex&) = default;
};

struct BuildOptions {
  std::optional<double> alpha;  // unset: hardest_alpha(||G||_2)
  Index ell = 25;
  std::optional<PartitionConfig> partition;  // unset: PartitionConfig::defaults_for(n)
  std::uint64_t seed = 42;
  double norm_tol = 1e-7;
  Index norm_max_iter = 10000;
  LanczosOptions lanczos{};
};

struct BuildStats {
  Index n = 0;
  Index edges = 0;
  Index n1 = 0;
  Index n2 = 0;
  Index parts = 0;
  Index max_part = 0;
  bool separator_exceeded = false;
  double alpha = 0.0;
  double spectral_norm = 0.0;
  Index m11_nnz = 0;
  Index m11_factor_nnz = 0;
  Index m22_nnz = 0;
  Index m22_factor_nnz = 0;
  Index ell_requested = 0;
  Index ell = 0;
  Index lanczos_steps = 0;
  Index lanczos_restarts = 0;
  bool lanczos_converged = true;
  double max_ritz_residual = 0.0;
  std::vector<double> sigma;
  double seconds_norm = 0.0;
  double seconds_partition = 0.0;
  double seconds_factor = 0.0;
  double seconds_lanczos = 0.0;
  double seconds_total = 0.0;

  /// Fill of the M11 and M22 factors beyond the lower triangles of the inputs.
  Index fill_in() const {
    const Index lower_m11 = (m11_nnz + n1) / 2;
    const Index lower_m22 = (m22_nnz + n2) / 2;
    return (m11_factor_nnz - lower_m11) + (m22_factor_nnz - lower_m22);
  }
};

inline void write_build_stats(std::ostream& out, const BuildStats& s) {
  auto old = out.precision(17);
  out << "n: " << s.n << '\n'
      << "edges: " << s.edges << '\n'
      << "alpha: " << s.alpha << '\n'
      << "spectral_norm: " << s.spectral_norm << '\n'
      << "n1: " << s.n1 << '\n'
      << "n2: " << s.n2 << '\n'
      << "parts: " << s.parts << '\n'
      << "max_part: " << s.max_part << '\n'
      << "separator_exceeded: " << (s.separator_exceeded ? "true" : "false") << '\n'
      << "m11_factor_nnz: " << s.m11_factor_nnz << '\n'
      << "m22_nnz: " << s.m22_nnz << '\n'
      << "m22_factor_nnz: " << s.m22_factor_nnz << '\n'
      << "fill_in: " << s.fill_in() << '\n'
      << "ell_requested: " << s.ell_requested << '\n'
      << "ell: " << s.ell << '\n'
      << "lanczos_steps: " << s.lanczos_steps << '\n'
      << "lanczos_restarts: " << s.lanczos_restarts << '\n'
      << "lanczos_converged: " << (s.lanczos_converged ? "true" : "false") << '\n'
      << "max_ritz_residual: " << s.max_ritz_residual << '\n'
      << "sigma:";
  for (double v : s.sigma) out << ' ' << v;
  out << '\n'
      << "seconds_norm: " << s.seconds_norm << '\n'
      << "seconds_partition: " << s.seconds_partition << '\n'
      << "seconds_factor: " << s.seconds_factor << '\n'
      << "seconds_lanczos: " << s.seconds_lanczos << '\n'
      << "seconds_total: " << s.seconds_total << '\n';
  out.precision(old);
}

namespace detail {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - start_).count();
    start_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace detail

/// Runs the preprocessing pipeline: norm estimate, separator partition, block
/// splitting, block Cholesky of M11, Cholesky of M22, Lanczos on R.
/// `ell` is clamped to n2.
inline KatzIndex build_index(const Graph& g, const BuildOptions& opts, BuildStats* stats = nullptr) {
  detail::Stopwatch total, watch;
  BuildStats st;
  const Index n = g.num_nodes();
  if (n == 0) throw DimensionError("cannot index an empty graph");
  if (opts.ell < 0) throw DimensionError("ell must be nonnegative");

  KatzIndex idx;
  idx.seed = opts.seed;
  idx.graph = g;
  idx.spectral_norm = g.num_edges() > 0 ? spectral_norm(g, opts.norm_tol, opts.norm_max_iter) : 0.0;
  if (opts.alpha) {
    idx.alpha = KatzParams::checked(*opts.alpha, idx.spectral_norm).alpha;
  } else {
    if (idx.spectral_norm <= 0.0) throw AlphaError("graph has no edges; no hardest alpha exists");
    idx.alpha = hardest_alpha(idx.spectral_norm);
  }
  st.seconds_norm = watch.lap();

  const PartitionConfig cfg = opts.partition.value_or(PartitionConfig::defaults_for(n));
  idx.partition = partition_vertex_separator(g, cfg);
  auto blocks = build_blocks(g, idx.alpha, idx.partition, idx.spectral_norm);
  st.seconds_partition = watch.lap();

  idx.m11_factor = BlockCholesky::factorize(blocks.m11, idx.partition.part_boundaries);
  idx.m22_factor = SparseCholesky::factorize(blocks.m22);
  idx.m12 = std::move(blocks.m12);
  idx.m22 = std::move(blocks.m22);
  st.seconds_factor = watch.lap();

  const Index n2 = idx.n2();
  const Index ell = std::min(opts.ell, n2);
  LanczosResult lz;
  if (ell > 0) {
    Rng rng(opts.seed);
    Vector start = rng.normal_vector(static_cast<std::size_t>(n2));
    LanczosOptions lopts = opts.lanczos;
    lopts.restart_seed = opts.seed ^ 0x9e3779b97f4a7c15ULL;
    LinearOperator apply = [&idx](std::span<const double> v, std::span<double> out) {
      auto r = apply_R(idx.m22_factor, idx.m12, idx.m11_factor, v);
      std::copy(r.begin(), r.end(), out.begin());
    };
    lz = lanczos_topk(apply, n2, ell, start, lopts);
    for (double s : lz.correction.sigma)
      if (!(s < 1.0)) throw SpectrumError("eigenvalue of R reached 1; alpha is inadmissible for this graph");
    idx.correction = std::move(lz.correction);
  } else {
    idx.correction.rows = n2;
    lz.converged = true;
  }
  st.seconds_lanczos = watch.lap();

  st.n = n;
  st.edges = g.num_edges();
  st.n1 = idx.n1();
  st.n2 = n2;
  st.parts = idx.partition.num_parts();
  for (Index p = 0; p < st.parts; ++p)
    st.max_part = std::max(st.max_part, idx.partition.part_boundaries[p + 1] - idx.partition.part_boundaries[p]);
  st.separator_exceeded = idx.partition.separator_exceeded;
  st.alpha = idx.alpha;
  st.spectral_norm = idx.spectral_norm;
  st.m11_nnz = blocks.m11.nnz();
  st.m11_factor_nnz = idx.m11_factor.factor_nnz();
  st.m22_nnz = idx.m22.nnz();
  st.m22_factor_nnz = idx.m22_factor.factor().nnz();
  st.ell_requested = opts.ell;
  st.ell = idx.correction.ell;
  st.lanczos_steps = lz.steps;
  st.lanczos_restarts = lz.restarts;
  st.lanczos_converged = lz.converged;
  for (double r : lz.residuals) st.max_ritz_residual = std::max(st.max_ritz_residual, r);
  st.sigma = idx.correction.sigma;
  st.seconds_total = total.lap();
  if (stats) *stats = std::move(st);
  return idx;
}

}  // namespace lrckatz
