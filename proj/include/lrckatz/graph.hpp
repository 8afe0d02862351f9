#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <queue>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lrckatz/error.hpp"
#include "lrckatz/sparse.hpp"

namespace lrckatz {

using Edge = std::pair<Index, Index>;

/// Undirected, unweighted graph in CSR form. Every edge is stored in both
/// directions, rows are sorted, and there are no self-loops or duplicates.
/// Nodes are 0..n-1; `original_id(u)` recovers the identifier from the input.
class Graph {
 public:
  Graph() = default;

  /// Dedups edges and drops self-loops. Endpoints must lie in [0, n).
  static Graph from_edges(Index n, std::span<const Edge> edges, std::vector<std::int64_t> original_ids = {}) {
    if (n < 0) throw DimensionError("negative node count");
    std::vector<Edge> both;
    both.reserve(edges.size() * 2);
    for (auto [u, v] : edges) {
      if (u < 0 || v < 0 || u >= n || v >= n) throw DimensionError("edge endpoint out of range");
      if (u == v) continue;
      both.emplace_back(u, v);
      both.emplace_back(v, u);
    }
    std::sort(both.begin(), both.end());
    both.erase(std::unique(both.begin(), both.end()), both.end());

    Graph g;
    g.offsets_.assign(static_cast<std::size_t>(n) + 1, 0);
    g.cols_.reserve(both.size());
    for (auto [u, v] : both) {
      ++g.offsets_[u + 1];
      g.cols_.push_back(v);
    }
    for (Index i = 0; i < n; ++i) g.offsets_[i + 1] += g.offsets_[i];
    if (original_ids.empty()) {
      original_ids.resize(static_cast<std::size_t>(n));
      std::iota(original_ids.begin(), original_ids.end(), std::int64_t{0});
    } else if (static_cast<Index>(original_ids.size()) != n) {
      throw DimensionError("id map length differs from node count");
    }
    g.original_ids_ = std::move(original_ids);
    g.refresh_sorted_flag();
    return g;
  }

  /// Adopts CSR arrays as-is after validating every invariant.
  static Graph from_csr(std::vector<Index> offsets, std::vector<Index> cols, std::vector<std::int64_t> original_ids) {
    Graph g;
    g.offsets_ = std::move(offsets);
    g.cols_ = std::move(cols);
    g.original_ids_ = std::move(original_ids);
    if (!g.is_valid()) throw DimensionError("CSR arrays violate graph invariants");
    g.refresh_sorted_flag();
    return g;
  }

  Index num_nodes() const { return offsets_.empty() ? 0 : static_cast<Index>(offsets_.size()) - 1; }
  Index num_edges() const { return static_cast<Index>(cols_.size()) / 2; }
  Index degree(Index u) const { return offsets_[u + 1] - offsets_[u]; }

  std::span<const Index> neighbors(Index u) const {
    return {cols_.data() + offsets_[u], static_cast<std::size_t>(degree(u))};
  }

  bool has_edge(Index u, Index v) const {
    auto nb = neighbors(u);
    return std::binary_search(nb.begin(), nb.end(), v);
  }

  const std::vector<Index>& row_offsets() const { return offsets_; }
  const std::vector<Index>& col_indices() const { return cols_; }
  const std::vector<std::int64_t>& original_ids() const { return original_ids_; }
  std::int64_t original_id(Index u) const { return original_ids_[u]; }

  /// Internal id for an original identifier, or -1.
  Index internal_id(std::int64_t original) const {
    if (sorted_ids_) {
      auto it = std::lower_bound(original_ids_.begin(), original_ids_.end(), original);
      if (it != original_ids_.end() && *it == original) return it - original_ids_.begin();
      return -1;
    }
    auto it = std::find(original_ids_.begin(), original_ids_.end(), original);
    return it == original_ids_.end() ? -1 : it - original_ids_.begin();
  }

  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    out.reserve(cols_.size() / 2);
    for (Index u = 0; u < num_nodes(); ++u)
      for (Index v : neighbors(u))
        if (u < v) out.emplace_back(u, v);
    return out;
  }

  /// y = G x
  void multiply(std::span<const double> x, std::span<double> y) const {
    for (Index u = 0; u < num_nodes(); ++u) {
      double s = 0.0;
      for (Index v : neighbors(u)) s += x[v];
      y[u] = s;
    }
  }

  /// Checks sortedness, symmetry, absence of loops and duplicates.
  bool is_valid() const {
    const Index n = num_nodes();
    if (offsets_.empty() || offsets_[0] != 0) return false;
    if (static_cast<Index>(original_ids_.size()) != n) return false;
    if (offsets_.back() != static_cast<Index>(cols_.size()) || cols_.size() % 2 != 0) return false;
    for (Index u = 0; u < n; ++u) {
      if (offsets_[u + 1] < offsets_[u]) return false;
      auto nb = neighbors(u);
      for (std::size_t k = 0; k < nb.size(); ++k) {
        if (nb[k] < 0 || nb[k] >= n || nb[k] == u) return false;
        if (k > 0 && nb[k] <= nb[k - 1]) return false;
        if (!has_edge(nb[k], u)) return false;
      }
    }
    return true;
  }

  /// Subgraph induced by `nodes` (sorted, unique), relabeled in that order.
  Graph induced_subgraph(std::span<const Index> nodes) const {
    std::vector<Index> local(static_cast<std::size_t>(num_nodes()), -1);
    for (std::size_t k = 0; k < nodes.size(); ++k) local[nodes[k]] = static_cast<Index>(k);
    Graph g;
    g.offsets_.assign(nodes.size() + 1, 0);
    g.original_ids_.reserve(nodes.size());
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      for (Index v : neighbors(nodes[k]))
        if (local[v] >= 0) g.cols_.push_back(local[v]);
      g.offsets_[k + 1] = static_cast<Index>(g.cols_.size());
      g.original_ids_.push_back(original_ids_[nodes[k]]);
    }
    g.sorted_ids_ = sorted_ids_;
    return g;
  }

  friend bool operator==(const Graph& a, const Graph& b) {
    return a.offsets_ == b.offsets_ && a.cols_ == b.cols_ && a.original_ids_ == b.original_ids_;
  }

 private:
  void refresh_sorted_flag() { sorted_ids_ = std::is_sorted(original_ids_.begin(), original_ids_.end()); }

  std::vector<Index> offsets_{0};
  std::vector<Index> cols_;
  std::vector<std::int64_t> original_ids_;
  bool sorted_ids_ = true;
};

enum class EdgeListFormat { whitespace, csv, automatic };

namespace detail {

inline std::vector<std::string> split_tokens(const std::string& line, EdgeListFormat format) {
  std::vector<std::string> tokens;
  std::string cur;
  auto is_sep = [format](char c) {
    const bool ws = c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' || c == '\f';
    switch (format) {
      case EdgeListFormat::whitespace: return ws;
      case EdgeListFormat::csv: return c == ',';
      case EdgeListFormat::automatic: return ws || c == ',';
    }
    return ws;
  };
  for (char c : line) {
    if (is_sep(c)) {
      if (format == EdgeListFormat::csv) {
        tokens.push_back(cur);
        cur.clear();
      } else if (!cur.empty()) {
        tokens.push_back(cur);
        cur.clear();
      }
    } else {
      cur.push_back(c);
    }
  }
  if (format == EdgeListFormat::csv) {
    tokens.push_back(cur);
    for (auto& t : tokens) {
      auto b = t.find_first_not_of(" \t\r");
      auto e = t.find_last_not_of(" \t\r");
      t = b == std::string::npos ? std::string{} : t.substr(b, e - b + 1);
    }
  } else if (!cur.empty()) {
    tokens.push_back(cur);
  }
  return tokens;
}

inline std::int64_t parse_id(const std::string& token, std::size_t line) {
  if (token.empty()) throw ParseError("empty node identifier", line);
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(token, &pos);
  } catch (const std::exception&) {
    throw ParseError("invalid node identifier '" + token + "'", line);
  }
  if (pos != token.size()) throw ParseError("invalid node identifier '" + token + "'", line);
  return v;
}

inline bool is_blank_or_comment(const std::string& line) {
  auto b = line.find_first_not_of(" \t\r");
  return b == std::string::npos || line[b] == '#';
}

}  // namespace detail

/// Builds a graph from pairs of original ids; ids are compacted to 0..n-1 in
/// ascending order of original id.
inline Graph graph_from_id_pairs(std::span<const std::pair<std::int64_t, std::int64_t>> raw) {
  std::vector<std::int64_t> ids;
  ids.reserve(raw.size() * 2);
  for (auto [a, b] : raw) {
    ids.push_back(a);
    ids.push_back(b);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  auto lookup = [&](std::int64_t id) {
    return static_cast<Index>(std::lower_bound(ids.begin(), ids.end(), id) - ids.begin());
  };
  std::vector<Edge> edges;
  edges.reserve(raw.size());
  for (auto [a, b] : raw) edges.emplace_back(lookup(a), lookup(b));
  const auto n = static_cast<Index>(ids.size());
  return Graph::from_edges(n, edges, std::move(ids));
}

/// Reads one edge per line (two integer ids). '#' lines and blank lines are
/// skipped. Ids are compacted to 0..n-1 in ascending order of original id.
inline Graph load_edge_list(std::istream& in, EdgeListFormat format = EdgeListFormat::automatic) {
  std::vector<std::pair<std::int64_t, std::int64_t>> raw;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::is_blank_or_comment(line)) continue;
    auto tokens = detail::split_tokens(line, format);
    if (tokens.size() != 2)
      throw ParseError("expected 2 node identifiers, found " + std::to_string(tokens.size()), lineno);
    raw.emplace_back(detail::parse_id(tokens[0], lineno), detail::parse_id(tokens[1], lineno));
  }
  if (raw.empty()) throw ParseError("edge list is empty", 0);
  return graph_from_id_pairs(raw);
}

/// Component label per node (labels numbered by discovery from smallest node id).
inline std::vector<Index> connected_components(const Graph& g, Index* count = nullptr) {
  const Index n = g.num_nodes();
  std::vector<Index> label(static_cast<std::size_t>(n), -1);
  std::vector<Index> queue;
  Index c = 0;
  for (Index s = 0; s < n; ++s) {
    if (label[s] >= 0) continue;
    queue.assign(1, s);
    label[s] = c;
    for (std::size_t h = 0; h < queue.size(); ++h)
      for (Index v : g.neighbors(queue[h]))
        if (label[v] < 0) {
          label[v] = c;
          queue.push_back(v);
        }
    ++c;
  }
  if (count) *count = c;
  return label;
}

inline bool is_connected(const Graph& g) {
  Index count = 0;
  connected_components(g, &count);
  return count <= 1;
}

/// Largest connected component, relabeled contiguously in node order.
/// Equal sizes are resolved toward the component holding the smallest original id.
inline Graph largest_connected_component(const Graph& g) {
  if (g.num_nodes() == 0) return g;
  Index count = 0;
  auto label = connected_components(g, &count);
  std::vector<Index> size(static_cast<std::size_t>(count), 0);
  std::vector<std::int64_t> min_id(static_cast<std::size_t>(count), std::numeric_limits<std::int64_t>::max());
  for (Index u = 0; u < g.num_nodes(); ++u) {
    ++size[label[u]];
    min_id[label[u]] = std::min(min_id[label[u]], g.original_id(u));
  }
  Index best = 0;
  for (Index c = 1; c < count; ++c)
    if (size[c] > size[best] || (size[c] == size[best] && min_id[c] < min_id[best])) best = c;
  std::vector<Index> nodes;
  for (Index u = 0; u < g.num_nodes(); ++u)
    if (label[u] == best) nodes.push_back(u);
  return g.induced_subgraph(nodes);
}

/// Power-iteration estimate of ||G||_2 from the normalized all-ones start.
/// The estimate at step k is ||G x_k|| for unit x_k, i.e. the square root of
/// the Rayleigh quotient of G^2, so it never exceeds ||G||_2 and converges on
/// bipartite graphs where the +/- lambda pair defeats the plain quotient.
inline double spectral_norm(const Graph& g, double tol = 1e-7, Index max_iter = 10000) {
  const Index n = g.num_nodes();
  if (n == 0) throw DimensionError("spectral_norm of an empty graph");
  if (g.num_edges() == 0) return 0.0;
  Vector x(static_cast<std::size_t>(n), 1.0 / std::sqrt(static_cast<double>(n)));
  Vector y(x.size());
  double prev = -1.0;
  double est = 0.0;
  for (Index it = 0; it < max_iter; ++it) {
    g.multiply(x, y);
    est = norm2(y);
    if (est == 0.0) return 0.0;
    if (prev >= 0.0 && std::abs(est - prev) <= tol * est) return est;
    prev = est;
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = y[i] / est;
  }
  throw NotConvergedError("power iteration did not converge in " + std::to_string(max_iter) + " iterations", est);
}

/// The stress-test damping factor 1 / (||G||_2 + 1).
inline double hardest_alpha(double spectral_norm) {
  if (!(spectral_norm > 0.0)) throw AlphaError("spectral norm must be positive");
  return 1.0 / (spectral_norm + 1.0);
}

/// alpha paired with the norm estimate it was checked against.
struct KatzParams {
  double alpha = 0.0;
  double spectral_norm = 0.0;

  bool admissible() const { return alpha > 0.0 && alpha * spectral_norm < 1.0; }

  static KatzParams checked(double alpha, double spectral_norm) {
    KatzParams p{alpha, spectral_norm};
    if (!p.admissible()) {
      std::ostringstream os;
      os.precision(17);
      os << "alpha " << alpha << " is inadmissible: need 0 < alpha < 1/||G||_2 = "
         << (spectral_norm > 0 ? 1.0 / spectral_norm : std::numeric_limits<double>::infinity());
      throw AlphaError(os.str());
    }
    return p;
  }
};

/// Two-column "internal_id original_id" text.
inline void write_id_map(std::ostream& out, std::span<const std::int64_t> original_ids) {
  for (std::size_t i = 0; i < original_ids.size(); ++i) out << i << ' ' << original_ids[i] << '\n';
}

}  // namespace lrckatz
