#pragma once

#include <algorithm>
#include <ostream>
#include <tuple>
#include <vector>

#include "lrckatz/error.hpp"
#include "lrckatz/graph.hpp"
#include "lrckatz/sparse.hpp"

namespace lrckatz {

struct PartitionConfig {
  double max_separator_fraction = 0.15;
  Index max_part_size = 64;
  int max_recursion_depth = 64;

  /// max_part_size = max(64, n/256), clamped to n/2 (but at least 2) so that
  /// small graphs still produce a separator.
  static PartitionConfig defaults_for(Index n) {
    PartitionConfig cfg;
    cfg.max_part_size = std::max<Index>(2, std::min<Index>(std::max<Index>(64, n / 256), n / 2));
    return cfg;
  }
};

/// Node reordering that puts parts P1..Pp first and the vertex separator last.
/// perm[position] = node; inv_perm[node] = position. part_boundaries holds
/// p+1 offsets 0 = b0 < ... < bp = n1.
struct BlockPartition {
  std::vector<Index> perm;
  std::vector<Index> inv_perm;
  std::vector<Index> part_boundaries{0};
  Index n1 = 0;
  Index n2 = 0;
  bool separator_exceeded = false;

  Index size() const { return n1 + n2; }
  Index num_parts() const { return static_cast<Index>(part_boundaries.size()) - 1; }

  /// Assembles a partition from explicit parts and separator (node ids).
  static BlockPartition from_parts(Index n, const std::vector<std::vector<Index>>& parts,
                                   const std::vector<Index>& separator) {
    BlockPartition bp;
    bp.perm.reserve(static_cast<std::size_t>(n));
    for (const auto& part : parts) {
      if (part.empty()) continue;
      bp.perm.insert(bp.perm.end(), part.begin(), part.end());
      bp.part_boundaries.push_back(static_cast<Index>(bp.perm.size()));
    }
    bp.n1 = static_cast<Index>(bp.perm.size());
    bp.perm.insert(bp.perm.end(), separator.begin(), separator.end());
    bp.n2 = static_cast<Index>(separator.size());
    if (static_cast<Index>(bp.perm.size()) != n) throw DimensionError("parts and separator do not cover the graph");
    bp.inv_perm.assign(static_cast<std::size_t>(n), -1);
    for (Index k = 0; k < n; ++k) {
      const Index u = bp.perm[k];
      if (u < 0 || u >= n || bp.inv_perm[u] != -1) throw DimensionError("parts and separator overlap");
      bp.inv_perm[u] = k;
    }
    return bp;
  }

  friend bool operator==(const BlockPartition&, const BlockPartition&) = default;
};

/// True iff the permutations are mutually inverse, boundaries are well formed
/// and no edge joins two distinct parts.
inline bool check_partition(const Graph& g, const BlockPartition& bp) {
  const Index n = g.num_nodes();
  if (bp.n1 < 0 || bp.n2 < 0 || bp.n1 + bp.n2 != n) return false;
  if (static_cast<Index>(bp.perm.size()) != n || static_cast<Index>(bp.inv_perm.size()) != n) return false;
  for (Index k = 0; k < n; ++k) {
    const Index u = bp.perm[k];
    if (u < 0 || u >= n || bp.inv_perm[u] != k) return false;
  }
  const auto& b = bp.part_boundaries;
  if (b.empty() || b.front() != 0 || b.back() != bp.n1) return false;
  for (std::size_t i = 1; i < b.size(); ++i)
    if (b[i] <= b[i - 1]) return false;

  // part id per position; separator positions get -1
  std::vector<Index> part_of(static_cast<std::size_t>(n), -1);
  for (std::size_t p = 0; p + 1 < b.size(); ++p)
    for (Index k = b[p]; k < b[p + 1]; ++k) part_of[k] = static_cast<Index>(p);
  for (Index u = 0; u < n; ++u) {
    const Index pu = part_of[bp.inv_perm[u]];
    if (pu < 0) continue;
    for (Index v : g.neighbors(u)) {
      const Index pv = part_of[bp.inv_perm[v]];
      if (pv >= 0 && pv != pu) return false;
    }
  }
  return true;
}

namespace detail {

/// Scratch state for bisecting node subsets of one graph.
class Bisector {
 public:
  explicit Bisector(const Graph& g)
      : g_(g), stamp_(static_cast<std::size_t>(g.num_nodes()), 0), level_(stamp_.size(), -1),
        side_(stamp_.size(), 0), visit_(stamp_.size(), 0) {}

  /// Splits a connected subset into (separator, remaining nodes). Sides are
  /// BFS level sets from a pseudo-peripheral root; the cut between them is
  /// turned into a vertex separator by the smallest of three covers.
  std::vector<Index> separator(const std::vector<Index>& nodes) {
    const int mark = enter(nodes);
    const Index root = farthest(nodes.front(), mark);
    std::vector<Index> order = bfs(root, mark);
    const Index half2 = static_cast<Index>(nodes.size());  // compare 2*count <= size
    Index count = 0;
    Index cut_level = 0;
    for (std::size_t i = 0; i < order.size();) {
      const Index lv = level_[order[i]];
      std::size_t j = i;
      while (j < order.size() && level_[order[j]] == lv) ++j;
      const Index next = count + static_cast<Index>(j - i);
      if (2 * next > half2) break;
      count = next;
      cut_level = lv;
      i = j;
    }
    // side 1 = levels <= cut_level (A), side 2 = deeper levels (B)
    for (Index u : nodes) side_[u] = level_[u] <= cut_level ? 1 : 2;

    std::vector<Index> cover_a, cover_b;
    std::vector<std::pair<Index, Index>> cut;
    for (Index u : nodes) {
      if (side_[u] != 1) continue;
      bool boundary = false;
      for (Index v : g_.neighbors(u)) {
        if (stamp_[v] != mark || side_[v] != 2) continue;
        boundary = true;
        cut.emplace_back(u, v);
      }
      if (boundary) cover_a.push_back(u);
    }
    for (const auto& e : cut) cover_b.push_back(e.second);
    std::sort(cover_b.begin(), cover_b.end());
    cover_b.erase(std::unique(cover_b.begin(), cover_b.end()), cover_b.end());
    std::vector<Index> cover_g = greedy_cover(cut);

    std::vector<Index>* best = &cover_b;
    if (cover_a.size() < best->size()) best = &cover_a;
    if (cover_g.size() < best->size()) best = &cover_g;
    std::vector<Index> sep = *best;
    std::sort(sep.begin(), sep.end());
    for (Index s : sep) side_[s] = 0;
    shrink(sep, mark);
    return sep;
  }

  /// Connected components of `nodes` minus the separator (side_ != 0), each sorted.
  std::vector<std::vector<Index>> components(const std::vector<Index>& nodes) {
    const int mark = ++counter_;
    for (Index u : nodes)
      if (side_[u] != 0) stamp_[u] = mark;
    std::vector<std::vector<Index>> comps;
    for (Index s : nodes) {
      if (stamp_[s] != mark) continue;
      std::vector<Index> comp{s};
      stamp_[s] = -mark;
      for (std::size_t h = 0; h < comp.size(); ++h)
        for (Index v : g_.neighbors(comp[h]))
          if (stamp_[v] == mark) {
            stamp_[v] = -mark;
            comp.push_back(v);
          }
      std::sort(comp.begin(), comp.end());
      comps.push_back(std::move(comp));
    }
    return comps;
  }

 private:
  int enter(const std::vector<Index>& nodes) {
    const int mark = ++counter_;
    for (Index u : nodes) stamp_[u] = mark;
    return mark;
  }

  /// BFS inside the current subset; fills level_ and returns visit order.
  std::vector<Index> bfs(Index root, int mark) {
    const int seen = ++visit_counter_;
    std::vector<Index> order{root};
    level_[root] = 0;
    visit_[root] = seen;
    for (std::size_t h = 0; h < order.size(); ++h) {
      const Index u = order[h];
      for (Index v : g_.neighbors(u)) {
        if (stamp_[v] != mark || visit_[v] == seen) continue;
        visit_[v] = seen;
        level_[v] = level_[u] + 1;
        order.push_back(v);
      }
    }
    return order;
  }

  /// Deepest node of a BFS from `root`, smallest id among the deepest.
  Index farthest(Index root, int mark) {
    Index best = root;
    for (Index u : bfs(root, mark))
      if (level_[u] > level_[best] || (level_[u] == level_[best] && u < best)) best = u;
    return best;
  }

  /// Greedy vertex cover of the cut edges: repeatedly take the endpoint
  /// covering the most uncovered edges (smallest id on ties).
  static std::vector<Index> greedy_cover(const std::vector<std::pair<Index, Index>>& cut) {
    std::vector<Index> verts;
    for (auto [a, b] : cut) {
      verts.push_back(a);
      verts.push_back(b);
    }
    std::sort(verts.begin(), verts.end());
    verts.erase(std::unique(verts.begin(), verts.end()), verts.end());
    auto local = [&](Index u) { return std::lower_bound(verts.begin(), verts.end(), u) - verts.begin(); };
    std::vector<std::vector<std::size_t>> incident(verts.size());
    for (std::size_t e = 0; e < cut.size(); ++e) {
      incident[local(cut[e].first)].push_back(e);
      incident[local(cut[e].second)].push_back(e);
    }
    std::vector<Index> deg(verts.size());
    for (std::size_t i = 0; i < verts.size(); ++i) deg[i] = static_cast<Index>(incident[i].size());
    std::vector<char> covered(cut.size(), 0);
    std::size_t remaining = cut.size();
    std::vector<Index> cover;
    while (remaining > 0) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < verts.size(); ++i)
        if (deg[i] > deg[best]) best = i;
      cover.push_back(verts[best]);
      for (std::size_t e : incident[best]) {
        if (covered[e]) continue;
        covered[e] = 1;
        --remaining;
        --deg[local(cut[e].first)];
        --deg[local(cut[e].second)];
      }
    }
    return cover;
  }

  /// Moves separator nodes whose non-separator neighbours all lie on one side
  /// back into that side.
  void shrink(std::vector<Index>& sep, int mark) {
    bool changed = true;
    while (changed) {
      changed = false;
      std::vector<Index> kept;
      for (Index s : sep) {
        bool touches_a = false, touches_b = false;
        for (Index v : g_.neighbors(s)) {
          if (stamp_[v] != mark) continue;
          touches_a |= side_[v] == 1;
          touches_b |= side_[v] == 2;
        }
        if (touches_a && touches_b) {
          kept.push_back(s);
        } else {
          side_[s] = touches_b ? 2 : 1;
          changed = true;
        }
      }
      sep.swap(kept);
    }
  }

  const Graph& g_;
  std::vector<int> stamp_;
  std::vector<Index> level_;
  std::vector<int> side_;
  std::vector<int> visit_;
  int counter_ = 0;
  int visit_counter_ = 0;
};

}  // namespace detail

/// Recursive bisection with BFS level-set cuts converted to vertex
/// separators. Every separator node ends up in the trailing block.
inline BlockPartition partition_vertex_separator(const Graph& g, const PartitionConfig& cfg) {
  const Index n = g.num_nodes();
  if (cfg.max_part_size < 1) throw DimensionError("max_part_size must be at least 1");
  if (n == 0) return BlockPartition{};
  if (!is_connected(g))
    throw DisconnectedError("graph is disconnected; extract the largest connected component first");

  detail::Bisector bisector(g);
  std::vector<std::vector<Index>> parts;
  std::vector<Index> separator;

  struct Work {
    std::vector<Index> nodes;
    int depth;
  };
  std::vector<Work> stack;
  std::vector<Index> all(static_cast<std::size_t>(n));
  for (Index u = 0; u < n; ++u) all[u] = u;
  stack.push_back({std::move(all), 0});
  while (!stack.empty()) {
    Work w = std::move(stack.back());
    stack.pop_back();
    if (static_cast<Index>(w.nodes.size()) <= cfg.max_part_size || w.depth >= cfg.max_recursion_depth) {
      parts.push_back(std::move(w.nodes));
      continue;
    }
    auto sep = bisector.separator(w.nodes);
    separator.insert(separator.end(), sep.begin(), sep.end());
    auto comps = bisector.components(w.nodes);
    // reversed so the component with the smallest id is processed first
    for (auto it = comps.rbegin(); it != comps.rend(); ++it) stack.push_back({std::move(*it), w.depth + 1});
  }
  std::sort(separator.begin(), separator.end());
  auto bp = BlockPartition::from_parts(n, parts, separator);
  bp.separator_exceeded = static_cast<double>(bp.n2) > cfg.max_separator_fraction * static_cast<double>(n);
  return bp;
}

/// Text dump: n, n1, n2, perm, part_boundaries (one labelled line each).
inline void write_partition(std::ostream& out, const BlockPartition& bp) {
  out << "n " << bp.size() << "\nn1 " << bp.n1 << "\nn2 " << bp.n2 << "\nperm";
  for (Index v : bp.perm) out << ' ' << v;
  out << "\npart_boundaries";
  for (Index v : bp.part_boundaries) out << ' ' << v;
  out << '\n';
}

/// M = I - alpha G split into M11 (block diagonal over parts), M12 and M22,
/// all in permuted coordinates.
struct BlockSystem {
  CsrMatrix m11;
  CsrMatrix m12;
  CsrMatrix m22;
};

inline BlockSystem build_blocks(const Graph& g, double alpha, const BlockPartition& bp,
                                double spectral_norm_estimate) {
  if (g.num_nodes() != bp.size()) throw DimensionError("partition size differs from graph size");
  if (alpha < 0.0 || (alpha > 0.0 && alpha * spectral_norm_estimate >= 1.0))
    throw AlphaError("alpha must satisfy 0 <= alpha < 1/||G||_2");
  const Index n1 = bp.n1, n2 = bp.n2;
  BlockSystem bs{CsrMatrix(n1, n1), CsrMatrix(n1, n2), CsrMatrix(n2, n2)};
  auto append = [](CsrMatrix& m, Index col, double v) {
    m.indices.push_back(col);
    m.values.push_back(v);
  };
  std::vector<Index> row;
  for (Index pos = 0; pos < bp.size(); ++pos) {
    const Index u = bp.perm[pos];
    row.clear();
    for (Index v : g.neighbors(u)) row.push_back(bp.inv_perm[v]);
    row.push_back(pos);
    std::sort(row.begin(), row.end());
    for (Index c : row) {
      const double val = c == pos ? 1.0 : -alpha;
      if (pos < n1) {
        if (c < n1) append(bs.m11, c, val);
        else append(bs.m12, c - n1, val);
      } else if (c >= n1) {
        append(bs.m22, c - n1, val);
      }
    }
    if (pos < n1) {
      bs.m11.offsets[pos + 1] = bs.m11.nnz();
      bs.m12.offsets[pos + 1] = bs.m12.nnz();
    } else {
      bs.m22.offsets[pos - n1 + 1] = bs.m22.nnz();
    }
  }
  return bs;
}

inline BlockSystem build_blocks(const Graph& g, double alpha, const BlockPartition& bp) {
  const double norm = g.num_edges() > 0 ? spectral_norm(g) : 0.0;
  return build_blocks(g, alpha, bp, norm);
}

}  // namespace lrckatz
