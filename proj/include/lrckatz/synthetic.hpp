#pragma once

// Seeded random graph generators for tests, benchmarks and the link-prediction
// benchmark.

#include <algorithm>
#include <cstdint>
#include <set>
#include <utility>
#include <vector>

#include "lrckatz/error.hpp"
#include "lrckatz/graph.hpp"
#include "lrckatz/linkpred.hpp"
#include "lrckatz/rng.hpp"

namespace lrckatz::synthetic {

/// G(n, p); may be disconnected.
inline Graph erdos_renyi(Index n, double p, std::uint64_t seed) {
  if (n < 0 || p < 0.0 || p > 1.0) throw InvalidArgumentError("erdos_renyi: bad parameters");
  Rng rng(seed);
  std::vector<Edge> edges;
  for (Index u = 0; u < n; ++u)
    for (Index v = u + 1; v < n; ++v)
      if (rng.uniform() < p) edges.emplace_back(u, v);
  return Graph::from_edges(n, edges);
}

/// Largest component of G(n, p).
inline Graph connected_erdos_renyi(Index n, double p, std::uint64_t seed) {
  return largest_connected_component(erdos_renyi(n, p, seed));
}

namespace detail {

/// Preferential attachment state: `ends` lists every edge endpoint, so a
/// uniform draw from it is degree-proportional.
struct PaState {
  std::vector<std::set<Index>> adj;
  std::vector<Index> ends;

  void add(Index u, Index v) {
    adj[u].insert(v);
    adj[v].insert(u);
    ends.push_back(u);
    ends.push_back(v);
  }
  bool has(Index u, Index v) const { return adj[u].count(v) != 0; }
  Index draw(Rng& rng) const { return ends[rng.below(ends.size())]; }
};

}  // namespace detail

/// Barabási–Albert: an (m+1)-clique, then each new node links to m distinct
/// existing nodes chosen with probability proportional to degree.
inline Graph barabasi_albert(Index n, Index m, std::uint64_t seed) {
  if (m < 1 || n < m + 1) throw InvalidArgumentError("barabasi_albert: need m >= 1 and n >= m + 1");
  Rng rng(seed);
  detail::PaState st;
  st.adj.resize(static_cast<std::size_t>(n));
  std::vector<Edge> edges;
  for (Index u = 0; u <= m; ++u)
    for (Index v = u + 1; v <= m; ++v) {
      st.add(u, v);
      edges.emplace_back(u, v);
    }
  std::vector<Index> targets;
  for (Index u = m + 1; u < n; ++u) {
    targets.clear();
    while (static_cast<Index>(targets.size()) < m) {
      const Index t = st.draw(rng);
      if (std::find(targets.begin(), targets.end(), t) == targets.end()) targets.push_back(t);
    }
    for (Index t : targets) {
      st.add(u, t);
      edges.emplace_back(u, t);
    }
  }
  return Graph::from_edges(n, edges);
}

struct TemporalPaConfig {
  Index nodes = 6000;             // total arrivals, including the seed clique
  Index m = 3;                    // attachment edges per arriving node
  Index closure_per_step = 3;     // densification edges between existing nodes per step
  double triadic_probability = 0.8;
  std::uint64_t seed = 7;
};

/// Growing preferential-attachment network with densification. Node i
/// arrives at time i (seed clique at time m); at every step each of
/// `closure_per_step` extra edges joins a degree-proportional node u to a
/// friend-of-a-friend (with triadic_probability) or to another
/// degree-proportional node. Node ids are arrival order, so a cutoff c
/// keeps nodes 0..c.
inline std::vector<TimedEdge> temporal_preferential_attachment(const TemporalPaConfig& cfg) {
  const Index n = cfg.nodes, m = cfg.m;
  if (m < 1 || n < m + 2) throw InvalidArgumentError("temporal_preferential_attachment: bad sizes");
  Rng rng(cfg.seed);
  detail::PaState st;
  st.adj.resize(static_cast<std::size_t>(n));
  std::vector<TimedEdge> out;
  for (Index u = 0; u <= m; ++u)
    for (Index v = u + 1; v <= m; ++v) {
      st.add(u, v);
      out.push_back({u, v, m});
    }
  std::vector<Index> targets;
  for (Index u = m + 1; u < n; ++u) {
    const std::int64_t t = u;
    targets.clear();
    while (static_cast<Index>(targets.size()) < m) {
      const Index x = st.draw(rng);
      if (std::find(targets.begin(), targets.end(), x) == targets.end()) targets.push_back(x);
    }
    for (Index x : targets) {
      st.add(u, x);
      out.push_back({u, x, t});
    }
    for (Index c = 0; c < cfg.closure_per_step; ++c) {
      const Index a = st.draw(rng);
      Index b = -1;
      for (int attempt = 0; attempt < 16 && b < 0; ++attempt) {
        Index cand;
        if (rng.uniform() < cfg.triadic_probability) {
          // friend of a friend
          const auto& na = st.adj[a];
          auto it = na.begin();
          std::advance(it, static_cast<std::ptrdiff_t>(rng.below(na.size())));
          const auto& nb = st.adj[*it];
          auto jt = nb.begin();
          std::advance(jt, static_cast<std::ptrdiff_t>(rng.below(nb.size())));
          cand = *jt;
        } else {
          cand = st.draw(rng);
        }
        if (cand != a && !st.has(a, cand)) b = cand;
      }
      if (b < 0) continue;
      st.add(a, b);
      out.push_back({std::min(a, b), std::max(a, b), t});
    }
  }
  return out;
}

}  // namespace lrckatz::synthetic
