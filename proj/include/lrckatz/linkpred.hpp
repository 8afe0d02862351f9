#pragma once

#include <algorithm>
#include <array>
#include <functional>
#include <iterator>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lrckatz/error.hpp"
#include "lrckatz/graph.hpp"
#include "lrckatz/index.hpp"
#include "lrckatz/parallel.hpp"
#include "lrckatz/rng.hpp"
#include "lrckatz/solver.hpp"

namespace lrckatz {

enum class Method { katz, sparse_katz };

inline std::string_view method_name(Method m) { return m == Method::katz ? "katz" : "sparse-katz"; }

struct ScoredNode {
  Index node = -1;  // internal id
  double score = 0.0;
  friend bool operator==(const ScoredNode&, const ScoredNode&) = default;
};

/// Ranked candidate list for one query. Node ids are internal ids of the
/// index graph. For katz the score is the Katz score; for sparse-katz it is
/// the Pearson correlation with the query's profile.
struct RankedPrediction {
  Index query = -1;
  Method method = Method::katz;
  std::vector<ScoredNode> candidates;
  std::vector<Index> anchors;  // sparse-katz only: the Top-T list, in order
};

/// Katz scores closer than this fraction of the largest score are ties.
inline constexpr double katz_tie_rel = 1e-9;
/// Correlations closer than this are ties.
inline constexpr double correlation_tie_abs = 1e-10;

namespace detail {

/// Sorts `ids` by descending key. Runs of neighbours whose keys differ by at
/// most `eps` form tie groups, which are reordered by `tie_less`.
template <class Key, class TieLess>
void order_with_ties(std::vector<Index>& ids, Key key, double eps, TieLess tie_less) {
  std::stable_sort(ids.begin(), ids.end(), [&](Index a, Index b) { return key(a) > key(b); });
  std::size_t start = 0;
  for (std::size_t i = 1; i <= ids.size(); ++i) {
    if (i == ids.size() || key(ids[i - 1]) - key(ids[i]) > eps) {
      if (i - start > 1) std::sort(ids.begin() + start, ids.begin() + i, tie_less);
      start = i;
    }
  }
}

inline double katz_eps(std::span<const double> scores) {
  double m = 0.0;
  for (double v : scores) m = std::max(m, std::abs(v));
  return katz_tie_rel * m;
}

}  // namespace detail

/// All nodes except q (and, with `mask_neighbors`, q's neighbours) in
/// descending Katz order; ties by smaller id.
inline std::vector<Index> katz_order(const Graph& g, std::span<const double> scores, Index q, bool mask_neighbors) {
  const Index n = g.num_nodes();
  std::vector<char> masked(static_cast<std::size_t>(n), 0);
  masked[q] = 1;
  if (mask_neighbors)
    for (Index v : g.neighbors(q)) masked[v] = 1;
  std::vector<Index> ids;
  ids.reserve(static_cast<std::size_t>(n));
  for (Index u = 0; u < n; ++u)
    if (!masked[u]) ids.push_back(u);
  detail::order_with_ties(
      ids, [&](Index u) { return scores[u]; }, detail::katz_eps(scores), std::less<Index>{});
  return ids;
}

/// Sample Pearson correlation; 0 when either vector is constant.
inline double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionError("pearson: vectors differ in length");
  if (x.size() < 2) throw InvalidArgumentError("pearson: need at least two entries");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  const double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

/// Reorders a Katz-ordered candidate list by descending correlation. Ties
/// (within correlation_tie_abs) keep their Katz order, which already breaks
/// Katz ties by id. Scores of the result are the correlations.
inline std::vector<ScoredNode> rerank_by_correlation(std::span<const Index> katz_ordered,
                                                     std::span<const double> correlation) {
  std::vector<Index> pos(katz_ordered.size());
  for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = static_cast<Index>(i);
  detail::order_with_ties(
      pos, [&](Index i) { return correlation[i]; }, correlation_tie_abs, std::less<Index>{});
  std::vector<ScoredNode> out;
  out.reserve(pos.size());
  for (Index i : pos) out.push_back({katz_ordered[i], correlation[i]});
  return out;
}

/// Per-query state shared by the Katz and Sparse-Katz rankings: k_q, the
/// masked and unmasked orders, and the anchor vectors k_t solved so far.
class QueryContext {
 public:
  QueryContext(const KatzIndex& idx, Index q, QueryOptions opts = {}) : idx_(&idx), q_(q), opts_(opts) {
    if (q < 0 || q >= idx.num_nodes()) throw UnknownNodeError("query node out of range", q);
    kq_ = query_internal(idx, q, opts_).first.scores;
    masked_ = katz_order(idx.graph, kq_, q, true);
  }

  Index query() const { return q_; }
  const Vector& scores() const { return kq_; }

  RankedPrediction katz(Index s) const {
    if (s < 1) throw InvalidArgumentError("s must be at least 1");
    RankedPrediction r;
    r.query = q_;
    r.method = Method::katz;
    const auto take = std::min<std::size_t>(static_cast<std::size_t>(s), masked_.size());
    for (std::size_t i = 0; i < take; ++i) r.candidates.push_back({masked_[i], kq_[masked_[i]]});
    return r;
  }

  /// `T` unset means s + 1.
  RankedPrediction sparse_katz(Index s, std::optional<Index> T = std::nullopt) {
    if (s < 1) throw InvalidArgumentError("s must be at least 1");
    const Index n = idx_->num_nodes();
    const Index t = T.value_or(s + 1);
    if (t < 1) throw InvalidArgumentError("T must be at least 1");
    if (t >= n) throw InvalidArgumentError("T must be smaller than the number of nodes");
    if (unmasked_.empty()) unmasked_ = katz_order(idx_->graph, kq_, q_, false);

    RankedPrediction r;
    r.query = q_;
    r.method = Method::sparse_katz;
    r.anchors.assign(unmasked_.begin(), unmasked_.begin() + t);
    const auto take = std::min<std::size_t>(static_cast<std::size_t>(s), masked_.size());
    std::vector<Index> cand(masked_.begin(), masked_.begin() + static_cast<std::ptrdiff_t>(take));
    if (cand.empty()) return r;

    // profile(x) = [K(x,q), K(x,t_1), ..., K(x,t_T)], read column-wise from
    // the solved vectors (K is symmetric).
    const std::size_t len = static_cast<std::size_t>(t) + 1;
    auto profile = [&](Index x) {
      Vector p(len);
      p[0] = kq_[x];
      for (Index j = 0; j < t; ++j) p[j + 1] = anchor_vector(j)[x];
      return p;
    };
    const Vector pq = profile(q_);
    std::vector<double> corr(cand.size());
    for (std::size_t i = 0; i < cand.size(); ++i) corr[i] = pearson(pq, profile(cand[i]));
    r.candidates = rerank_by_correlation(cand, corr);
    return r;
  }

  /// Number of solves performed for anchors.
  Index anchor_solves() const { return static_cast<Index>(anchor_vectors_.size()); }

 private:
  const Vector& anchor_vector(Index j) {
    while (static_cast<Index>(anchor_vectors_.size()) <= j) {
      const Index a = unmasked_[anchor_vectors_.size()];
      anchor_vectors_.push_back(query_internal(*idx_, a, opts_).first.scores);
    }
    return anchor_vectors_[j];
  }

  const KatzIndex* idx_;
  Index q_;
  QueryOptions opts_;
  Vector kq_;
  std::vector<Index> masked_;
  std::vector<Index> unmasked_;
  std::vector<Vector> anchor_vectors_;
};

/// Top-s non-neighbours of internal node q by Katz score.
inline RankedPrediction katz_rank(const KatzIndex& idx, Index q, Index s, const QueryOptions& opts = {}) {
  return QueryContext(idx, q, opts).katz(s);
}

/// Algorithm: Top-s Katz candidates reranked by Pearson correlation of their
/// Katz profiles over {q} and the Top-T anchors. `T` unset means s + 1.
inline RankedPrediction sparse_katz(const KatzIndex& idx, Index q, Index s, std::optional<Index> T = std::nullopt,
                                    const QueryOptions& opts = {}) {
  if (T && *T >= idx.num_nodes()) throw InvalidArgumentError("T must be smaller than the number of nodes");
  return QueryContext(idx, q, opts).sparse_katz(s, T);
}

// ---------------------------------------------------------------------------
// Temporal split and recall evaluation

enum class Bucket { low = 0, mid = 1, high = 2 };
inline constexpr int bucket_count = 3;

/// Label used in CSV output.
inline std::string_view bucket_name(Bucket b) {
  switch (b) {
    case Bucket::low: return "1-3";
    case Bucket::mid: return "4-10";
    case Bucket::high: return "11+";
  }
  return "?";
}

/// Bucket of a positive pair from min(deg_train(u), deg_train(v)).
inline Bucket bucket_for_degree(Index min_degree) {
  if (min_degree <= 3) return Bucket::low;
  if (min_degree <= 10) return Bucket::mid;
  return Bucket::high;
}

struct PositivePair {
  Index u = -1;  // internal ids of the train graph, u < v
  Index v = -1;
  Bucket bucket = Bucket::low;
  friend bool operator==(const PositivePair&, const PositivePair&) = default;
};

struct LinkPredDataset {
  Graph train;                          // LCC of the edges with t <= cutoff
  std::vector<PositivePair> positives;  // sorted by (u, v)
  std::int64_t cutoff = 0;
};

struct TimedEdge {
  std::int64_t u = 0;
  std::int64_t v = 0;
  std::int64_t t = 0;
  friend bool operator==(const TimedEdge&, const TimedEdge&) = default;
};

/// Reads "u v epoch" lines; '#' and blank lines are skipped.
inline std::vector<TimedEdge> load_timed_edges(std::istream& in) {
  std::vector<TimedEdge> edges;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::is_blank_or_comment(line)) continue;
    auto tokens = detail::split_tokens(line, EdgeListFormat::whitespace);
    if (tokens.size() != 3)
      throw ParseError("expected 'u v epoch', found " + std::to_string(tokens.size()) + " tokens", lineno);
    edges.push_back({detail::parse_id(tokens[0], lineno), detail::parse_id(tokens[1], lineno),
                     detail::parse_id(tokens[2], lineno)});
  }
  if (edges.empty()) throw ParseError("timestamped edge list is empty", 0);
  return edges;
}

inline void write_timed_edges(std::ostream& out, std::span<const TimedEdge> edges) {
  for (const auto& e : edges) out << e.u << ' ' << e.v << ' ' << e.t << '\n';
}

/// Train graph = LCC of edges with t <= cutoff. Positives = pairs seen only
/// after the cutoff whose endpoints are both train nodes.
inline LinkPredDataset temporal_split(std::span<const TimedEdge> edges, std::int64_t cutoff) {
  if (edges.empty()) throw InvalidArgumentError("no timestamped edges");
  std::int64_t tmin = std::numeric_limits<std::int64_t>::max(), tmax = std::numeric_limits<std::int64_t>::min();
  for (const auto& e : edges) {
    tmin = std::min(tmin, e.t);
    tmax = std::max(tmax, e.t);
  }
  if (cutoff < tmin || cutoff > tmax)
    throw InvalidArgumentError("cutoff " + std::to_string(cutoff) + " outside the time range [" +
                               std::to_string(tmin) + ", " + std::to_string(tmax) + "]");

  std::vector<std::pair<std::int64_t, std::int64_t>> before;
  for (const auto& e : edges)
    if (e.t <= cutoff) before.emplace_back(e.u, e.v);

  LinkPredDataset ds;
  ds.cutoff = cutoff;
  ds.train = largest_connected_component(graph_from_id_pairs(before));

  std::vector<std::pair<Index, Index>> pairs;
  for (const auto& e : edges) {
    if (e.t <= cutoff || e.u == e.v) continue;
    Index a = ds.train.internal_id(e.u), b = ds.train.internal_id(e.v);
    if (a < 0 || b < 0 || ds.train.has_edge(a, b)) continue;
    if (a > b) std::swap(a, b);
    pairs.emplace_back(a, b);
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  ds.positives.reserve(pairs.size());
  for (auto [a, b] : pairs)
    ds.positives.push_back({a, b, bucket_for_degree(std::min(ds.train.degree(a), ds.train.degree(b)))});
  return ds;
}

/// |predicted ∩ partners| / |partners|.
inline double recall_at(std::span<const Index> predicted, std::span<const Index> partners) {
  if (partners.empty()) throw InvalidArgumentError("recall of an empty partner set");
  std::vector<Index> p(predicted.begin(), predicted.end()), q(partners.begin(), partners.end());
  std::sort(p.begin(), p.end());
  std::sort(q.begin(), q.end());
  std::vector<Index> both;
  std::set_intersection(p.begin(), p.end(), q.begin(), q.end(), std::back_inserter(both));
  return static_cast<double>(both.size()) / static_cast<double>(q.size());
}

/// Endpoints of the positive pairs, ascending.
inline std::vector<Index> query_nodes(const LinkPredDataset& ds) {
  std::vector<Index> nodes;
  for (const auto& p : ds.positives) {
    nodes.push_back(p.u);
    nodes.push_back(p.v);
  }
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  return nodes;
}

/// `count` query nodes drawn without replacement from query_nodes(ds),
/// returned ascending. count == 0 or count >= available means all of them.
inline std::vector<Index> sample_queries(const LinkPredDataset& ds, Index count, std::uint64_t seed) {
  auto all = query_nodes(ds);
  if (count <= 0 || count >= static_cast<Index>(all.size())) return all;
  Rng rng(seed);
  auto pick = rng.sample(static_cast<Index>(all.size()), count);
  std::vector<Index> out;
  out.reserve(pick.size());
  for (auto i : pick) out.push_back(all[i]);
  std::sort(out.begin(), out.end());
  return out;
}

struct RecallRow {
  Method method = Method::katz;
  std::optional<Bucket> bucket;  // unset: all buckets together
  Index s = 0;
  double mean_recall = 0.0;
  double std_recall = 0.0;  // population standard deviation
  Index n_queries = 0;
};

struct RecallOptions {
  std::vector<Index> s_values{10, 50, 100};
  std::optional<Index> T;  // unset: s + 1
  std::vector<Method> methods{Method::katz, Method::sparse_katz};
  unsigned workers = 1;
  QueryOptions solver{};
};

/// One recall sample per (query, bucket) where the query has partners in that
/// bucket, plus an overall sample over all of its partners.
struct QueryRecall {
  Index query = -1;
  Method method = Method::katz;
  Index s = 0;
  std::optional<Bucket> bucket;
  double recall = 0.0;
};

/// Recall@s per query for every (method, s). `idx` must be built on ds.train.
inline std::vector<QueryRecall> per_query_recall(const KatzIndex& idx, const LinkPredDataset& ds,
                                                 std::span<const Index> queries, const RecallOptions& opts) {
  if (ds.positives.empty()) throw EmptyPositivesError("no positive pairs: nothing to evaluate");
  if (idx.num_nodes() != ds.train.num_nodes()) throw DimensionError("index was not built on the training graph");
  for (Index s : opts.s_values)
    if (s < 1) throw InvalidArgumentError("s must be at least 1");

  // partners[u][b] = positive partners of u whose pair lies in bucket b
  std::unordered_map<Index, std::array<std::vector<Index>, bucket_count>> partners;
  for (const auto& p : ds.positives) {
    partners[p.u][static_cast<int>(p.bucket)].push_back(p.v);
    partners[p.v][static_cast<int>(p.bucket)].push_back(p.u);
  }
  std::vector<std::vector<QueryRecall>> per(queries.size());
  parallel_for(static_cast<Index>(queries.size()), opts.workers, [&](Index i) {
    const Index q = queries[i];
    auto it = partners.find(q);
    if (it == partners.end()) throw InvalidArgumentError("query node has no positive partners");
    const auto& buckets = it->second;
    std::vector<Index> all;
    for (const auto& b : buckets) all.insert(all.end(), b.begin(), b.end());
    QueryContext ctx(idx, q, opts.solver);
    for (Method m : opts.methods) {
      for (Index s : opts.s_values) {
        const auto pred = m == Method::katz ? ctx.katz(s) : ctx.sparse_katz(s, opts.T);
        std::vector<Index> top;
        for (const auto& c : pred.candidates) top.push_back(c.node);
        for (int b = 0; b < bucket_count; ++b)
          if (!buckets[b].empty())
            per[i].push_back({q, m, s, static_cast<Bucket>(b), recall_at(top, buckets[b])});
        per[i].push_back({q, m, s, std::nullopt, recall_at(top, all)});
      }
    }
  });
  std::vector<QueryRecall> out;
  for (auto& v : per) out.insert(out.end(), v.begin(), v.end());
  return out;
}

/// Aggregates per-query recalls into rows ordered by (method, s, bucket),
/// with the overall row after the three bucket rows. Buckets without queries
/// get n_queries = 0 and NaN statistics.
inline std::vector<RecallRow> aggregate_recall(std::span<const QueryRecall> samples, const RecallOptions& opts) {
  std::vector<RecallRow> rows;
  for (Method m : opts.methods) {
    for (Index s : opts.s_values) {
      for (int b = 0; b <= bucket_count; ++b) {
        std::optional<Bucket> bucket;
        if (b < bucket_count) bucket = static_cast<Bucket>(b);
        double sum = 0.0, sumsq = 0.0;
        Index count = 0;
        for (const auto& r : samples)
          if (r.method == m && r.s == s && r.bucket == bucket) {
            sum += r.recall;
            ++count;
          }
        RecallRow row{m, bucket, s, std::numeric_limits<double>::quiet_NaN(),
                      std::numeric_limits<double>::quiet_NaN(), count};
        if (count > 0) {
          const double mean = sum / static_cast<double>(count);
          for (const auto& r : samples)
            if (r.method == m && r.s == s && r.bucket == bucket) sumsq += (r.recall - mean) * (r.recall - mean);
          row.mean_recall = mean;
          row.std_recall = std::sqrt(sumsq / static_cast<double>(count));
        }
        rows.push_back(row);
      }
    }
  }
  return rows;
}

/// Recall table for the given query sample (see per_query_recall).
inline std::vector<RecallRow> evaluate_recall(const KatzIndex& idx, const LinkPredDataset& ds,
                                              std::span<const Index> queries, const RecallOptions& opts) {
  if (ds.positives.empty()) throw EmptyPositivesError("no positive pairs: nothing to evaluate");
  if (queries.empty()) throw InvalidArgumentError("empty query sample");
  const auto samples = per_query_recall(idx, ds, queries, opts);
  return aggregate_recall(samples, opts);
}

/// CSV with header method,bucket,s,mean_recall,std_recall,n_queries. Overall
/// rows are skipped unless `include_overall`.
inline void write_recall_csv(std::ostream& out, std::span<const RecallRow> rows, bool include_overall = false) {
  auto old = out.precision(10);
  out << "method,bucket,s,mean_recall,std_recall,n_queries\n";
  for (const auto& r : rows) {
    if (!r.bucket && !include_overall) continue;
    out << method_name(r.method) << ',' << (r.bucket ? bucket_name(*r.bucket) : std::string_view("all")) << ','
        << r.s << ',' << r.mean_recall << ',' << r.std_recall << ',' << r.n_queries << '\n';
  }
  out.precision(old);
}

}  // namespace lrckatz
