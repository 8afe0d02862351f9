#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "test_util.hpp"

namespace lrckatz {
namespace {

std::vector<Index> nodes_of(const RankedPrediction& r) {
  std::vector<Index> out;
  for (const auto& c : r.candidates) out.push_back(c.node);
  return out;
}

KatzIndex index_on(const Graph& g, Index ell = 4) { return testing::small_index(g, ell); }

QueryOptions tight() {
  QueryOptions o;
  o.tol = 1e-12;
  return o;
}

// ---- katz_rank

TEST(KatzRank, PathFourFromTheEnd) {
  const auto idx = index_on(testing::path_graph(4), 1);
  const auto r = katz_rank(idx, 0, 2);
  EXPECT_EQ(nodes_of(r), (std::vector<Index>{2, 3}));
  EXPECT_EQ(r.method, Method::katz);
  EXPECT_GT(r.candidates[0].score, r.candidates[1].score);
}

TEST(KatzRank, StarLeafTiesBrokenById) {
  const auto idx = index_on(testing::star_graph(3), 1);
  const auto r = katz_rank(idx, 1, 5);
  EXPECT_EQ(nodes_of(r), (std::vector<Index>{2, 3}));  // hub masked, s clipped
}

TEST(KatzRank, RejectsNonPositiveS) {
  const auto idx = index_on(testing::path_graph(4), 1);
  EXPECT_THROW(katz_rank(idx, 0, 0), InvalidArgumentError);
}

TEST(KatzRank, MatchesDenseOracleUpToTies) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Graph g = testing::random_connected_graph(150, seed, seed % 2 == 1);
    const auto idx = index_on(g, 6);
    const auto kmat = oracle::dense_katz_matrix(g, idx.alpha);
    for (Index q = 0; q < 150; q += 37) {
      const auto got = nodes_of(katz_rank(idx, q, 20, tight()));
      std::vector<double> ref;
      for (Index x = 0; x < 150; ++x)
        if (x != q && !g.has_edge(q, x)) ref.push_back(kmat(x, q));
      std::sort(ref.rbegin(), ref.rend());
      ASSERT_EQ(got.size(), std::min<std::size_t>(20, ref.size()));
      const double scale = kmat.col(q).cwiseAbs().maxCoeff();
      for (std::size_t i = 0; i < got.size(); ++i) {
        EXPECT_FALSE(g.has_edge(q, got[i]));
        EXPECT_NE(got[i], q);
        EXPECT_NEAR(kmat(got[i], q), ref[i], 1e-8 * scale) << "seed " << seed << " q " << q << " rank " << i;
      }
    }
  }
}

// ---- pearson

TEST(Pearson, KnownValues) {
  const Vector x{1, 2, 3, 4};
  const Vector neg{-1, -2, -3, -4};
  EXPECT_DOUBLE_EQ(pearson(x, x), 1.0);
  EXPECT_DOUBLE_EQ(pearson(x, neg), -1.0);
  EXPECT_NEAR(pearson(Vector{1, 2, 3}, Vector{1, 2, 4}), 0.9819805060619657, 1e-12);
  EXPECT_EQ(pearson(x, Vector{5, 5, 5, 5}), 0.0);
}

TEST(Pearson, Errors) {
  EXPECT_THROW(pearson(Vector{1}, Vector{1}), InvalidArgumentError);
  EXPECT_THROW(pearson(Vector{1, 2}, Vector{1, 2, 3}), DimensionError);
}

TEST(RerankByCorrelation, TiesKeepKatzOrder) {
  const std::vector<Index> cand{7, 3, 9, 1};
  const std::vector<double> corr{0.5, 0.9, 0.5 + 1e-12, 0.1};
  const auto r = rerank_by_correlation(cand, corr);
  ASSERT_EQ(r.size(), 4u);
  EXPECT_EQ(r[0].node, 3);
  EXPECT_EQ(r[1].node, 7);  // tied with 9, earlier in Katz order
  EXPECT_EQ(r[2].node, 9);
  EXPECT_EQ(r[3].node, 1);
  EXPECT_EQ(r[0].score, 0.9);
}

// ---- sparse_katz

TEST(SparseKatz, SingleCandidateIsUnchanged) {
  const auto idx = index_on(testing::random_connected_graph(60, 4), 3);
  for (Index q : {0, 10, 59}) {
    const auto k = katz_rank(idx, q, 1);
    const auto s = sparse_katz(idx, q, 1);
    EXPECT_EQ(nodes_of(k), nodes_of(s));
    EXPECT_EQ(s.anchors.size(), 2u);
  }
}

TEST(SparseKatz, AutomorphicCandidatesKeepIdOrder) {
  const auto idx = index_on(testing::star_graph(4), 1);
  const auto r = sparse_katz(idx, 1, 3);
  EXPECT_EQ(nodes_of(r), (std::vector<Index>{2, 3, 4}));
  EXPECT_EQ(r.anchors, (std::vector<Index>{0, 2, 3, 4}));
}

TEST(SparseKatz, SameCandidateSetAsKatz) {
  const auto idx = index_on(testing::random_connected_graph(120, 8, true), 5);
  for (Index q = 0; q < 120; q += 13) {
    QueryContext ctx(idx, q);
    auto a = nodes_of(ctx.katz(15)), b = nodes_of(ctx.sparse_katz(15));
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    EXPECT_EQ(a, b);
    EXPECT_EQ(ctx.anchor_solves(), 16);
  }
}

TEST(SparseKatz, MatchesDenseOracle) {
  Index exact = 0, total = 0;
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const Graph g = testing::random_connected_graph(100 + 20 * static_cast<Index>(seed), seed, seed % 2 == 0);
    const auto idx = index_on(g, 5);
    const auto kmat = oracle::dense_katz_matrix(g, idx.alpha);
    for (Index q = 0; q < g.num_nodes(); q += 29) {
      const auto got = sparse_katz(idx, q, 10, std::nullopt, tight());
      std::vector<Index> cand;
      for (Index x : katz_order(g, oracle::from_eigen(kmat.col(q)), q, true)) {
        if (static_cast<Index>(cand.size()) == 10) break;
        cand.push_back(x);
      }
      const auto ref = oracle::sparse_katz_rerank(kmat, q, cand, got.anchors);
      ++total;
      bool same = ref.size() == got.candidates.size();
      for (std::size_t i = 0; same && i < ref.size(); ++i) same = ref[i].node == got.candidates[i].node;
      if (same) {
        ++exact;
        continue;
      }
      // any difference must sit inside a correlation tie
      ASSERT_EQ(ref.size(), got.candidates.size());
      for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(ref[i].score, got.candidates[i].score, 1e-8);
    }
  }
  EXPECT_GE(static_cast<double>(exact), 0.95 * static_cast<double>(total));
}

TEST(SparseKatz, AnchorCountMustBeBelowN) {
  const auto idx = index_on(testing::path_graph(6), 1);
  EXPECT_THROW(sparse_katz(idx, 0, 2, Index{6}), InvalidArgumentError);
  EXPECT_THROW(sparse_katz(idx, 0, 5), InvalidArgumentError);  // default T = s + 1 = 6
  EXPECT_NO_THROW(sparse_katz(idx, 0, 2, Index{5}));
}

// ---- recall_at

TEST(RecallAt, Extremes) {
  EXPECT_EQ(recall_at(std::vector<Index>{1, 2, 3}, std::vector<Index>{3, 1}), 1.0);
  EXPECT_EQ(recall_at(std::vector<Index>{1, 2, 3}, std::vector<Index>{4, 5}), 0.0);
  EXPECT_EQ(recall_at(std::vector<Index>{1, 2, 3}, std::vector<Index>{2, 5}), 0.5);
  EXPECT_THROW(recall_at(std::vector<Index>{1}, std::vector<Index>{}), InvalidArgumentError);
}

TEST(Buckets, Boundaries) {
  EXPECT_EQ(bucket_for_degree(1), Bucket::low);
  EXPECT_EQ(bucket_for_degree(3), Bucket::low);
  EXPECT_EQ(bucket_for_degree(4), Bucket::mid);
  EXPECT_EQ(bucket_for_degree(10), Bucket::mid);
  EXPECT_EQ(bucket_for_degree(11), Bucket::high);
  EXPECT_EQ(bucket_name(Bucket::low), "1-3");
  EXPECT_EQ(bucket_name(Bucket::mid), "4-10");
  EXPECT_EQ(bucket_name(Bucket::high), "11+");
}

// ---- temporal_split

TEST(TemporalSplit, NothingAfterTheCutoff) {
  const std::vector<TimedEdge> e{{0, 1, 1}, {1, 2, 2}, {2, 3, 3}};
  const auto ds = temporal_split(e, 3);
  EXPECT_TRUE(ds.positives.empty());
  EXPECT_EQ(ds.train.num_nodes(), 4);
  const auto idx = index_on(ds.train, 1);
  EXPECT_THROW(evaluate_recall(idx, ds, std::vector<Index>{0}, RecallOptions{}), EmptyPositivesError);
}

TEST(TemporalSplit, SinglePostCutoffPair) {
  const std::vector<TimedEdge> e{{10, 11, 1}, {11, 12, 1}, {12, 13, 1}, {13, 10, 5}, {11, 12, 6}, {10, 99, 7}};
  const auto ds = temporal_split(e, 1);
  ASSERT_EQ(ds.positives.size(), 1u);  // 11-12 already a train edge, 99 not a train node
  const auto& p = ds.positives[0];
  EXPECT_EQ(ds.train.original_id(p.u), 10);
  EXPECT_EQ(ds.train.original_id(p.v), 13);
  EXPECT_EQ(p.bucket, Bucket::low);
  EXPECT_EQ(query_nodes(ds), (std::vector<Index>{p.u, p.v}));
}

TEST(TemporalSplit, CutoffOutsideTheRange) {
  const std::vector<TimedEdge> e{{0, 1, 5}, {1, 2, 9}};
  EXPECT_THROW(temporal_split(e, 4), InvalidArgumentError);
  EXPECT_THROW(temporal_split(e, 10), InvalidArgumentError);
  EXPECT_NO_THROW(temporal_split(e, 5));
  EXPECT_THROW(temporal_split(std::vector<TimedEdge>{}, 0), InvalidArgumentError);
}

TEST(TemporalSplit, ThreeSnapshotsMatchBruteForce) {
  Rng rng(77);
  std::vector<TimedEdge> e;
  for (int snap = 1; snap <= 3; ++snap)
    for (int k = 0; k < 120; ++k) {
      const auto u = static_cast<std::int64_t>(rng.below(60)), v = static_cast<std::int64_t>(rng.below(60));
      e.push_back({100 + u, 100 + v, snap});
    }
  const auto ds = temporal_split(e, 2);
  // brute force: train edge set, LCC by repeated relaxation of labels
  std::set<std::pair<std::int64_t, std::int64_t>> train;
  for (const auto& x : e)
    if (x.t <= 2 && x.u != x.v) train.insert(std::minmax(x.u, x.v));
  std::map<std::int64_t, std::int64_t> label;
  for (auto [a, b] : train) label[a] = a, label[b] = b;
  for (bool changed = true; changed;) {
    changed = false;
    for (auto [a, b] : train) {
      const auto m = std::min(label[a], label[b]);
      if (label[a] != m || label[b] != m) label[a] = label[b] = m, changed = true;
    }
  }
  std::map<std::int64_t, int> size;
  for (auto [id, l] : label) ++size[l];
  std::int64_t best = -1;
  for (auto [l, s] : size)
    if (best < 0 || s > size[best]) best = l;
  std::set<std::int64_t> lcc;
  for (auto [id, l] : label)
    if (l == best) lcc.insert(id);
  ASSERT_EQ(ds.train.num_nodes(), static_cast<Index>(lcc.size()));
  std::map<std::int64_t, int> degree;
  Index train_edges = 0;
  for (auto [a, b] : train)
    if (lcc.count(a)) ++degree[a], ++degree[b], ++train_edges;
  EXPECT_EQ(ds.train.num_edges(), train_edges);

  std::set<std::pair<std::int64_t, std::int64_t>> pos;
  for (const auto& x : e)
    if (x.t > 2 && x.u != x.v && lcc.count(x.u) && lcc.count(x.v) && !train.count(std::minmax(x.u, x.v)))
      pos.insert(std::minmax(x.u, x.v));
  ASSERT_EQ(ds.positives.size(), pos.size());
  for (const auto& p : ds.positives) {
    const auto a = ds.train.original_id(p.u), b = ds.train.original_id(p.v);
    EXPECT_LT(p.u, p.v);
    EXPECT_TRUE(pos.count(std::minmax(a, b)));
    EXPECT_EQ(p.bucket, bucket_for_degree(std::min(degree[a], degree[b])));
  }
}

TEST(TimedEdges, ParseAndWrite) {
  std::istringstream in("# header\n1 2 10\n\n2 3 11\n");
  const auto e = load_timed_edges(in);
  ASSERT_EQ(e.size(), 2u);
  EXPECT_EQ(e[1], (TimedEdge{2, 3, 11}));
  std::ostringstream out;
  write_timed_edges(out, e);
  EXPECT_EQ(out.str(), "1 2 10\n2 3 11\n");
  std::istringstream bad("1 2\n");
  EXPECT_THROW(load_timed_edges(bad), ParseError);
}

// ---- recall evaluation

struct TemporalFixture {
  LinkPredDataset ds;
  KatzIndex idx;
};

TemporalFixture small_temporal() {
  synthetic::TemporalPaConfig cfg;
  cfg.nodes = 300;
  cfg.seed = 3;
  const auto edges = synthetic::temporal_preferential_attachment(cfg);
  TemporalFixture f;
  f.ds = temporal_split(edges, 240);
  f.idx = index_on(f.ds.train, 6);
  return f;
}

TEST(Recall, KatzMatchesBruteForceOverDenseK) {
  const auto f = small_temporal();
  const Graph& g = f.ds.train;
  ASSERT_FALSE(f.ds.positives.empty());
  const auto kmat = oracle::dense_katz_matrix(g, f.idx.alpha);
  RecallOptions o;
  o.s_values = {5, 20};
  o.methods = {Method::katz};
  o.solver = tight();
  const auto queries = query_nodes(f.ds);
  const auto rows = evaluate_recall(f.idx, f.ds, queries, o);
  ASSERT_EQ(rows.size(), 8u);

  for (Index s : o.s_values) {
    std::array<std::vector<double>, bucket_count + 1> samples;
    for (Index q : queries) {
      const auto order = katz_order(g, oracle::from_eigen(kmat.col(q)), q, true);
      std::set<Index> top(order.begin(), order.begin() + std::min<std::ptrdiff_t>(s, std::ssize(order)));
      std::array<std::pair<int, int>, bucket_count> hit{};
      for (const auto& p : f.ds.positives) {
        if (p.u != q && p.v != q) continue;
        const Index other = p.u == q ? p.v : p.u;
        auto& h = hit[static_cast<int>(p.bucket)];
        ++h.second;
        h.first += static_cast<int>(top.count(other));
      }
      int all_hit = 0, all_n = 0;
      for (int b = 0; b < bucket_count; ++b) {
        if (hit[b].second == 0) continue;
        samples[b].push_back(static_cast<double>(hit[b].first) / hit[b].second);
        all_hit += hit[b].first;
        all_n += hit[b].second;
      }
      samples[bucket_count].push_back(static_cast<double>(all_hit) / all_n);
    }
    for (const auto& row : rows) {
      if (row.s != s) continue;
      const auto& v = samples[row.bucket ? static_cast<int>(*row.bucket) : bucket_count];
      EXPECT_EQ(row.n_queries, static_cast<Index>(v.size()));
      if (v.empty()) {
        EXPECT_TRUE(std::isnan(row.mean_recall));
        continue;
      }
      double mean = 0.0;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      double var = 0.0;
      for (double x : v) var += (x - mean) * (x - mean);
      EXPECT_NEAR(row.mean_recall, mean, 1e-12);
      EXPECT_NEAR(row.std_recall, std::sqrt(var / static_cast<double>(v.size())), 1e-12);
    }
  }
}

TEST(Recall, SparseKatzEqualsKatzAtEveryS) {
  // same Top-s set, so recall@s coincides; the reranking only changes order
  const auto f = small_temporal();
  RecallOptions o;
  o.s_values = {5, 10};
  const auto q = sample_queries(f.ds, 25, 9);
  const auto rows = evaluate_recall(f.idx, f.ds, q, o);
  ASSERT_EQ(rows.size(), 16u);
  for (std::size_t i = 0; i < 8; ++i) {
    EXPECT_EQ(rows[i].method, Method::katz);
    EXPECT_EQ(rows[i + 8].method, Method::sparse_katz);
    EXPECT_EQ(rows[i].n_queries, rows[i + 8].n_queries);
    if (rows[i].n_queries > 0) {
      EXPECT_EQ(rows[i].mean_recall, rows[i + 8].mean_recall);
    }
  }
}

TEST(Recall, ParallelEqualsSerial) {
  const auto f = small_temporal();
  RecallOptions o;
  o.s_values = {5};
  const auto q = sample_queries(f.ds, 20, 4);
  const auto serial = per_query_recall(f.idx, f.ds, q, o);
  o.workers = 4;
  const auto par = per_query_recall(f.idx, f.ds, q, o);
  ASSERT_EQ(serial.size(), par.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    EXPECT_EQ(serial[i].query, par[i].query);
    EXPECT_EQ(serial[i].recall, par[i].recall);
  }
}

TEST(Recall, SampleQueriesIsSeededAndSorted) {
  const auto f = small_temporal();
  const auto a = sample_queries(f.ds, 10, 5), b = sample_queries(f.ds, 10, 5);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.size(), 10u);
  EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
  EXPECT_EQ(sample_queries(f.ds, 0, 5), query_nodes(f.ds));
}

TEST(RecallCsv, Shape) {
  std::vector<RecallRow> rows;
  for (Method m : {Method::katz, Method::sparse_katz})
    for (Index s : {10, 50, 100})
      for (int b = 0; b <= bucket_count; ++b) {
        RecallRow r{m, std::nullopt, s, 0.25, 0.5, 7};
        if (b < bucket_count) r.bucket = static_cast<Bucket>(b);
        rows.push_back(r);
      }
  std::ostringstream out;
  write_recall_csv(out, rows);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "method,bucket,s,mean_recall,std_recall,n_queries");
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 5);
  }
  EXPECT_EQ(n, 18);
  EXPECT_NE(out.str().find("sparse-katz,4-10,50,0.25,0.5,7\n"), std::string::npos);
  std::ostringstream all;
  write_recall_csv(all, rows, true);
  EXPECT_NE(all.str().find("katz,all,10,"), std::string::npos);
}

}  // namespace
}  // namespace lrckatz
