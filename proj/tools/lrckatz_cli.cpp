// lrckatz command-line tool: build an index, query Katz vectors, benchmark
// the solver against plain CG, and run the temporal link-prediction harness.
//
// Exit codes: 0 ok, 1 other failure, 2 usage or input parse error,
// 3 inadmissible alpha, 4 I/O error, 5 unknown node, 6 no positive pairs.
// stdout carries data (stats, vectors, CSV); stderr carries logs.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "lrckatz.hpp"
#include "lrckatz/synthetic.hpp"

namespace {

using namespace lrckatz;

enum ExitCode : int {
  exit_ok = 0,
  exit_failure = 1,
  exit_parse = 2,
  exit_alpha = 3,
  exit_io = 4,
  exit_unknown_node = 5,
  exit_empty_positives = 6,
};

bool g_quiet = false;

template <class... Args>
void log(const Args&... args) {
  if (g_quiet) return;
  std::cerr << "[lrckatz] ";
  (std::cerr << ... << args);
  std::cerr << '\n';
}

std::ifstream open_in(const std::string& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return in;
}

/// Output stream: the file at `path`, or stdout for "" and "-".
class Output {
 public:
  explicit Output(const std::string& path, bool binary = false) : path_(path) {
    if (!path.empty() && path != "-") {
      file_ = std::make_unique<std::ofstream>(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
      if (!*file_) throw IoError("cannot open '" + path + "' for writing");
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }
  void close() {
    stream().flush();
    if (!stream()) throw IoError("failed writing '" + (path_.empty() ? std::string("stdout") : path_) + "'");
    if (file_) file_->close();
  }

 private:
  std::string path_;
  std::unique_ptr<std::ofstream> file_;
};

EdgeListFormat parse_format(const std::string& s) {
  if (s == "csv") return EdgeListFormat::csv;
  if (s == "whitespace") return EdgeListFormat::whitespace;
  return EdgeListFormat::automatic;
}

unsigned resolve_workers(unsigned requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

// ---------------------------------------------------------------------------
// build

struct BuildArgs {
  std::string graph;
  std::string out;
  std::string stats;
  std::string id_map;
  std::string format = "auto";
  std::optional<double> alpha;
  bool hardest = false;
  Index ell = 25;
  Index max_part = 0;
  double sep_frac = 0.15;
  std::uint64_t seed = 42;
};

int run_build(const BuildArgs& a) {
  auto in = open_in(a.graph);
  const Graph full = load_edge_list(in, parse_format(a.format));
  log("loaded ", a.graph, ": ", full.num_nodes(), " nodes, ", full.num_edges(), " edges");
  const Graph g = largest_connected_component(full);
  if (g.num_nodes() != full.num_nodes())
    log("kept the largest connected component: ", g.num_nodes(), " nodes, ", g.num_edges(), " edges");

  BuildOptions o;
  if (a.alpha) o.alpha = *a.alpha;
  o.ell = a.ell;
  o.seed = a.seed;
  PartitionConfig cfg = PartitionConfig::defaults_for(g.num_nodes());
  if (a.max_part > 0) cfg.max_part_size = a.max_part;
  cfg.max_separator_fraction = a.sep_frac;
  o.partition = cfg;

  BuildStats st;
  const KatzIndex idx = build_index(g, o, &st);
  if (st.separator_exceeded)
    log("warning: separator holds ", st.n2, " of ", st.n, " nodes (more than ", a.sep_frac, " of the graph)");
  if (!st.lanczos_converged) log("warning: Lanczos stopped before every Ritz pair met the tolerance");

  Output out(a.out, true);
  save_index(idx, out.stream());
  out.close();
  log("wrote index to ", a.out);
  if (!a.id_map.empty()) {
    Output ids(a.id_map);
    write_id_map(ids.stream(), idx.graph.original_ids());
    ids.close();
  }
  Output stats(a.stats);
  write_build_stats(stats.stream(), st);
  stats.close();
  return exit_ok;
}

// ---------------------------------------------------------------------------
// query

struct QueryArgs {
  std::string index;
  std::int64_t node = 0;
  double tol = 1e-8;
  Index max_iter = 0;
  Index top = 10;
  std::string out;
};

int run_query(const QueryArgs& a) {
  auto in = open_in(a.index, true);
  const KatzIndex idx = load_index(in);
  QueryOptions qo;
  qo.tol = a.tol;
  qo.max_iter = a.max_iter;
  const auto [k, rep] = query(idx, a.node, qo);
  if (!g_quiet) write_solve_report(std::cerr, rep);
  if (!rep.converged) log("warning: the solve did not reach the tolerance");

  Output out(a.out);
  auto& os = out.stream();
  os.precision(17);
  const Graph& g = idx.graph;
  if (a.top == 0) {
    for (Index i = 0; i < g.num_nodes(); ++i) os << g.original_id(i) << ' ' << k.scores[i] << '\n';
  } else {
    const auto order = katz_order(g, k.scores, k.query, false);
    const auto take = std::min<std::size_t>(static_cast<std::size_t>(a.top), order.size());
    for (std::size_t i = 0; i < take; ++i) os << g.original_id(order[i]) << ' ' << k.scores[order[i]] << '\n';
  }
  out.close();
  return exit_ok;
}

// ---------------------------------------------------------------------------
// bench

struct BenchArgs {
  std::string index;
  Index queries = 100;
  std::uint64_t seed = 1;
  bool baseline_cg = false;
  double tol = 1e-8;
  unsigned threads = 1;
  std::string out;
};

struct BenchRow {
  std::int64_t query = 0;
  std::string method;
  SolveReport report;
};

int run_bench(const BenchArgs& a) {
  auto in = open_in(a.index, true);
  const KatzIndex idx = load_index(in);
  const Index n = idx.num_nodes();
  if (a.queries < 1 || a.queries > n)
    throw InvalidArgumentError("--queries must be between 1 and the number of nodes (" + std::to_string(n) + ")");
  Rng rng(a.seed);
  auto picked = rng.sample(n, a.queries);
  std::sort(picked.begin(), picked.end());
  const unsigned workers = resolve_workers(a.threads);
  log("bench: ", picked.size(), " queries, n2 = ", idx.n2(), ", ell = ", idx.correction.ell, ", ", workers,
      " worker(s)");

  const std::size_t per_query = a.baseline_cg ? 2 : 1;
  std::vector<BenchRow> rows(picked.size() * per_query);
  QueryOptions qo;
  qo.tol = a.tol;
  parallel_for(static_cast<Index>(picked.size()), workers, [&](Index i) {
    const Index q = static_cast<Index>(picked[i]);
    const std::int64_t id = idx.graph.original_id(q);
    rows[i * per_query] = {id, "lrc", query_internal(idx, q, qo).second};
    if (a.baseline_cg) rows[i * per_query + 1] = {id, "cg", full_cg_query(idx.graph, idx.alpha, q, a.tol).second};
  });
  std::stable_sort(rows.begin(), rows.end(), [](const BenchRow& x, const BenchRow& y) {
    return std::tie(x.query, x.method) < std::tie(y.query, y.method);
  });

  Output out(a.out);
  auto& os = out.stream();
  os.precision(10);
  os << "query,method,iterations,wall_time,residual,converged\n";
  std::map<std::string, std::pair<double, double>> sums;  // method -> (iterations, seconds)
  for (const auto& r : rows) {
    os << r.query << ',' << r.method << ',' << r.report.iterations << ',' << r.report.wall_seconds << ','
       << r.report.final_residual_norm << ',' << (r.report.converged ? 1 : 0) << '\n';
    sums[r.method].first += static_cast<double>(r.report.iterations);
    sums[r.method].second += r.report.wall_seconds;
  }
  out.close();
  const double count = static_cast<double>(picked.size());
  for (const auto& [method, s] : sums)
    log("mean ", method, ": iterations ", s.first / count, ", wall_time ", s.second / count, " s");
  return exit_ok;
}

// ---------------------------------------------------------------------------
// linkpred

struct LinkPredArgs {
  std::string edges;
  std::int64_t cutoff = 0;
  std::vector<Index> s_values{10, 50, 100};
  std::optional<Index> T;
  std::string method = "both";
  Index queries = 0;
  std::uint64_t seed = 1;
  std::optional<double> alpha;
  Index ell = 25;
  double tol = 1e-8;
  unsigned threads = 1;
  bool include_overall = false;
  std::string out;
};

int run_linkpred(const LinkPredArgs& a) {
  auto in = open_in(a.edges);
  const auto edges = load_timed_edges(in);
  const auto ds = temporal_split(edges, a.cutoff);
  log("train graph: ", ds.train.num_nodes(), " nodes, ", ds.train.num_edges(), " edges; ", ds.positives.size(),
      " positive pairs after cutoff ", a.cutoff);
  if (ds.positives.empty()) throw EmptyPositivesError("no positive pairs after the cutoff: nothing to evaluate");

  BuildOptions bo;
  if (a.alpha) bo.alpha = *a.alpha;
  bo.ell = a.ell;
  bo.seed = a.seed;
  BuildStats st;
  const KatzIndex idx = build_index(ds.train, bo, &st);
  log("index: alpha ", idx.alpha, ", n2 ", st.n2, ", ell ", st.ell, ", ", st.seconds_total, " s");

  RecallOptions ro;
  ro.s_values = a.s_values;
  ro.T = a.T;
  if (a.method == "katz") ro.methods = {Method::katz};
  else if (a.method == "sparse-katz") ro.methods = {Method::sparse_katz};
  ro.workers = resolve_workers(a.threads);
  ro.solver.tol = a.tol;
  const auto queries = sample_queries(ds, a.queries, a.seed);
  log("evaluating ", queries.size(), " query nodes with ", ro.workers, " worker(s)");
  const auto rows = evaluate_recall(idx, ds, queries, ro);

  Output out(a.out);
  write_recall_csv(out.stream(), rows, a.include_overall);
  out.close();
  if (!a.include_overall && !g_quiet) {
    for (const auto& r : rows)
      if (!r.bucket)
        log("overall ", method_name(r.method), " recall@", r.s, ": ", r.mean_recall, " (std ", r.std_recall, ", ",
            r.n_queries, " queries)");
  }
  return exit_ok;
}

// ---------------------------------------------------------------------------
// generate

struct GenerateArgs {
  std::string kind = "temporal-pa";
  Index nodes = 1000;
  Index m = 3;
  Index closure = 3;
  double p = 0.01;
  std::uint64_t seed = 7;
  std::string out;
};

int run_generate(const GenerateArgs& a) {
  Output out(a.out);
  auto& os = out.stream();
  if (a.kind == "temporal-pa") {
    synthetic::TemporalPaConfig cfg;
    cfg.nodes = a.nodes;
    cfg.m = a.m;
    cfg.closure_per_step = a.closure;
    cfg.seed = a.seed;
    write_timed_edges(os, synthetic::temporal_preferential_attachment(cfg));
  } else {
    const Graph g = a.kind == "ba" ? synthetic::barabasi_albert(a.nodes, a.m, a.seed)
                                   : synthetic::erdos_renyi(a.nodes, a.p, a.seed);
    for (Index u = 0; u < g.num_nodes(); ++u)
      for (Index v : g.neighbors(u))
        if (u < v) os << u << ' ' << v << '\n';
  }
  out.close();
  return exit_ok;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ParseError*>(&e)) return exit_parse;
  if (dynamic_cast<const InvalidArgumentError*>(&e)) return exit_parse;
  if (dynamic_cast<const AlphaError*>(&e)) return exit_alpha;
  if (dynamic_cast<const IoError*>(&e)) return exit_io;
  if (dynamic_cast<const IndexFormatError*>(&e)) return exit_io;
  if (dynamic_cast<const UnknownNodeError*>(&e)) return exit_unknown_node;
  if (dynamic_cast<const EmptyPositivesError*>(&e)) return exit_empty_positives;
  return exit_failure;
}

/// key=value config reader: keys outside a [section] that are not global
/// options belong to the selected subcommand, so a file can say "ell=5"
/// instead of "build.ell=5".
class SubcommandConfig : public CLI::ConfigINI {
 public:
  explicit SubcommandConfig(const CLI::App* app) : app_(app) {}

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    auto items = CLI::ConfigINI::from_config(input);
    const auto selected = app_->get_subcommands();
    if (selected.empty()) return items;
    for (auto& item : items) {
      if (!item.parents.empty() || item.name == "++" || item.name == "--") continue;
      if (app_->get_option_no_throw("--" + item.name) != nullptr) continue;
      item.parents = {selected.front()->get_name()};
    }
    return items;
  }

 private:
  const CLI::App* app_;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact Katz proximity with partition-based indexing and low-rank corrected PCG"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "key=value file with option defaults; command-line flags override it");
  app.config_formatter(std::make_shared<SubcommandConfig>(&app));
  app.add_flag("-q,--quiet", g_quiet, "suppress log output on stderr");
  app.footer(
      "Exit codes: 0 ok, 1 failure, 2 usage/parse error, 3 inadmissible alpha, 4 I/O error, 5 unknown node, "
      "6 no positive pairs.\nLRCKATZ_THREADS sets the default worker count of bench and linkpred.\n"
      "Precedence: command-line flags, then the --config file, then LRCKATZ_THREADS.");

  BuildArgs ba;
  auto* build = app.add_subcommand("build", "build an index from an edge list");
  build->add_option("graph", ba.graph, "edge list (whitespace or csv, '#' comments)")->required();
  build->add_option("-o,--out", ba.out, "index file")->required();
  auto* alpha_opt = build->add_option("--alpha", ba.alpha, "Katz decay; must satisfy alpha < 1/||G||_2");
  build->add_flag("--hardest", ba.hardest, "alpha = 1/(||G||_2 + 1) (the default)")->excludes(alpha_opt);
  build->add_option("--ell", ba.ell, "rank of the low-rank correction")->capture_default_str()->check(CLI::NonNegativeNumber);
  build->add_option("--max-part", ba.max_part, "largest part of the partition (0: automatic)")
      ->check(CLI::NonNegativeNumber);
  build->add_option("--sep-frac", ba.sep_frac, "separator fraction above which a warning is issued")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  build->add_option("--seed", ba.seed, "Lanczos start vector seed")->capture_default_str();
  build->add_option("--stats", ba.stats, "write build statistics here instead of stdout");
  build->add_option("--id-map", ba.id_map, "write 'internal original' id pairs here");
  build->add_option("--format", ba.format, "edge list format")
      ->capture_default_str()
      ->check(CLI::IsMember({"auto", "whitespace", "csv"}));

  QueryArgs qa;
  auto* qry = app.add_subcommand("query", "Katz proximity vector of one node");
  qry->add_option("index", qa.index, "index file")->required();
  qry->add_option("--node", qa.node, "original id of the query node")->required();
  qry->add_option("--tol", qa.tol, "relative residual tolerance")->capture_default_str()->check(CLI::PositiveNumber);
  qry->add_option("--max-iter", qa.max_iter, "PCG iteration cap (0: 10 * n2)")->check(CLI::NonNegativeNumber);
  qry->add_option("--top", qa.top, "number of highest-scoring nodes to print; 0 prints the full vector by id")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  qry->add_option("-o,--out", qa.out, "output file (default stdout)");

  BenchArgs be;
  auto* bench = app.add_subcommand("bench", "iteration counts and timings over sampled query nodes");
  bench->add_option("index", be.index, "index file")->required();
  bench->add_option("--queries", be.queries, "number of sampled query nodes")->capture_default_str();
  bench->add_option("--seed", be.seed, "sampling seed")->capture_default_str();
  bench->add_flag("--baseline-cg", be.baseline_cg, "also run plain CG on the full system");
  bench->add_option("--tol", be.tol, "relative residual tolerance")->capture_default_str()->check(CLI::PositiveNumber);
  bench->add_option("--threads", be.threads, "worker threads (0: all cores)")
      ->envname("LRCKATZ_THREADS")
      ->capture_default_str();
  bench->add_option("-o,--out", be.out, "CSV file (default stdout)");

  LinkPredArgs la;
  auto* lp = app.add_subcommand("linkpred", "temporal-split recall of Katz and Sparse-Katz");
  lp->add_option("edges", la.edges, "timestamped edge list 'u v epoch'")->required();
  lp->add_option("--cutoff", la.cutoff, "last epoch of the training graph")->required();
  lp->add_option("--s", la.s_values, "list sizes, comma separated")->delimiter(',')->capture_default_str();
  lp->add_option("--T", la.T, "Sparse-Katz anchor count (default s + 1)")->check(CLI::PositiveNumber);
  lp->add_option("--method", la.method, "katz, sparse-katz or both")
      ->capture_default_str()
      ->check(CLI::IsMember({"katz", "sparse-katz", "both"}));
  lp->add_option("--queries", la.queries, "sampled query nodes (0: every endpoint of a positive pair)")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  lp->add_option("--seed", la.seed, "sampling and Lanczos seed")->capture_default_str();
  lp->add_option("--alpha", la.alpha, "Katz decay (default 1/(||G||_2 + 1))");
  lp->add_option("--ell", la.ell, "rank of the low-rank correction")->capture_default_str();
  lp->add_option("--tol", la.tol, "relative residual tolerance")->capture_default_str()->check(CLI::PositiveNumber);
  lp->add_option("--threads", la.threads, "worker threads (0: all cores)")
      ->envname("LRCKATZ_THREADS")
      ->capture_default_str();
  lp->add_flag("--include-overall", la.include_overall, "also emit bucket=all rows");
  lp->add_option("-o,--out", la.out, "CSV file (default stdout)");

  GenerateArgs ga;
  auto* gen = app.add_subcommand("generate", "synthetic graphs for experiments");
  gen->add_option("--kind", ga.kind, "temporal-pa, ba or er")
      ->capture_default_str()
      ->check(CLI::IsMember({"temporal-pa", "ba", "er"}));
  gen->add_option("--nodes", ga.nodes, "number of nodes")->capture_default_str()->check(CLI::PositiveNumber);
  gen->add_option("--m", ga.m, "attachment edges per arriving node")->capture_default_str()->check(CLI::PositiveNumber);
  gen->add_option("--closure", ga.closure, "densification edges per step (temporal-pa)")->capture_default_str();
  gen->add_option("--p", ga.p, "edge probability (er)")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  gen->add_option("--seed", ga.seed, "generator seed")->capture_default_str();
  gen->add_option("-o,--out", ga.out, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_parse;
  }

  try {
    if (*build) return run_build(ba);
    if (*qry) return run_query(qa);
    if (*bench) return run_bench(be);
    if (*lp) return run_linkpred(la);
    if (*gen) return run_generate(ga);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return exit_failure;
}
