#include "commands.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include "bench.hpp"
#include "bpann/disk_index.hpp"
#include "bpann/edges.hpp"
#include "bpann/error.hpp"
#include "bpann/hcluster.hpp"
#include "bpann/knn.hpp"
#include "bpann/page_file.hpp"
#include "bpann/parallel.hpp"
#include "bpann/search.hpp"
#include "bpann/texmex.hpp"
#include "bpann/tree.hpp"
#include "bpann/views.hpp"
#include "bpann/workload.hpp"

namespace bpann::cli {

using json = nlohmann::json;

int exit_code_for(const std::exception& e) {
  const auto* err = dynamic_cast<const Error*>(&e);
  if (!err) return kExitOther;
  switch (err->kind()) {
    case ErrorKind::usage: return kExitUsage;
    case ErrorKind::format: return kExitFormat;
    case ErrorKind::integrity: return kExitIntegrity;
    case ErrorKind::storage: return kExitStorage;
    case ErrorKind::domain: return kExitDomain;
  }
  return kExitOther;
}

std::size_t cli_default_threads() {
  if (const char* env = std::getenv("BPANN_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return v;
  }
  return 10;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

struct Opened {
  std::unique_ptr<NodeStore> store;
  DiskIndex* disk = nullptr;  // null when loaded whole
};

Opened open_index(const std::string& path, std::optional<std::uint64_t> cache_bytes,
                  std::optional<double> cache_fraction, bool in_memory) {
  Opened o;
  if (in_memory) {
    o.store = std::make_unique<BPlusAnnTree>(load_tree(path));
    return o;
  }
  OpenOptions oo;
  oo.read_only = true;
  if (cache_bytes) oo.cache_capacity_bytes = *cache_bytes;
  if (cache_fraction) {
    if (!(*cache_fraction > 0.0)) throw UsageError("--cache-fraction must be positive");
    const auto size = static_cast<double>(std::filesystem::file_size(path));
    oo.cache_capacity_bytes = static_cast<std::uint64_t>(size * *cache_fraction);
  }
  auto ix = DiskIndex::open(path, oo);
  o.disk = ix.get();
  o.store = std::move(ix);
  return o;
}

std::vector<float> parse_vector(const std::string& text) {
  std::vector<float> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stof(item, &used));
      if (used != item.size() && item.find_first_not_of(" \t", used) != std::string::npos) {
        throw UsageError("bad vector component '" + item + "'");
      }
    } catch (const std::logic_error&) {
      throw UsageError("bad vector component '" + item + "'");
    }
  }
  if (v.empty()) throw UsageError("--vector is empty");
  return v;
}

// ---------------------------------------------------------------------------

struct BuildArgs {
  std::string data, out, metric = "euclidean";
  std::size_t kappa_leaf = 2048, kappa_inner = 1024, tau = 0, branching = 10, iters = 25;
  std::size_t d_edge = 128, s_leaf = 512, page_size = kDefaultPageSize, threads = 0;
  std::uint64_t seed = 42;
  bool no_edges = false;
};

int cmd_build(const BuildArgs& a, std::ostream& out) {
  const auto t_load = Clock::now();
  const VectorSet set = read_vectors(a.data);
  if (set.empty()) throw UsageError(a.data + ": dataset is empty");
  const double load_s = seconds_since(t_load);

  BuildParams bp;
  bp.kappa_leaf = a.kappa_leaf;
  bp.kappa_inner = a.kappa_inner;
  bp.metric = parse_metric(a.metric);
  bp.seed = a.seed;
  bp.validate();
  KMeansParams kp;
  kp.K = a.branching;
  kp.J = a.iters;
  kp.seed = a.seed;
  kp.threads = a.threads;
  kp.validate();

  const auto t_cluster = Clock::now();
  const ClusterNode h = hcluster(set, a.tau == 0 ? a.kappa_leaf : a.tau, kp, bp.metric);
  const double cluster_s = seconds_since(t_cluster);

  const auto t_tree = Clock::now();
  BPlusAnnTree tree = build_tree(h, set, bp);
  const double tree_s = seconds_since(t_tree);

  double edge_s = 0.0;
  EdgeBuildStats es;
  if (!a.no_edges) {
    EdgeParams ep;
    ep.d_edge = a.d_edge;
    ep.s_leaf = a.s_leaf;
    ep.threads = a.threads;
    ep.validate();
    const auto t_edges = Clock::now();
    tree.attach_edges(build_skip_edges(tree, ep, &es));
    edge_s = seconds_since(t_edges);
  }

  const auto t_write = Clock::now();
  const PageFileInfo info = serialize(tree, a.out, a.page_size, !a.no_edges);
  const double write_s = seconds_since(t_write);

  const double total = load_s + cluster_s + tree_s + edge_s + write_s;
  out << "indexed " << set.size() << " vectors (dim " << set.dim() << ", "
      << to_string(bp.metric) << ") into " << a.out << "\n"
      << "nodes " << info.header.node_count << ", height " << tree.height() << ", file "
      << info.file_size << " bytes, edges " << (a.no_edges ? "no" : "yes") << "\n";
  out << std::fixed << std::setprecision(3);
  auto phase = [&](const char* name, double s) {
    out << "  " << std::left << std::setw(8) << name << std::right << std::setw(10) << s << " s"
        << std::setw(8) << std::setprecision(1) << (total > 0 ? 100.0 * s / total : 0.0) << " %\n"
        << std::setprecision(3);
  };
  phase("load", load_s);
  phase("cluster", cluster_s);
  phase("tree", tree_s);
  phase("edges", edge_s);
  phase("write", write_s);
  if (!a.no_edges) out << "  edge distance evaluations " << es.distance_evals << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct GroundTruthArgs {
  std::string data, queries, out, metric = "euclidean";
  std::size_t k = 100, threads = 0;
  bool farthest = false;
};

int cmd_groundtruth(const GroundTruthArgs& a, std::ostream& out) {
  const VectorSet set = read_vectors(a.data);
  const VectorSet qs = read_vectors(a.queries);
  if (a.k == 0 || a.k > set.size()) {
    throw UsageError("k must be in [1, " + std::to_string(set.size()) + "], got " +
                     std::to_string(a.k));
  }
  if (!qs.empty() && qs.dim() != set.dim()) {
    throw UsageError("query dimension " + std::to_string(qs.dim()) + " does not match data " +
                     std::to_string(set.dim()));
  }
  const Metric metric = parse_metric(a.metric);
  IntRows gt;
  gt.dim = a.k;
  gt.count = qs.size();
  gt.values.resize(gt.count * gt.dim);
  parallel_for(
      qs.size(),
      [&](std::size_t i) {
        const auto r = a.farthest ? brute_force_farthest(set, qs.row(i), a.k, metric)
                                  : brute_force_knn(set, qs.row(i), a.k, metric);
        for (std::size_t j = 0; j < a.k; ++j) {
          gt.values[i * a.k + j] = static_cast<std::int32_t>(r[j].id);
        }
      },
      a.threads);
  write_ivecs(a.out, gt);
  out << "wrote " << gt.count << " x " << gt.dim << " " << (a.farthest ? "farthest" : "nearest")
      << " ids to " << a.out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct QueryArgs {
  std::string index, vector, queries;
  std::size_t row = 0, k = 10, beta = 32, d_edge = 0;
  bool dissimilar = false;
};

int cmd_query(const QueryArgs& a, std::ostream& out) {
  const Opened ix = open_index(a.index, std::nullopt, std::nullopt, false);
  std::vector<float> q;
  if (!a.vector.empty()) {
    q = parse_vector(a.vector);
  } else if (!a.queries.empty()) {
    const VectorSet qs = read_vectors(a.queries);
    if (a.row >= qs.size()) {
      throw UsageError("--row " + std::to_string(a.row) + " out of range (" +
                       std::to_string(qs.size()) + " queries)");
    }
    q.assign(qs.row(a.row).begin(), qs.row(a.row).end());
  } else {
    throw UsageError("give --vector or --queries");
  }
  SearchParams sp;
  sp.k = a.k;
  sp.beta = a.beta;
  sp.d_edge = a.d_edge;
  sp.dissimilar = a.dissimilar;
  const auto t0 = Clock::now();
  const SearchResult r = search(*ix.store, q, sp);
  const double ms = seconds_since(t0) * 1e3;
  out << "rank\tid\tdistance\n";
  for (std::size_t i = 0; i < r.neighbors.size(); ++i) {
    out << i << "\t" << r.neighbors[i].id << "\t" << std::setprecision(7) << r.neighbors[i].distance
        << "\n";
  }
  out << "# " << std::fixed << std::setprecision(3) << ms << " ms, nodes " << r.stats.nodes_visited
      << ", hops " << r.stats.hops << ", distances " << r.stats.distance_evals << ", disk reads "
      << r.stats.disk_reads << ", cache hits " << r.stats.cache_hits << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct VerifyArgs {
  std::string index;
};

int cmd_verify(const VerifyArgs& a, std::ostream& out) {
  const PageFileInfo info = read_page_file_info(a.index);
  const FileHeader& h = info.header;
  std::uint64_t prev_end = h.page_size;
  for (const auto& e : info.directory) {
    if (e.offset < prev_end) {
      throw IntegrityError("record of node " + std::to_string(e.id) + " overlaps its predecessor");
    }
    prev_end = e.offset + e.length;
  }
  OpenOptions oo;
  oo.read_only = true;
  const auto ix = DiskIndex::open(a.index, oo);
  const VerifyReport rep = verify_tree(*ix);
  if (!rep.ok) throw IntegrityError("tree invariant violated: " + rep.violation);
  if (rep.vectors != h.vector_count || rep.nodes != h.node_count) {
    throw IntegrityError("header counts disagree with the tree");
  }
  out << a.index << ": OK\n"
      << "  format v" << h.version << ", dim " << h.dim << ", " << to_string(h.metric)
      << ", page " << h.page_size << " bytes\n"
      << "  " << rep.vectors << " vectors, " << rep.nodes << " nodes (" << rep.leaves
      << " leaves), height " << rep.height << "\n"
      << "  skip edges " << (h.has_edges ? "yes" : "no");
  if (h.has_edges) out << " (d_edge " << h.d_edge << ", s_leaf " << h.s_leaf << ")";
  out << "\n  sibling adjacency " << std::fixed << std::setprecision(3)
      << sibling_consecutiveness(info, *ix) << "\n"
      << "  checksum " << hex64(h.checksum) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct BenchArgs {
  std::string index, queries, gt, jsonl;
  std::vector<std::size_t> betas{32}, batches{1};
  std::size_t k = 10, d_edge = 0, threads = 0, k_view = 1000, limit = 0;
  std::optional<std::uint64_t> cache_bytes;
  std::optional<double> cache_fraction;
  double lambda = 2.0;
  bool dissimilar = false, in_memory = false, temporal = false, no_warmup = false, views = false;
};

struct QuerySet {
  VectorSet set;
  std::vector<float> ordered;  // rows in serving order
  std::vector<std::size_t> order;
  MatrixView view() const { return MatrixView::dense(ordered, set.dim()); }
};

QuerySet load_queries(const std::string& path, std::size_t limit, bool temporal, Metric metric) {
  QuerySet q{read_vectors(path), {}, {}};
  if (q.set.empty()) throw UsageError(path + ": no queries");
  std::size_t n = q.set.size();
  if (limit > 0) n = std::min(n, limit);
  MatrixView m = q.set.matrix();
  m.rows = n;
  if (temporal) {
    q.order = temporal_order(m, metric);
  } else {
    q.order.resize(n);
    for (std::size_t i = 0; i < n; ++i) q.order[i] = i;
  }
  q.ordered = gather_rows(m, q.order);
  return q;
}

IntRows reorder(const IntRows& gt, const std::vector<std::size_t>& order) {
  IntRows out;
  out.dim = gt.dim;
  out.count = order.size();
  for (const std::size_t i : order) {
    if (i >= gt.count) throw UsageError("ground truth has fewer rows than there are queries");
    const auto r = gt.row(i);
    out.values.insert(out.values.end(), r.begin(), r.end());
  }
  return out;
}

json meta_record(const BenchArgs& a, const NodeStore& store, std::size_t threads) {
  const auto info = read_page_file_info(a.index);
  return {{"type", "meta"},
          {"index", a.index},
          {"queries", a.queries},
          {"metric", std::string(to_string(store.metric()))},
          {"threads", threads},
          {"timestamp", utc_now()},
          {"index_checksum", hex64(info.header.checksum)},
          {"temporal_sort", a.temporal},
          {"cache_bytes", a.cache_bytes ? json(*a.cache_bytes) : json(nullptr)}};
}

int cmd_bench(const BenchArgs& a, std::ostream& out) {
  const std::size_t threads = a.threads == 0 ? cli_default_threads() : a.threads;
  const Opened ix = open_index(a.index, a.cache_bytes, a.cache_fraction, a.in_memory);
  const QuerySet qs = load_queries(a.queries, a.limit, a.temporal, ix.store->metric());
  const IntRows gt = reorder(read_ivecs(a.gt), qs.order);
  if (gt.dim < a.k) {
    throw UsageError("ground truth width " + std::to_string(gt.dim) + " is below k = " +
                     std::to_string(a.k));
  }
  std::ofstream jl;
  if (!a.jsonl.empty()) {
    jl.open(a.jsonl, std::ios::trunc);
    if (!jl) throw StorageError(a.jsonl, 0, "cannot open for writing");
    jl << meta_record(a, *ix.store, threads).dump() << "\n";
  }

  if (a.views) {
    StreamParams sp;
    sp.search.k = a.k;
    sp.search.beta = a.betas.front();
    sp.search.d_edge = a.d_edge;
    sp.view.k_view = a.k_view;
    sp.view.seed_search.beta = a.betas.front();
    if (a.d_edge > 0) {
      const auto [d, s] = ix.store->edge_shape();
      sp.view.edges = EdgeParams{a.d_edge, std::max<std::size_t>(1, s), threads};
      (void)d;
    } else {
      sp.view.edges.reset();
    }
    sp.policy.kind = Exhaustion::radius;
    sp.policy.lambda = a.lambda;
    const auto t0 = Clock::now();
    const StreamResult r = serve_stream(*ix.store, qs.view(), sp);
    const double secs = seconds_since(t0);
    const double recall = mean_recall(r.results, gt, a.k);
    out << "views: " << r.log.size() << " created over " << r.results.size()
        << " queries, mean survival " << std::fixed << std::setprecision(2) << r.mean_survival()
        << ", recall " << std::setprecision(4) << recall << ", " << std::setprecision(1)
        << static_cast<double>(r.results.size()) / std::max(secs, 1e-12) << " qps\n";
    for (const auto& rec : r.log) {
      if (jl.is_open()) {
        jl << json{{"type", "survival"},
                   {"view_index", rec.view_index},
                   {"seed_query_index", rec.seed_query_index},
                   {"queries_served", rec.queries_served},
                   {"mean_recall", rec.mean_recall ? json(*rec.mean_recall) : json(nullptr)}}
                  .dump()
           << "\n";
      }
    }
    return kExitOk;
  }

  BenchOptions bo;
  bo.betas = a.betas;
  bo.batches = a.batches;
  bo.k = a.k;
  bo.d_edge = a.d_edge;
  bo.dissimilar = a.dissimilar;
  bo.threads = threads;
  bo.warmup = !a.no_warmup;
  const auto rows = run_bench(*ix.store, qs.view(), gt, bo);

  out << std::left << std::setw(6) << "beta" << std::setw(7) << "batch" << std::right
      << std::setw(9) << "recall" << std::setw(12) << "qps" << std::setw(10) << "mean_ms"
      << std::setw(10) << "p99_ms" << std::setw(9) << "hops" << std::setw(12) << "disk_reads"
      << std::setw(12) << "cache_hits" << "\n";
  for (const auto& r : rows) {
    out << std::left << std::setw(6) << r.beta << std::setw(7) << r.batch << std::right
        << std::fixed << std::setprecision(4) << std::setw(9) << r.recall << std::setprecision(1)
        << std::setw(12) << r.qps << std::setprecision(3) << std::setw(10) << r.mean_latency_ms
        << std::setw(10) << r.p99_latency_ms << std::setprecision(2) << std::setw(9) << r.avg_hops
        << std::setw(12) << r.stats.disk_reads << std::setw(12) << r.stats.cache_hits << "\n";
    if (jl.is_open()) {
      jl << json{{"type", "row"},
                 {"config",
                  {{"beta", r.beta},
                   {"batch", r.batch},
                   {"k", r.k},
                   {"d_edge", r.d_edge},
                   {"threads", r.threads},
                   {"dissimilar", a.dissimilar}}},
                 {"queries", r.queries},
                 {"recall_k_at_k", r.recall},
                 {"qps", r.qps},
                 {"total_seconds", r.total_seconds},
                 {"mean_latency_ms", r.mean_latency_ms},
                 {"p99_latency_ms", r.p99_latency_ms},
                 {"avg_hops", r.avg_hops},
                 {"nodes_visited", r.stats.nodes_visited},
                 {"distance_evals", r.stats.distance_evals},
                 {"disk_reads", r.stats.disk_reads},
                 {"cache_hits", r.stats.cache_hits}}
                .dump()
         << "\n";
    }
  }
  if (ix.disk) {
    const IoStats io = ix.disk->io_stats();
    out << "# cache: " << io.bytes_used << " bytes resident, " << io.evictions << " evictions\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct ViewDemoArgs {
  std::string index, queries, data, policy = "radius", jsonl;
  std::size_t k = 10, k_view = 1000, beta = 32, limit = 0;
  double lambda = 2.0;
  bool temporal = false;
};

int cmd_view_demo(const ViewDemoArgs& a, std::ostream& out) {
  const Opened ix = open_index(a.index, std::nullopt, std::nullopt, false);
  const QuerySet qs = load_queries(a.queries, a.limit, a.temporal, ix.store->metric());
  std::optional<VectorSet> oracle;
  StreamParams sp;
  sp.search.k = a.k;
  sp.search.beta = a.beta;
  sp.view.k_view = a.k_view;
  sp.view.seed_search.beta = a.beta;
  sp.view.edges.reset();
  sp.policy.lambda = a.lambda;
  if (a.policy == "oracle") {
    if (a.data.empty()) throw UsageError("--policy oracle needs --data");
    oracle.emplace(read_vectors(a.data));
    sp.policy.kind = Exhaustion::oracle;
    sp.policy.oracle_set = &*oracle;
  } else if (a.policy == "radius") {
    sp.policy.kind = Exhaustion::radius;
  } else {
    throw UsageError("--policy must be radius or oracle");
  }
  const StreamResult r = serve_stream(*ix.store, qs.view(), sp);
  std::ofstream jl;
  if (!a.jsonl.empty()) {
    jl.open(a.jsonl, std::ios::trunc);
    if (!jl) throw StorageError(a.jsonl, 0, "cannot open for writing");
  }
  out << "view\tseed\tserved\tmean_recall\n";
  for (const auto& rec : r.log) {
    const std::size_t seed = qs.order[rec.seed_query_index];
    out << rec.view_index << "\t" << seed << "\t" << rec.queries_served << "\t";
    if (rec.mean_recall) {
      out << std::fixed << std::setprecision(4) << *rec.mean_recall;
    } else {
      out << "-";
    }
    out << "\n";
    if (jl.is_open()) {
      jl << json{{"view_index", rec.view_index},
                 {"seed_query_index", seed},
                 {"queries_served", rec.queries_served},
                 {"mean_recall", rec.mean_recall ? json(*rec.mean_recall) : json(nullptr)}}
                .dump()
         << "\n";
    }
  }
  out << "# " << r.log.size() << " views over " << r.results.size() << " queries, mean survival "
      << std::fixed << std::setprecision(2) << r.mean_survival() << "\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"bpann: disk-resident B+ANN vector index"};
  app.name("bpann");
  app.set_config("--config", "", "TOML or INI file with option defaults; flags win");
  app.require_subcommand(1);

  BuildArgs ba;
  ba.threads = cli_default_threads();
  auto* build = app.add_subcommand("build", "Cluster a dataset, build the tree and write the index");
  build->add_option("--data", ba.data, "Dataset (.fvecs or .bvecs)")->required();
  build->add_option("--out", ba.out, "Index file to write")->required();
  build->add_option("--metric", ba.metric, "euclidean or cosine")->capture_default_str();
  build->add_option("--kappa-leaf", ba.kappa_leaf, "Vectors per leaf")->capture_default_str();
  build->add_option("--kappa-inner", ba.kappa_inner, "Children per inner node")->capture_default_str();
  build->add_option("--tau", ba.tau, "Clustering stop size (default: kappa-leaf)");
  build->add_option("-K,--branching", ba.branching, "Clusters per K-means split")->capture_default_str();
  build->add_option("-J,--iters", ba.iters, "K-means rounds per split")->capture_default_str();
  build->add_option("--d-edge", ba.d_edge, "Skip edges per vector")->capture_default_str();
  build->add_option("--s-leaf", ba.s_leaf, "Nearby leaves per edge pool")->capture_default_str();
  build->add_flag("--no-edges", ba.no_edges, "Skip the edge phase");
  build->add_option("--seed", ba.seed, "Random seed")->capture_default_str();
  build->add_option("--page-size", ba.page_size, "Page size in bytes")->capture_default_str();
  build->add_option("--threads", ba.threads, "Worker threads (env BPANN_THREADS)")->capture_default_str();

  GroundTruthArgs ga;
  ga.threads = cli_default_threads();
  auto* gtc = app.add_subcommand("groundtruth", "Exact neighbours of each query, as .ivecs");
  gtc->add_option("--data", ga.data, "Dataset")->required();
  gtc->add_option("--queries", ga.queries, "Queries")->required();
  gtc->add_option("--out", ga.out, "Output .ivecs")->required();
  gtc->add_option("-k", ga.k, "Neighbours per query")->capture_default_str();
  gtc->add_option("--metric", ga.metric, "euclidean or cosine")->capture_default_str();
  gtc->add_flag("--farthest", ga.farthest, "Farthest instead of nearest");
  gtc->add_option("--threads", ga.threads, "Worker threads")->capture_default_str();

  BenchArgs be;
  auto* bench = app.add_subcommand("bench", "Recall, QPS, latency, hops and I/O over a query set");
  bench->add_option("--index", be.index, "Index file")->required();
  bench->add_option("--queries", be.queries, "Queries")->required();
  bench->add_option("--gt", be.gt, "Ground truth .ivecs")->required();
  bench->add_option("--betas", be.betas, "Beta sweep, comma separated")->delimiter(',')->capture_default_str();
  bench->add_option("--batches", be.batches, "Batch-size sweep, comma separated")->delimiter(',')->capture_default_str();
  bench->add_option("-k", be.k, "Results per query")->capture_default_str();
  bench->add_option("--d-edge", be.d_edge, "Skip edges followed per vertex (0 = tree only)")->capture_default_str();
  bench->add_flag("--dissimilar", be.dissimilar, "Farthest-neighbour mode (needs farthest ground truth)");
  bench->add_option("--threads", be.threads, "Worker threads (default: env BPANN_THREADS or 10)");
  bench->add_option("--cache-bytes", be.cache_bytes, "Leaf cache cap in bytes");
  bench->add_option("--cache-fraction", be.cache_fraction, "Leaf cache cap as a fraction of the file size");
  bench->add_flag("--in-memory", be.in_memory, "Load the whole index instead of paging leaves");
  bench->add_flag("--temporal-sort", be.temporal, "Serve queries along a nearest-neighbour chain");
  bench->add_flag("--no-warmup", be.no_warmup, "Skip the warm-up pass");
  bench->add_flag("--views", be.views, "Serve through views (radius policy)");
  bench->add_option("--k-view", be.k_view, "View population")->capture_default_str();
  bench->add_option("--lambda", be.lambda, "Radius policy factor")->capture_default_str();
  bench->add_option("--limit", be.limit, "Use only the first N queries");
  bench->add_option("--jsonl", be.jsonl, "Write line-delimited JSON records here");

  QueryArgs qa;
  auto* query = app.add_subcommand("query", "Search one vector and print its neighbours");
  query->add_option("--index", qa.index, "Index file")->required();
  auto* vec_opt = query->add_option("--vector", qa.vector, "Comma-separated components");
  auto* qs_opt = query->add_option("--queries", qa.queries, "Query file");
  vec_opt->excludes(qs_opt);
  query->add_option("--row", qa.row, "Row of --queries")->capture_default_str();
  query->add_option("-k", qa.k, "Results")->capture_default_str();
  query->add_option("--beta", qa.beta, "Nodes expanded per level")->capture_default_str();
  query->add_option("--d-edge", qa.d_edge, "Skip edges followed per vertex")->capture_default_str();
  query->add_flag("--dissimilar", qa.dissimilar, "Farthest-neighbour mode");

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "Check file layout and tree invariants");
  verify->add_option("--index", va.index, "Index file")->required();

  ViewDemoArgs vd;
  auto* demo = app.add_subcommand("view-demo", "Serve a query stream through views, log survival");
  demo->add_option("--index", vd.index, "Index file")->required();
  demo->add_option("--queries", vd.queries, "Queries")->required();
  demo->add_option("--data", vd.data, "Dataset (oracle policy)");
  demo->add_option("--policy", vd.policy, "radius or oracle")->capture_default_str();
  demo->add_option("-k", vd.k, "Results per query")->capture_default_str();
  demo->add_option("--k-view", vd.k_view, "View population")->capture_default_str();
  demo->add_option("--beta", vd.beta, "Nodes expanded per level")->capture_default_str();
  demo->add_option("--lambda", vd.lambda, "Radius policy factor")->capture_default_str();
  demo->add_flag("--temporal-sort", vd.temporal, "Serve along a nearest-neighbour chain");
  demo->add_option("--limit", vd.limit, "Use only the first N queries");
  demo->add_option("--jsonl", vd.jsonl, "Write survival records here");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (build->parsed()) return cmd_build(ba, out);
    if (gtc->parsed()) return cmd_groundtruth(ga, out);
    if (bench->parsed()) return cmd_bench(be, out);
    if (query->parsed()) return cmd_query(qa, out);
    if (verify->parsed()) return cmd_verify(va, out);
    if (demo->parsed()) return cmd_view_demo(vd, out);
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitOther;
  }
  return kExitUsage;
}

}  // namespace bpann::cli
