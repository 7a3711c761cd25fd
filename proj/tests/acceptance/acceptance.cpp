// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails. Every expected value is recomputed here
// from brute force or from an independent baseline.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bpann/disk_index.hpp"
#include "bpann/distance.hpp"
#include "bpann/edges.hpp"
#include "bpann/farthest_rng.hpp"
#include "bpann/greedy.hpp"
#include "bpann/hcluster.hpp"
#include "bpann/knn.hpp"
#include "bpann/page_file.hpp"
#include "bpann/parallel.hpp"
#include "bpann/search.hpp"
#include "bpann/tree.hpp"
#include "bpann/views.hpp"
#include "bpann/workload.hpp"
#include "synth.hpp"

namespace fs = std::filesystem;
using namespace bpann;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

class Scratch {
 public:
  Scratch() : dir_(fs::temp_directory_path() / ("bpann_accept_" + std::to_string(::getpid()))) {
    fs::create_directories(dir_);
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(dir_, ec);
  }
  std::string file(const std::string& name) const { return (dir_ / name).string(); }

 private:
  fs::path dir_;
};

const Scratch& scratch() {
  static const Scratch s;
  return s;
}

BPlusAnnTree bulk(const VectorSet& set, BuildParams bp) {
  KMeansParams kp;
  kp.seed = bp.seed;
  kp.threads = 0;
  return build_tree(hcluster(set, bp.kappa_leaf, kp, bp.metric), set, bp);
}

std::vector<std::vector<Neighbor>> exact_knn(const VectorSet& set, const MatrixView& qs,
                                             std::size_t k, Metric metric, bool farthest = false) {
  std::vector<std::vector<Neighbor>> out(qs.rows);
  parallel_for(qs.rows, [&](std::size_t i) {
    out[i] = farthest ? brute_force_farthest(set, qs.row(i), k, metric)
                      : brute_force_knn(set, qs.row(i), k, metric);
  });
  return out;
}

double mean_recall(const NodeStore& store, const MatrixView& qs,
                   const std::vector<std::vector<Neighbor>>& truth, const SearchParams& sp) {
  const auto res = search_batch(store, qs, sp);
  double sum = 0.0;
  for (std::size_t i = 0; i < qs.rows; ++i) sum += recall_at(res[i].neighbors, truth[i]);
  return sum / static_cast<double>(qs.rows);
}

bool same_ids(const std::vector<Neighbor>& a, const std::vector<Neighbor>& b) {
  return std::equal(a.begin(), a.end(), b.begin(), b.end(),
                    [](const Neighbor& x, const Neighbor& y) { return x.id == y.id; });
}

bool identical(const std::vector<Neighbor>& a, const std::vector<Neighbor>& b) {
  return a == b;
}

std::vector<char> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---------------------------------------------------------------------------

Outcome c1_oracle_equivalence() {
  const auto t0 = Clock::now();
  const auto set = testing::make_set(32, testing::uniform(5000, 32, 101));
  BuildParams bp;
  bp.kappa_leaf = 64;
  bp.kappa_inner = 8;
  auto tree = bulk(set, bp);
  EdgeParams ep;
  ep.d_edge = 16;
  ep.s_leaf = 4;
  tree.attach_edges(build_skip_edges(tree, ep));

  const auto qflat = testing::uniform(100, 32, 102);
  const auto qs = MatrixView::dense(qflat, 32);
  SearchParams sp;
  sp.k = 10;
  sp.beta = tree.node_count();  // at least the widest level
  sp.d_edge = 16;
  const auto truth = exact_knn(set, qs, 10, Metric::euclidean);
  std::size_t exact = 0;
  for (std::size_t i = 0; i < qs.rows; ++i) {
    if (same_ids(search(tree, qs.row(i), sp).neighbors, truth[i])) ++exact;
  }
  const double secs = since(t0);
  return {exact == 100 && secs < 60.0,
          fmt("%zu/100 queries match brute force exactly, %.1f s", exact, secs)};
}

// Shared by C2 to C4: 50k cosine vectors in 100 dimensions.
struct DeskScale {
  VectorSet set;
  std::vector<float> qflat;
  MatrixView queries;
  std::vector<std::vector<Neighbor>> truth;
  std::optional<BPlusAnnTree> tree;
  double build_seconds = 0.0;
};

DeskScale& desk() {
  static DeskScale d = [] {
    DeskScale s;
    const auto t0 = Clock::now();
    auto mix = testing::mixture(51000, 100, 200, 1.0f, 1.5f, 2024);
    std::vector<float> data(mix.data.begin(), mix.data.begin() + 50000 * 100);
    s.qflat.assign(mix.data.begin() + 50000 * 100, mix.data.end());
    s.set = testing::make_set(100, std::move(data));
    s.queries = MatrixView::dense(s.qflat, 100);
    BuildParams bp;
    bp.kappa_leaf = 2048;
    bp.kappa_inner = 1024;
    bp.metric = Metric::cosine;
    s.tree.emplace(bulk(s.set, bp));
    EdgeParams ep;
    ep.d_edge = 128;
    ep.s_leaf = 512;
    s.tree->attach_edges(build_skip_edges(*s.tree, ep));
    s.build_seconds = since(t0);
    s.truth = exact_knn(s.set, s.queries, 10, Metric::cosine);
    return s;
  }();
  return d;
}

const std::vector<std::pair<std::size_t, double>>& beta_sweep() {
  static const auto sweep = [] {
    const DeskScale& d = desk();
    std::vector<std::pair<std::size_t, double>> out;
    for (const std::size_t beta : {5u, 10u, 20u, 40u, 80u, 100u}) {
      SearchParams sp;
      sp.k = 10;
      sp.beta = beta;
      sp.d_edge = 128;
      out.emplace_back(beta, mean_recall(*d.tree, d.queries, d.truth, sp));
    }
    return out;
  }();
  return sweep;
}

Outcome c2_desk_recall() {
  const auto t0 = Clock::now();
  const DeskScale& d = desk();
  std::string curve;
  double best = 0.0;
  std::size_t first = 0;
  for (const auto& [beta, r] : beta_sweep()) {
    curve += fmt(" b%zu=%.3f", beta, r);
    if (r >= 0.90 && first == 0) first = beta;
    best = std::max(best, r);
  }
  const double secs = since(t0);
  return {first != 0 && secs < 600.0,
          fmt("recall@10 >= 0.90 first at beta=%zu (max %.4f), %zu leaves, build %.1f s, total "
              "%.1f s;",
              first, best, d.tree->leaf_ids().size(), d.build_seconds, secs) +
              curve};
}

Outcome c3_monotone_beta() {
  const auto& sweep = beta_sweep();
  double worst_drop = 0.0;
  for (std::size_t i = 1; i < sweep.size(); ++i) {
    worst_drop = std::max(worst_drop, sweep[i - 1].second - sweep[i].second);
  }
  return {worst_drop <= 0.01, fmt("largest recall drop between consecutive betas %.4f", worst_drop)};
}

Outcome c4_batch() {
  const DeskScale& d = desk();
  SearchParams sp;
  sp.k = 10;
  sp.beta = 10;
  sp.d_edge = 32;
  std::vector<SearchResult> seq;
  for (std::size_t i = 0; i < d.queries.rows; ++i) seq.push_back(search(*d.tree, d.queries.row(i), sp));

  std::size_t mismatches = 0;
  for (const std::size_t b : {1u, 8u, 64u}) {
    for (std::size_t start = 0; start < d.queries.rows; start += b) {
      MatrixView chunk = d.queries;
      chunk.data = d.queries.row(start).data();
      chunk.rows = std::min(b, d.queries.rows - start);
      const auto res = search_batch(*d.tree, chunk, sp);
      for (std::size_t j = 0; j < chunk.rows; ++j) {
        const auto& x = res[j].neighbors;
        const auto& y = seq[start + j].neighbors;
        bool same = x.size() == y.size();
        for (std::size_t r = 0; same && r < x.size(); ++r) {
          same = x[r].id == y[r].id && std::abs(x[r].distance - y[r].distance) <= 1e-5f;
        }
        if (!same) ++mismatches;
      }
    }
  }

  // Throughput on the tree descent alone, best of three.
  SearchParams tp = sp;
  tp.d_edge = 0;
  auto qps = [&](std::size_t b) {
    double best = 0.0;
    for (int rep = 0; rep < 3; ++rep) {
      const auto t0 = Clock::now();
      for (std::size_t start = 0; start < d.queries.rows; start += b) {
        if (b == 1) {
          (void)search(*d.tree, d.queries.row(start), tp);
          continue;
        }
        MatrixView chunk = d.queries;
        chunk.data = d.queries.row(start).data();
        chunk.rows = std::min(b, d.queries.rows - start);
        (void)search_batch(*d.tree, chunk, tp, 1);
      }
      best = std::max(best, static_cast<double>(d.queries.rows) / since(t0));
    }
    return best;
  };
  const double q1 = qps(1), q256 = qps(256);
  return {mismatches == 0 && q256 > q1,
          fmt("%zu mismatches over B in {1,8,64}; QPS B=1 %.0f, B=256 %.0f (single worker)",
              mismatches, q1, q256)};
}

Outcome c5_disk() {
  auto mix = testing::mixture(20200, 16, 40, 5.0f, 1.0f, 505);
  std::vector<float> data(mix.data.begin(), mix.data.begin() + 20000 * 16);
  std::vector<float> qflat(mix.data.begin() + 20000 * 16, mix.data.end());
  const auto set = testing::make_set(16, std::move(data));
  const auto qs = MatrixView::dense(qflat, 16);
  BuildParams bp;
  bp.kappa_leaf = 256;
  bp.kappa_inner = 8;
  auto tree = bulk(set, bp);
  EdgeParams ep;
  ep.d_edge = 16;
  ep.s_leaf = 4;
  tree.attach_edges(build_skip_edges(tree, ep));
  const std::string path = scratch().file("c5.bpann");
  const auto info = serialize(tree, path);

  // Round trip.
  const auto back = load_tree(path);
  bool equal = back.node_ids() == tree.node_ids() && back.root_id() == tree.root_id() &&
               back.edge_shape() == tree.edge_shape();
  for (const NodeId id : tree.node_ids()) {
    equal = equal && same_content(*back.read(id), *tree.read(id));
  }
  for (VectorId v = 0; v < set.size() && equal; ++v) {
    const auto a = back.edges()->neighbors(v);
    const auto b = tree.edges()->neighbors(v);
    equal = back.locate(v) == tree.locate(v) && std::equal(a.begin(), a.end(), b.begin(), b.end());
  }

  SearchParams sp;
  sp.k = 10;
  sp.beta = 6;
  sp.d_edge = 16;
  std::vector<std::vector<Neighbor>> want;
  for (std::size_t i = 0; i < qs.rows; ++i) want.push_back(search(tree, qs.row(i), sp).neighbors);

  const auto size = info.file_size;
  std::size_t differing = 0, over_cap = 0;
  std::uint64_t evictions_small = 0;
  for (const std::uint64_t cap : {std::uint64_t{0}, size / 4, size / 20}) {
    OpenOptions oo;
    oo.read_only = true;
    if (cap) oo.cache_capacity_bytes = cap;
    const auto ix = DiskIndex::open(path, oo);
    for (std::size_t i = 0; i < qs.rows; ++i) {
      if (!identical(search(*ix, qs.row(i), sp).neighbors, want[i])) ++differing;
      ix->lru_maintain();
      if (ix->io_stats().bytes_used > ix->cache().capacity()) ++over_cap;
    }
    if (cap == size / 20) evictions_small = ix->io_stats().evictions;
  }
  return {equal && differing == 0 && over_cap == 0 && evictions_small > 0,
          fmt("round trip %s; %zu differing results across caps inf/25%%/5%% of %llu bytes; %zu "
              "cap overruns; %llu evictions at 5%%",
              equal ? "deep-equal" : "DIFFERS", differing, static_cast<unsigned long long>(size),
              over_cap, static_cast<unsigned long long>(evictions_small))};
}

Outcome c6_layout() {
  const auto mix = testing::mixture(100000, 16, 100, 5.0f, 1.0f, 606);
  const auto set = testing::make_set(16, mix.data);
  BuildParams bp;
  bp.kappa_leaf = 128;
  bp.kappa_inner = 16;
  const auto tree = bulk(set, bp);
  const auto info = serialize(tree, scratch().file("c6.bpann"), 4096, false);
  std::size_t misaligned = 0;
  for (const auto& e : info.directory) misaligned += e.offset % 4096 != 0;
  const double adj = sibling_consecutiveness(info, tree);
  return {misaligned == 0 && adj >= 0.95,
          fmt("%zu nodes, %zu misaligned offsets, %.2f%% of parents with consecutive children",
              info.directory.size(), misaligned, 100.0 * adj)};
}

Outcome c7_temporal() {
  auto mix = testing::mixture(42000, 16, 60, 5.0f, 1.0f, 707);
  std::vector<float> data(mix.data.begin(), mix.data.begin() + 40000 * 16);
  std::vector<float> qflat(mix.data.begin() + 40000 * 16, mix.data.end());
  const auto set = testing::make_set(16, std::move(data));
  BuildParams bp;
  bp.kappa_leaf = 128;
  bp.kappa_inner = 16;
  const auto tree = bulk(set, bp);
  const std::string path = scratch().file("c7.bpann");
  const auto info = serialize(tree, path, 4096, false);

  const auto qs = MatrixView::dense(qflat, 16);
  const auto sorted = gather_rows(qs, temporal_order(qs, Metric::euclidean));
  const auto shuffled = gather_rows(qs, shuffled_order(qs.rows, 77));
  auto reads = [&](const std::vector<float>& stream) {
    OpenOptions oo;
    oo.read_only = true;
    oo.cache_capacity_bytes = info.file_size / 20;
    const auto ix = DiskIndex::open(path, oo);
    SearchParams sp;
    sp.beta = 4;
    std::uint64_t total = 0;
    const auto m = MatrixView::dense(stream, 16);
    for (std::size_t i = 0; i < m.rows; ++i) total += search(*ix, m.row(i), sp).stats.disk_reads;
    return total;
  };
  const auto a = reads(sorted), b = reads(shuffled);
  return {a < b, fmt("disk reads over %zu queries: sorted %llu, shuffled %llu", qs.rows,
                     static_cast<unsigned long long>(a), static_cast<unsigned long long>(b))};
}

Outcome c8_view_survival() {
  auto mix = testing::mixture(12400, 12, 30, 4.0f, 1.0f, 808);
  std::vector<float> data(mix.data.begin(), mix.data.begin() + 12000 * 12);
  std::vector<float> qflat(mix.data.begin() + 12000 * 12, mix.data.end());
  const auto set = testing::make_set(12, std::move(data));
  BuildParams bp;
  bp.kappa_leaf = 64;
  bp.kappa_inner = 16;
  const auto tree = bulk(set, bp);
  const auto qs = MatrixView::dense(qflat, 12);
  const auto sorted = gather_rows(qs, temporal_order(qs, Metric::euclidean));
  const auto shuffled = gather_rows(qs, shuffled_order(qs.rows, 88));
  auto survival = [&](const std::vector<float>& stream, std::size_t k_view) {
    StreamParams p;
    p.search.beta = 8;
    p.view.k_view = k_view;
    p.view.seed_search.beta = 16;
    p.view.edges.reset();
    p.policy = {Exhaustion::oracle, 2.0, &set};
    return serve_stream(tree, MatrixView::dense(stream, 12), p).mean_survival();
  };
  const double s100 = survival(sorted, 100);
  const double s1000 = survival(sorted, 1000);
  const double shuf = survival(shuffled, 1000);
  return {s1000 >= s100 && s1000 > shuf,
          fmt("mean survival: sorted k_view=100 %.2f, k_view=1000 %.2f; shuffled k_view=1000 %.2f",
              s100, s1000, shuf)};
}

Outcome c9_dissimilarity() {
  const auto mix = testing::mixture(10000, 16, 20, 4.0f, 1.0f, 909);
  const auto set = testing::make_set(16, mix.data);
  BuildParams bp;
  bp.kappa_leaf = 128;
  bp.kappa_inner = 16;
  const auto tree = bulk(set, bp);
  const FarthestRngGraph rng(set, Metric::euclidean, 0);
  const auto qflat = testing::mixture(100, 16, 20, 4.0f, 1.0f, 910).data;
  const auto qs = MatrixView::dense(qflat, 16);
  const auto truth = exact_knn(set, qs, 10, Metric::euclidean, true);

  double baseline = 0.0;
  for (std::size_t i = 0; i < qs.rows; ++i) baseline += recall_at(rng.search(qs.row(i), 10), truth[i]);
  baseline /= static_cast<double>(qs.rows);

  std::string curve;
  double best = 0.0;
  std::size_t reached = 0;
  for (const std::size_t beta : {1u, 2u, 4u, 8u, 16u}) {
    SearchParams sp;
    sp.k = 10;
    sp.beta = beta;
    sp.dissimilar = true;
    const double r = mean_recall(tree, qs, truth, sp);
    curve += fmt(" b%zu=%.3f", beta, r);
    if (r >= 0.9 && reached == 0) reached = beta;
    best = std::max(best, r);
  }
  return {reached != 0 && best > baseline,
          fmt("farthest recall@10 >= 0.9 first at beta=%zu (max %.4f) vs farthest-RNG %.4f;",
              reached, best, baseline) +
              curve};
}

class EdgeGraph final : public GreedyGraph {
 public:
  EdgeGraph(const SkipEdgeGraph& g, const VectorSet& set, std::span<const float> q)
      : g_(g), set_(set), q_(q) {}
  std::span<const VectorId> neighbors(VectorId v) const override { return g_.neighbors(v); }
  float distance_to_query(VectorId v) const override {
    return distance(q_, set_.row(v), Metric::euclidean);
  }

 private:
  const SkipEdgeGraph& g_;
  const VectorSet& set_;
  std::span<const float> q_;
};

Outcome c10_invariants() {
  auto mix = testing::mixture(30000, 16, 40, 5.0f, 1.0f, 1010);
  std::vector<float> data(mix.data.begin(), mix.data.begin() + 20000 * 16);
  const auto set = testing::make_set(16, std::move(data));
  BuildParams bp;
  bp.kappa_leaf = 128;
  bp.kappa_inner = 16;
  auto tree = bulk(set, bp);
  EdgeParams ep;
  ep.d_edge = 16;
  ep.s_leaf = 8;
  EdgeBuildStats es;
  const auto graph = build_skip_edges(tree, ep, &es);
  const std::uint64_t bound =
      static_cast<std::uint64_t>(set.size()) * bp.kappa_leaf * (ep.s_leaf + 1);

  // Greedy refinement from tree-only seeds.
  const auto qflat = testing::uniform(200, 16, 1011);
  std::size_t worsened = 0, max_rounds = 0;
  for (std::size_t i = 0; i < 200; ++i) {
    const std::span<const float> q(qflat.data() + i * 16, 16);
    SearchParams sp;
    sp.beta = 1;
    const auto seeds = search(tree, q, sp).neighbors;
    VisitedMap visited;
    const EdgeGraph g(*graph, set, q);
    const auto r = greedy_search(g, seeds, 10, visited);
    if (r.pool.size() != seeds.size() || r.pool.back().distance > seeds.back().distance) ++worsened;
    max_rounds = std::max(max_rounds, r.rounds);
  }

  // Bulk build plus 10k inserts.
  for (std::size_t i = 0; i < 10000; ++i) {
    const std::size_t row = 20000 + i;
    insert(tree, std::span<const float>(mix.data.data() + row * 16, 16), row);
  }
  const VerifyReport rep = verify_tree(tree);
  return {rep.ok && rep.vectors == 30000 && worsened == 0 && es.distance_evals <= bound,
          fmt("verify after 10k inserts: %s (%zu nodes, height %zu); greedy worsened %zu/200, "
              "max rounds %zu; edge distance evals %llu <= %llu",
              rep.ok ? "ok" : rep.violation.c_str(), rep.nodes, rep.height, worsened, max_rounds,
              static_cast<unsigned long long>(es.distance_evals),
              static_cast<unsigned long long>(bound))};
}

Outcome c11_determinism() {
  const auto mix = testing::mixture(10000, 16, 25, 5.0f, 1.0f, 1111);
  const auto qflat = testing::uniform(100, 16, 1112);
  auto build = [&](const std::string& name) {
    const auto set = testing::make_set(16, mix.data);
    BuildParams bp;
    bp.kappa_leaf = 128;
    bp.kappa_inner = 16;
    bp.seed = 5;
    auto tree = bulk(set, bp);
    EdgeParams ep;
    ep.d_edge = 12;
    ep.s_leaf = 6;
    tree.attach_edges(build_skip_edges(tree, ep));
    serialize(tree, scratch().file(name));
    const auto ix = DiskIndex::open(scratch().file(name));
    std::vector<std::vector<Neighbor>> out;
    SearchParams sp;
    sp.beta = 4;
    sp.d_edge = 12;
    for (std::size_t i = 0; i < 100; ++i) {
      out.push_back(search(*ix, std::span<const float>(qflat.data() + i * 16, 16), sp).neighbors);
    }
    return out;
  };
  const auto a = build("c11a.bpann");
  const auto b = build("c11b.bpann");
  const auto fa = slurp(scratch().file("c11a.bpann"));
  const bool bytes_equal = fa == slurp(scratch().file("c11b.bpann"));
  return {bytes_equal && a == b, fmt("index files %s (%zu bytes); query results %s",
                                     bytes_equal ? "byte-identical" : "DIFFER", fa.size(),
                                     a == b ? "identical" : "DIFFER")};
}

}  // namespace

// With arguments, runs only the criteria whose tag (C1 ... C11) is listed.
int main(int argc, char** argv) {
  const std::vector<std::string> only(argv + 1, argv + argc);
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"C1 oracle equivalence", c1_oracle_equivalence},
      {"C2 desk-scale recall", c2_desk_recall},
      {"C3 monotone recall in beta", c3_monotone_beta},
      {"C4 batch equivalence and throughput", c4_batch},
      {"C5 disk round trip and residency independence", c5_disk},
      {"C6 locality layout", c6_layout},
      {"C7 temporal correlation", c7_temporal},
      {"C8 view survival", c8_view_survival},
      {"C9 dissimilarity", c9_dissimilarity},
      {"C10 invariant suites", c10_invariants},
      {"C11 determinism", c11_determinism},
  };
  int failed = 0, ran = 0;
  for (const auto& [name, fn] : criteria) {
    const std::string tag = std::string(name).substr(0, std::string(name).find(' '));
    if (!only.empty() && std::find(only.begin(), only.end(), tag) == only.end()) continue;
    ++ran;
    Outcome o;
    const auto t0 = Clock::now();
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::printf("%s %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), since(t0));
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d of %d criteria passed\n", ran - failed, ran);
  return failed == 0 ? 0 : 1;
}
