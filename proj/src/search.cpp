#include "bpann/search.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <unordered_map>

#include "bpann/error.hpp"
#include "bpann/greedy.hpp"
#include "bpann/knn.hpp"
#include "bpann/parallel.hpp"

namespace bpann {

void SearchParams::validate() const {
  if (k < 1) throw UsageError("k must be at least 1");
  if (beta < 1) throw UsageError("beta must be at least 1");
}

SearchStats& SearchStats::operator+=(const SearchStats& o) {
  nodes_visited += o.nodes_visited;
  hops += o.hops;
  distance_evals += o.distance_evals;
  disk_reads += o.disk_reads;
  cache_hits += o.cache_hits;
  return *this;
}

double avg_hops(std::span<const SearchStats> stats) {
  if (stats.empty()) throw UsageError("avg_hops: no queries recorded");
  double total = 0.0;
  for (const auto& s : stats) total += static_cast<double>(s.hops);
  return total / static_cast<double>(stats.size());
}

namespace {

void check_request(const NodeStore& store, std::span<const float> q, const SearchParams& p) {
  p.validate();
  if (q.size() != store.dim()) {
    throw UsageError("query dim " + std::to_string(q.size()) + " does not match index dim " +
                     std::to_string(store.dim()));
  }
  if (p.metric && *p.metric != store.metric()) {
    throw UsageError("query metric " + std::string(to_string(*p.metric)) +
                     " does not match index metric " + std::string(to_string(store.metric())));
  }
  for (const float x : q) {
    if (!std::isfinite(x)) throw DomainError("non-finite query component");
  }
  if (store.metric() == Metric::cosine && l2_norm(q.data(), q.size()) == 0.0f) {
    throw DomainError("zero query under cosine metric");
  }
  if (p.d_edge > 0 && !store.has_edges()) {
    throw UsageError("index has no skip edges; search with d_edge=0 or rebuild with edges");
  }
}

NodePtr fetch(const NodeStore& store, NodeId id, SearchStats& st) {
  IoCounters io;
  NodePtr n = store.read(id, &io);
  ++st.nodes_visited;
  st.disk_reads += io.disk_reads;
  st.cache_hits += io.cache_hits;
  return n;
}

// Skip-edge graph view of a store for one query. Leaves touched during
// refinement stay pinned until the query ends.
class StoreGraph final : public GreedyGraph {
 public:
  StoreGraph(const NodeStore& store, std::span<const float> q, float qnorm, SearchStats& st)
      : store_(store), q_(q), qnorm_(qnorm), st_(st) {}

  std::span<const VectorId> neighbors(VectorId v) const override {
    std::uint32_t slot = 0;
    const Node& leaf = leaf_of(v, slot);
    return store_.neighbors(leaf, slot);
  }

  float distance_to_query(VectorId v) const override {
    std::uint32_t slot = 0;
    const Node& leaf = leaf_of(v, slot);
    return detail::distance_with_norms(q_.data(), leaf.vectors.data() + slot * store_.dim(),
                                       store_.dim(), qnorm_, leaf.norms[slot], store_.metric());
  }

 private:
  const Node& leaf_of(VectorId v, std::uint32_t& slot) const {
    const auto loc = store_.locate(v);
    if (!loc) throw IntegrityError("skip edge points at unknown vector " + std::to_string(v));
    slot = loc->slot;
    auto it = pinned_.find(loc->leaf);
    if (it == pinned_.end()) it = pinned_.emplace(loc->leaf, fetch(store_, loc->leaf, st_)).first;
    return *it->second;
  }

  const NodeStore& store_;
  std::span<const float> q_;
  float qnorm_;
  SearchStats& st_;
  mutable std::unordered_map<NodeId, NodePtr> pinned_;
};

VisitedMap& scratch_visited() {
  thread_local VisitedMap visited;
  visited.clear();
  return visited;
}

template <typename Order>
void refine(const NodeStore& store, std::span<const float> q, float qnorm,
            const SearchParams& p, SearchResult& r, Order order) {
  keep_best(r.neighbors, p.k, order);
  if (p.d_edge == 0 || r.neighbors.empty()) return;
  VisitedMap& visited = scratch_visited();
  const StoreGraph graph(store, q, qnorm, r.stats);
  GreedyResult g = greedy_search(graph, std::move(r.neighbors), p.k, visited, p.dissimilar,
                                 p.d_edge);
  r.neighbors = std::move(g.pool);
  r.stats.hops += g.hops;
  r.stats.distance_evals += g.distance_evals;
}

// Scores one node's keys for one query and routes the results: a leaf adds
// its best k to the candidates, an inner node pushes its best beta children.
template <typename Order>
void route(const Node& n, const float* dists, const SearchParams& p, std::vector<Neighbor>& pq,
           std::vector<Neighbor>& cand, Order order) {
  std::vector<Neighbor> local(n.entry_count());
  if (n.is_leaf()) {
    for (std::size_t i = 0; i < local.size(); ++i) local[i] = {n.ids[i], dists[i]};
    keep_best(local, p.k, order);
    cand.insert(cand.end(), local.begin(), local.end());
  } else {
    for (std::size_t i = 0; i < local.size(); ++i) local[i] = {n.children[i], dists[i]};
    keep_best(local, std::max(p.k, p.beta), order);
    if (local.size() > p.beta) local.resize(p.beta);
    pq.insert(pq.end(), local.begin(), local.end());
  }
}

template <typename Order>
SearchResult search_one(const NodeStore& store, std::span<const float> q, const SearchParams& p,
                        Order order) {
  SearchResult r;
  const std::size_t dim = store.dim();
  const Metric metric = store.metric();
  const float qnorm = l2_norm(q.data(), dim);
  std::vector<Neighbor> frontier{{store.root_id(), 0.0f}};
  std::vector<float> dists;
  while (!frontier.empty()) {
    std::vector<Neighbor> pq;
    for (const auto& f : frontier) {
      const NodePtr n = fetch(store, f.id, r.stats);
      const MatrixView keys = n->keys(dim);
      dists.resize(keys.rows);
      for (std::size_t i = 0; i < keys.rows; ++i) {
        dists[i] = detail::distance_with_norms(q.data(), keys.data + i * dim, dim, qnorm,
                                               keys.norms[i], metric);
      }
      r.stats.distance_evals += keys.rows;
      route(*n, dists.data(), p, pq, r.neighbors, order);
    }
    keep_best(pq, p.beta, order);
    frontier = std::move(pq);
    store.sync_lru();
  }
  refine(store, q, qnorm, p, r, order);
  return r;
}

struct BatchState {
  std::vector<Neighbor> frontier;
  std::vector<Neighbor> pq;
  SearchResult result;
  float qnorm = 0.0f;
};

template <typename Order>
std::vector<SearchResult> batch(const NodeStore& store, const MatrixView& queries,
                                const SearchParams& p, std::size_t threads, Order order) {
  const std::size_t dim = store.dim();
  const Metric metric = store.metric();
  const std::size_t nq = queries.rows;
  std::vector<BatchState> st(nq);
  for (std::size_t b = 0; b < nq; ++b) {
    st[b].frontier = {{store.root_id(), 0.0f}};
    st[b].qnorm = l2_norm(queries.row(b).data(), dim);
  }

  std::vector<float> scores;
  bool more = nq > 0;
  while (more) {
    std::map<NodeId, std::vector<std::size_t>> groups;
    for (std::size_t b = 0; b < nq; ++b) {
      for (const auto& f : st[b].frontier) groups[f.id].push_back(b);
    }
    for (const auto& [id, members] : groups) {
      const NodePtr n = fetch(store, id, st[members[0]].result.stats);
      for (std::size_t j = 1; j < members.size(); ++j) ++st[members[j]].result.stats.nodes_visited;
      const MatrixView keys = n->keys(dim);
      const std::size_t e = keys.rows;
      scores.resize(members.size() * e);
      std::size_t j = 0;
      for (; j + 4 <= members.size(); j += 4) {
        const float* qs[4];
        float qn[4];
        for (std::size_t t = 0; t < 4; ++t) {
          qs[t] = queries.row(members[j + t]).data();
          qn[t] = st[members[j + t]].qnorm;
        }
        float out[4];
        for (std::size_t i = 0; i < e; ++i) {
          detail::distance_x4(qs, qn, keys.data + i * dim, keys.norms[i], dim, metric, out);
          for (std::size_t t = 0; t < 4; ++t) scores[(j + t) * e + i] = out[t];
        }
      }
      for (; j < members.size(); ++j) {
        const float* qv = queries.row(members[j]).data();
        for (std::size_t i = 0; i < e; ++i) {
          scores[j * e + i] = detail::distance_with_norms(qv, keys.data + i * dim, dim,
                                                          st[members[j]].qnorm, keys.norms[i],
                                                          metric);
        }
      }
      for (std::size_t m = 0; m < members.size(); ++m) {
        BatchState& s = st[members[m]];
        s.result.stats.distance_evals += e;
        route(*n, scores.data() + m * e, p, s.pq, s.result.neighbors, order);
      }
    }
    more = false;
    for (auto& s : st) {
      keep_best(s.pq, p.beta, order);
      s.frontier = std::move(s.pq);
      s.pq.clear();
      more = more || !s.frontier.empty();
    }
    store.sync_lru();
  }

  parallel_for(
      nq, [&](std::size_t b) { refine(store, queries.row(b), st[b].qnorm, p, st[b].result, order); },
      threads);

  std::vector<SearchResult> out(nq);
  for (std::size_t b = 0; b < nq; ++b) out[b] = std::move(st[b].result);
  return out;
}

}  // namespace

SearchResult search(const NodeStore& store, std::span<const float> q, const SearchParams& params) {
  std::shared_lock lock(store.mutex());
  check_request(store, q, params);
  if (params.dissimilar) return search_one(store, q, params, FartherFirst{});
  return search_one(store, q, params, NearerFirst{});
}

std::vector<SearchResult> search_batch(const NodeStore& store, const MatrixView& queries,
                                       const SearchParams& params, std::size_t threads) {
  std::shared_lock lock(store.mutex());
  for (std::size_t b = 0; b < queries.rows; ++b) check_request(store, queries.row(b), params);
  if (queries.rows > 0 && queries.dim != store.dim()) {
    throw UsageError("query batch dim does not match index dim");
  }
  if (params.dissimilar) return batch(store, queries, params, threads, FartherFirst{});
  return batch(store, queries, params, threads, NearerFirst{});
}

}  // namespace bpann
