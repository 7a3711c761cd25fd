#include "bpann/edges.hpp"

#include <cblas.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <queue>
#include <string>

#include "bpann/distance.hpp"
#include "bpann/error.hpp"
#include "bpann/knn.hpp"
#include "bpann/parallel.hpp"
#include "bpann/tree.hpp"

namespace bpann {

void EdgeParams::validate() const {
  if (d_edge < 1) throw UsageError("d_edge must be at least 1");
  if (s_leaf < 1) throw UsageError("s_leaf must be at least 1");
}

namespace {

constexpr std::size_t kRowChunk = 128;

struct LeafKeys {
  std::vector<NodeId> ids;
  std::vector<float> centroids;
  std::vector<float> norms;
};

LeafKeys leaf_keys(const NodeStore& tree) {
  LeafKeys k;
  const std::size_t dim = tree.dim();
  k.ids = leaves_in_order(tree);
  k.centroids.reserve(k.ids.size() * dim);
  for (const NodeId id : k.ids) {
    const NodePtr n = tree.read(id);
    k.centroids.insert(k.centroids.end(), n->centroid.begin(), n->centroid.end());
    k.norms.push_back(l2_norm(n->centroid.data(), dim));
  }
  return k;
}

std::vector<NodeId> nearest_of(const LeafKeys& keys, std::size_t i, std::size_t s_leaf,
                               std::size_t dim, Metric metric) {
  std::vector<Neighbor> all;
  all.reserve(keys.ids.size());
  const float* ci = keys.centroids.data() + i * dim;
  for (std::size_t j = 0; j < keys.ids.size(); ++j) {
    if (j == i) continue;
    all.push_back({keys.ids[j],
                   detail::distance_with_norms(ci, keys.centroids.data() + j * dim, dim,
                                               keys.norms[i], keys.norms[j], metric)});
  }
  keep_best(all, s_leaf, NearerFirst{});
  std::vector<NodeId> out;
  out.reserve(all.size());
  for (const auto& n : all) out.push_back(n.id);
  return out;
}

struct LinkedLeaf {
  std::vector<VectorId> ids;
  std::vector<std::vector<VectorId>> adjacency;
  std::uint64_t evals = 0;
};

// Links every vector of `leaf_id` against the pool formed by its own leaf and
// `near`. Dot products come from one SGEMM per row chunk.
LinkedLeaf link_leaf(const NodeStore& tree, NodeId leaf_id, const std::vector<NodeId>& near,
                     std::size_t d_edge) {
  const std::size_t dim = tree.dim();
  const Metric metric = tree.metric();
  const NodePtr own = tree.read(leaf_id);

  std::vector<float> pool;
  std::vector<float> pool_norms;
  std::vector<VectorId> pool_ids;
  auto add = [&](const Node& n) {
    pool.insert(pool.end(), n.vectors.begin(), n.vectors.end());
    pool_norms.insert(pool_norms.end(), n.norms.begin(), n.norms.end());
    pool_ids.insert(pool_ids.end(), n.ids.begin(), n.ids.end());
  };
  add(*own);
  for (const NodeId id : near) add(*tree.read(id));

  LinkedLeaf out;
  out.ids = own->ids;
  out.adjacency.resize(own->ids.size());
  const std::size_t m = pool_ids.size();
  const std::size_t rows = own->ids.size();
  if (rows == 0 || m == 0) return out;

  std::vector<float> gram(std::min(rows, kRowChunk) * m);
  for (std::size_t r0 = 0; r0 < rows; r0 += kRowChunk) {
    const std::size_t r = std::min(kRowChunk, rows - r0);
    cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasTrans, static_cast<int>(r),
                static_cast<int>(m), static_cast<int>(dim), 1.0f, own->vectors.data() + r0 * dim,
                static_cast<int>(dim), pool.data(), static_cast<int>(dim), 0.0f, gram.data(),
                static_cast<int>(m));
    out.evals += static_cast<std::uint64_t>(r) * m;
    for (std::size_t i = 0; i < r; ++i) {
      const std::size_t slot = r0 + i;
      const VectorId self = own->ids[slot];
      const float na = own->norms[slot];
      // Bounded max-heap holding the best d_edge so far; top is the worst kept.
      std::priority_queue<Neighbor, std::vector<Neighbor>, NearerFirst> heap;
      const float* g = gram.data() + i * m;
      for (std::size_t j = 0; j < m; ++j) {
        if (pool_ids[j] == self) continue;
        const float nb = pool_norms[j];
        float d;
        if (metric == Metric::euclidean) {
          d = std::sqrt(std::max(0.0f, na * na + nb * nb - 2.0f * g[j]));
        } else {
          d = (na == 0.0f || nb == 0.0f) ? 1.0f
                                         : std::clamp(1.0f - g[j] / (na * nb), 0.0f, 2.0f);
        }
        const Neighbor cand{pool_ids[j], d};
        if (heap.size() < d_edge) {
          heap.push(cand);
        } else if (NearerFirst{}(cand, heap.top())) {
          heap.pop();
          heap.push(cand);
        }
      }
      std::vector<VectorId>& adj = out.adjacency[slot];
      adj.resize(heap.size());
      for (std::size_t p = heap.size(); p-- > 0;) {
        adj[p] = heap.top().id;
        heap.pop();
      }
    }
  }
  return out;
}

void link_leaves(const NodeStore& tree, const std::vector<NodeId>& targets,
                 const LeafKeys& keys, std::size_t d_edge, std::size_t s_leaf,
                 std::size_t threads, SkipEdgeGraph& graph, EdgeBuildStats* stats) {
  openblas_set_num_threads(1);
  std::unordered_map<NodeId, std::size_t> pos;
  for (std::size_t i = 0; i < keys.ids.size(); ++i) pos.emplace(keys.ids[i], i);

  std::vector<LinkedLeaf> linked(targets.size());
  parallel_for(
      targets.size(),
      [&](std::size_t t) {
        const auto it = pos.find(targets[t]);
        if (it == pos.end()) return;
        const auto near = nearest_of(keys, it->second, s_leaf, tree.dim(), tree.metric());
        linked[t] = link_leaf(tree, targets[t], near, d_edge);
      },
      threads);

  for (auto& l : linked) {
    if (stats) {
      stats->distance_evals += l.evals;
      stats->vertices += l.ids.size();
    }
    for (std::size_t i = 0; i < l.ids.size(); ++i) graph.set(l.ids[i], std::move(l.adjacency[i]));
  }
  if (stats) stats->leaves += targets.size();
  graph.built_over = tree.version();
}

}  // namespace

std::unordered_map<NodeId, std::vector<NodeId>> nearest_leaves(const NodeStore& tree,
                                                               std::size_t s_leaf) {
  const LeafKeys keys = leaf_keys(tree);
  std::unordered_map<NodeId, std::vector<NodeId>> out;
  for (std::size_t i = 0; i < keys.ids.size(); ++i) {
    out.emplace(keys.ids[i], nearest_of(keys, i, s_leaf, tree.dim(), tree.metric()));
  }
  return out;
}

std::shared_ptr<SkipEdgeGraph> build_skip_edges(const NodeStore& tree, const EdgeParams& params,
                                                EdgeBuildStats* stats) {
  params.validate();
  auto graph = std::make_shared<SkipEdgeGraph>(params.d_edge, params.s_leaf);
  const LeafKeys keys = leaf_keys(tree);
  link_leaves(tree, keys.ids, keys, params.d_edge, params.s_leaf, params.threads, *graph, stats);
  return graph;
}

std::size_t relink_stale(const NodeStore& tree, SkipEdgeGraph& graph, EdgeBuildStats* stats) {
  if (graph.stale_leaves.empty()) return 0;
  std::vector<NodeId> targets(graph.stale_leaves.begin(), graph.stale_leaves.end());
  std::sort(targets.begin(), targets.end());
  const LeafKeys keys = leaf_keys(tree);
  link_leaves(tree, targets, keys, graph.d_edge(), graph.s_leaf(), 0, graph, stats);
  graph.stale_leaves.clear();
  return targets.size();
}

}  // namespace bpann
