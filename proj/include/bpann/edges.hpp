#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <unordered_map>
#include <vector>

#include "bpann/graph.hpp"
#include "bpann/node_store.hpp"

namespace bpann {

struct EdgeParams {
  std::size_t d_edge = 128;  // out-degree per vector
  std::size_t s_leaf = 512;  // nearby leaves in each leaf's candidate pool
  std::size_t threads = 0;   // 0 = default_threads()

  void validate() const;
};

/// For every leaf, the (up to) s_leaf other leaves with the nearest centroids,
/// nearest first, ties by leaf id.
std::unordered_map<NodeId, std::vector<NodeId>> nearest_leaves(const NodeStore& tree,
                                                               std::size_t s_leaf);

struct EdgeBuildStats {
  std::uint64_t distance_evals = 0;
  std::size_t leaves = 0;
  std::size_t vertices = 0;
};

/// Links every vector to its d_edge nearest vectors among its own leaf and
/// that leaf's s_leaf nearest leaves. Deterministic for a given tree.
std::shared_ptr<SkipEdgeGraph> build_skip_edges(const NodeStore& tree, const EdgeParams& params,
                                                EdgeBuildStats* stats = nullptr);

/// Relinks only the vectors in `graph.stale_leaves` (leaves touched by
/// inserts since the last link) and clears the stale set. Returns the number
/// of leaves relinked.
std::size_t relink_stale(const NodeStore& tree, SkipEdgeGraph& graph,
                         EdgeBuildStats* stats = nullptr);

}  // namespace bpann
