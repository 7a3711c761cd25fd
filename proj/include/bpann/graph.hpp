#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "bpann/types.hpp"

namespace bpann {

/// Directed skip-edge adjacency: vector id -> neighbour ids, nearest first.
class SkipEdgeGraph {
 public:
  SkipEdgeGraph() = default;
  SkipEdgeGraph(std::size_t d_edge, std::size_t s_leaf) : d_edge_(d_edge), s_leaf_(s_leaf) {}

  std::span<const VectorId> neighbors(VectorId v) const {
    const auto it = adjacency_.find(v);
    if (it == adjacency_.end()) return {};
    return it->second;
  }
  void set(VectorId v, std::vector<VectorId> nbrs) { adjacency_[v] = std::move(nbrs); }
  bool contains(VectorId v) const { return adjacency_.contains(v); }
  std::size_t size() const { return adjacency_.size(); }
  const std::unordered_map<VectorId, std::vector<VectorId>>& adjacency() const {
    return adjacency_;
  }

  std::size_t d_edge() const { return d_edge_; }
  std::size_t s_leaf() const { return s_leaf_; }

  /// Tree version the edges were last (re)linked against.
  std::uint64_t built_over = 0;

  /// Leaves whose contents changed since linking; their vectors' edges may
  /// be missing or stale until relinked.
  std::unordered_set<NodeId> stale_leaves;

 private:
  std::size_t d_edge_ = 0;
  std::size_t s_leaf_ = 0;
  std::unordered_map<VectorId, std::vector<VectorId>> adjacency_;
};

}  // namespace bpann
