#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "bpann/distance.hpp"
#include "bpann/types.hpp"

namespace bpann {

enum class NodeKind : std::uint8_t { inner = 0, leaf = 1 };

/// A tree node. Inner nodes keep a copy of each child's centroid and vector
/// count so routing never has to touch the children; leaves keep the vectors
/// themselves. `level` is the height above the leaf level (leaves are 0), so a
/// root split never relabels existing nodes.
struct Node {
  NodeId id = kNoNode;
  NodeKind kind = NodeKind::leaf;
  std::uint16_t level = 0;
  NodeId parent = kNoNode;
  std::uint64_t weight = 0;  // vectors in this subtree
  std::vector<float> centroid;

  // inner
  std::vector<NodeId> children;
  std::vector<std::uint64_t> child_weights;
  std::vector<float> child_centroids;  // children.size() x dim
  std::vector<float> child_norms;

  // leaf
  std::vector<VectorId> ids;
  std::vector<float> vectors;  // ids.size() x dim
  std::vector<float> norms;
  // Per-slot skip edges carried inside a page-file record; empty otherwise.
  std::vector<std::vector<VectorId>> edges;

  std::uint32_t mutations = 0;  // since the last exact centroid recompute

  bool is_leaf() const { return kind == NodeKind::leaf; }
  std::size_t entry_count() const { return is_leaf() ? ids.size() : children.size(); }

  /// Leaf vectors or inner child centroids, with norms attached.
  MatrixView keys(std::size_t dim) const {
    const auto& flat = is_leaf() ? vectors : child_centroids;
    const auto& n = is_leaf() ? norms : child_norms;
    return {flat.data(), entry_count(), dim, dim, n.data()};
  }

  std::span<const float> vector(std::size_t slot, std::size_t dim) const {
    return {vectors.data() + slot * dim, dim};
  }

  /// Recomputes the cached norms from the stored keys.
  void refresh_norms(std::size_t dim);
};

/// Content equality (ids, keys, centroid, structure); ignores caches.
bool same_content(const Node& a, const Node& b);

/// Where a vector lives.
struct Location {
  NodeId leaf = kNoNode;
  std::uint32_t slot = 0;

  friend bool operator==(const Location&, const Location&) = default;
};

/// Tree shape parameters.
struct BuildParams {
  std::size_t kappa_leaf = 2048;
  std::size_t kappa_inner = 1024;
  Metric metric = Metric::euclidean;
  std::uint64_t seed = 42;

  void validate() const;
};

}  // namespace bpann
