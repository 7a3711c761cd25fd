#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "bpann/kmeans.hpp"
#include "bpann/types.hpp"
#include "bpann/vector_set.hpp"

namespace bpann {

/// One node of the partition hierarchy. Leaves hold member ids and no
/// children; internal nodes hold children and no ids.
struct ClusterNode {
  std::vector<float> centroid;
  std::vector<VectorId> member_ids;
  std::vector<ClusterNode> children;
  std::size_t level = 0;
  std::size_t count = 0;   // vectors in this subtree
  bool overflow = false;   // leaf larger than tau because K-means could not split it

  bool is_leaf() const { return children.empty(); }
};

/// Recursively partitions `set` with K-means++ until every partition holds at
/// most `tau` vectors. Partitions are processed breadth-first; each oversized
/// child goes back on the queue. A partition that K-means cannot separate
/// (all duplicates) becomes an overflow leaf instead of looping.
ClusterNode hcluster(const VectorSet& set, std::size_t tau, const KMeansParams& params,
                     Metric metric);

/// Depth of the deepest leaf (root = 0).
std::size_t hierarchy_depth(const ClusterNode& root);

/// Visits every leaf in depth-first order.
void for_each_leaf(const ClusterNode& root, const std::function<void(const ClusterNode&)>& fn);

}  // namespace bpann
