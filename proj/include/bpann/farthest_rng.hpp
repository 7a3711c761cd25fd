#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bpann/greedy.hpp"
#include "bpann/vector_set.hpp"

namespace bpann {

/// Dissimilarity baseline graph: x and y are linked when no third point is
/// farther from both of them than they are from each other. Undirected;
/// adjacency is over row indices, farthest first. O(N^2) distances at best,
/// so only for small sets.
class FarthestRngGraph {
 public:
  FarthestRngGraph(const VectorSet& set, Metric metric, std::size_t threads = 0);

  std::size_t size() const { return adjacency_.size(); }
  std::span<const VectorId> neighbors(std::size_t row) const { return adjacency_[row]; }
  std::size_t min_degree() const;

  /// k farthest found by greedy farthest-first traversal from row 0.
  std::vector<Neighbor> search(std::span<const float> q, std::size_t k,
                               GreedyResult* trace = nullptr) const;

 private:
  const VectorSet* set_;
  Metric metric_;
  std::vector<std::vector<VectorId>> adjacency_;  // row indices
};

}  // namespace bpann
