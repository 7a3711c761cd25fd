#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "bpann/types.hpp"

namespace bpann {

/// Per-query visit state of a vector id.
enum class Visit : std::uint8_t {
  unseen = 0,    // never scored
  seen = 1,      // scored, edges not yet followed
  expanded = 2,  // edges followed
};

class VisitedMap {
 public:
  Visit get(VectorId id) const {
    const auto it = states_.find(id);
    return it == states_.end() ? Visit::unseen : it->second;
  }
  void set(VectorId id, Visit v) { states_[id] = v; }
  /// Marks `id` seen; returns false if it was already seen or expanded.
  bool mark_seen(VectorId id) { return states_.try_emplace(id, Visit::seen).second; }
  void clear() { states_.clear(); }
  std::size_t size() const { return states_.size(); }

 private:
  std::unordered_map<VectorId, Visit> states_;
};

/// What greedy refinement needs from a graph: adjacency and a scorer that
/// knows the query.
class GreedyGraph {
 public:
  virtual ~GreedyGraph() = default;
  virtual std::span<const VectorId> neighbors(VectorId v) const = 0;
  virtual float distance_to_query(VectorId v) const = 0;
};

struct GreedyResult {
  std::vector<Neighbor> pool;  // best k, sorted
  std::size_t hops = 0;        // vertices whose edges were followed
  std::size_t rounds = 0;
  std::size_t distance_evals = 0;
};

/// Fixed-point greedy refinement over skip edges. Each round follows the
/// edges of every retained candidate not yet expanded, scores unseen
/// neighbours, and keeps the best k. Stops when a round leaves the retained
/// set unchanged. `max_degree` truncates each adjacency list (0 = all).
/// With `farthest`, "best" means largest distance.
GreedyResult greedy_search(const GreedyGraph& graph, std::vector<Neighbor> seeds, std::size_t k,
                           VisitedMap& visited, bool farthest = false,
                           std::size_t max_degree = 0);

}  // namespace bpann
