#include "bpann/greedy.hpp"

#include <algorithm>

#include "bpann/knn.hpp"

namespace bpann {

namespace {

bool same_ids(const std::vector<Neighbor>& a, const std::vector<Neighbor>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].id != b[i].id) return false;
  }
  return true;
}

template <typename Order>
GreedyResult run(const GreedyGraph& graph, std::vector<Neighbor> pool, std::size_t k,
                 VisitedMap& visited, std::size_t max_degree, Order order) {
  GreedyResult out;
  for (const auto& s : pool) {
    if (visited.get(s.id) == Visit::unseen) visited.set(s.id, Visit::seen);
  }
  keep_best(pool, k, order);
  while (true) {
    ++out.rounds;
    const std::vector<Neighbor> before = pool;
    for (const auto& c : before) {
      if (visited.get(c.id) == Visit::expanded) continue;
      visited.set(c.id, Visit::expanded);
      ++out.hops;
      auto nbrs = graph.neighbors(c.id);
      if (max_degree > 0 && nbrs.size() > max_degree) nbrs = nbrs.first(max_degree);
      for (const VectorId nb : nbrs) {
        if (!visited.mark_seen(nb)) continue;
        pool.push_back({nb, graph.distance_to_query(nb)});
        ++out.distance_evals;
      }
    }
    keep_best(pool, k, order);
    if (same_ids(pool, before)) break;
  }
  out.pool = std::move(pool);
  return out;
}

}  // namespace

GreedyResult greedy_search(const GreedyGraph& graph, std::vector<Neighbor> seeds, std::size_t k,
                           VisitedMap& visited, bool farthest, std::size_t max_degree) {
  if (farthest) return run(graph, std::move(seeds), k, visited, max_degree, FartherFirst{});
  return run(graph, std::move(seeds), k, visited, max_degree, NearerFirst{});
}

}  // namespace bpann
