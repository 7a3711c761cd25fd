#include "bpann/farthest_rng.hpp"

#include <algorithm>
#include <numeric>

#include "bpann/distance.hpp"
#include "bpann/parallel.hpp"

namespace bpann {

namespace {

class RowGraph final : public GreedyGraph {
 public:
  RowGraph(const std::vector<std::vector<VectorId>>& adj, const VectorSet& set,
           std::span<const float> q, float qnorm, Metric metric)
      : adj_(adj), set_(set), q_(q), qnorm_(qnorm), metric_(metric) {}

  std::span<const VectorId> neighbors(VectorId v) const override { return adj_[v]; }
  float distance_to_query(VectorId v) const override {
    return detail::distance_with_norms(q_.data(), set_.row(v).data(), set_.dim(), qnorm_,
                                       set_.norm(v), metric_);
  }

 private:
  const std::vector<std::vector<VectorId>>& adj_;
  const VectorSet& set_;
  std::span<const float> q_;
  float qnorm_;
  Metric metric_;
};

}  // namespace

FarthestRngGraph::FarthestRngGraph(const VectorSet& set, Metric metric, std::size_t threads)
    : set_(&set), metric_(metric), adjacency_(set.size()) {
  const std::size_t n = set.size();
  const std::size_t dim = set.dim();
  auto d = [&](std::size_t a, std::size_t b) {
    return detail::distance_with_norms(set.row(a).data(), set.row(b).data(), dim, set.norm(a),
                                       set.norm(b), metric);
  };
  parallel_for(
      n,
      [&](std::size_t x) {
        std::vector<float> dx(n);
        for (std::size_t j = 0; j < n; ++j) dx[j] = d(x, j);
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
          return dx[a] > dx[b] || (dx[a] == dx[b] && a < b);
        });
        // (x, y) survives unless some z is farther than d(x, y) from both.
        // Only z ahead of y in x's farthest-first order can be farther from x.
        for (std::size_t p = 0; p < n; ++p) {
          const std::size_t y = order[p];
          if (y == x) continue;
          const float dxy = dx[y];
          bool blocked = false;
          for (std::size_t s = 0; s < p && !blocked; ++s) {
            const std::size_t z = order[s];
            if (dx[z] <= dxy) break;
            if (z != y && d(y, z) > dxy) blocked = true;
          }
          if (!blocked) adjacency_[x].push_back(y);
        }
      },
      threads);
}

std::size_t FarthestRngGraph::min_degree() const {
  std::size_t m = adjacency_.empty() ? 0 : adjacency_[0].size();
  for (const auto& a : adjacency_) m = std::min(m, a.size());
  return m;
}

std::vector<Neighbor> FarthestRngGraph::search(std::span<const float> q, std::size_t k,
                                               GreedyResult* trace) const {
  if (adjacency_.empty() || k == 0) return {};
  const RowGraph graph(adjacency_, *set_, q, l2_norm(q.data(), q.size()), metric_);
  VisitedMap visited;
  GreedyResult r = greedy_search(graph, {{0, graph.distance_to_query(0)}}, k, visited, true);
  for (auto& nb : r.pool) nb.id = set_->id(nb.id);
  std::vector<Neighbor> out = r.pool;
  if (trace) *trace = std::move(r);
  return out;
}

}  // namespace bpann
