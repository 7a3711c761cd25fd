#include "bpann/knn.hpp"

#include <string>
#include <unordered_set>

#include "bpann/error.hpp"

namespace bpann {

namespace {

template <typename Order>
std::vector<Neighbor> scan(const VectorSet& set, std::span<const float> q, std::size_t k,
                           Metric metric, Order order) {
  if (k == 0) throw UsageError("k must be positive");
  if (k > set.size()) {
    throw UsageError("k=" + std::to_string(k) + " exceeds dataset size " +
                     std::to_string(set.size()));
  }
  std::vector<float> dist(set.size());
  distance_one_to_many(q, set.matrix(), metric, dist);
  std::vector<Neighbor> all(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) all[i] = {set.id(i), dist[i]};
  keep_best(all, k, order);
  return all;
}

}  // namespace

std::vector<Neighbor> brute_force_knn(const VectorSet& set, std::span<const float> q,
                                      std::size_t k, Metric metric) {
  return scan(set, q, k, metric, NearerFirst{});
}

std::vector<Neighbor> brute_force_farthest(const VectorSet& set, std::span<const float> q,
                                           std::size_t k, Metric metric) {
  return scan(set, q, k, metric, FartherFirst{});
}

double recall_at(std::span<const VectorId> approx, std::span<const VectorId> truth) {
  if (truth.empty()) throw UsageError("recall_at: empty ground truth");
  const std::unordered_set<VectorId> want(truth.begin(), truth.end());
  std::unordered_set<VectorId> hit;
  for (const VectorId id : approx) {
    if (want.contains(id)) hit.insert(id);
  }
  return static_cast<double>(hit.size()) / static_cast<double>(want.size());
}

double recall_at(std::span<const Neighbor> approx, std::span<const Neighbor> truth) {
  std::vector<VectorId> a;
  a.reserve(approx.size());
  for (const auto& n : approx) a.push_back(n.id);
  std::vector<VectorId> t;
  t.reserve(truth.size());
  for (const auto& n : truth) t.push_back(n.id);
  return recall_at(a, t);
}

}  // namespace bpann
