#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "bpann/types.hpp"
#include "bpann/vector_set.hpp"

namespace bpann {

/// Exact k nearest neighbours by full scan, ascending distance, ties by
/// smaller id. This is the ground-truth oracle for every recall figure.
/// Throws UsageError if k == 0 or k > set.size().
std::vector<Neighbor> brute_force_knn(const VectorSet& set, std::span<const float> q,
                                      std::size_t k, Metric metric);

/// Exact k farthest vectors, descending distance, ties by smaller id.
std::vector<Neighbor> brute_force_farthest(const VectorSet& set, std::span<const float> q,
                                           std::size_t k, Metric metric);

/// |ids(approx) ∩ ids(truth)| / |truth|. Throws UsageError on empty truth.
double recall_at(std::span<const Neighbor> approx, std::span<const Neighbor> truth);
double recall_at(std::span<const VectorId> approx, std::span<const VectorId> truth);

/// Keeps the best `k` of `items` under `order`, sorted. Linear-time selection
/// followed by a sort of the survivors.
template <typename Order>
void keep_best(std::vector<Neighbor>& items, std::size_t k, Order order) {
  if (items.size() > k) {
    std::nth_element(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(k), items.end(),
                     order);
    items.resize(k);
  }
  std::sort(items.begin(), items.end(), order);
}

}  // namespace bpann
