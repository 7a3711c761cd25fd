#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "bpann/distance.hpp"
#include "bpann/node_store.hpp"
#include "bpann/types.hpp"

namespace bpann {

struct SearchParams {
  std::size_t k = 10;
  std::size_t beta = 32;        // nodes expanded per level
  std::size_t d_edge = 0;       // skip edges followed per vertex; 0 = tree only
  bool dissimilar = false;      // farthest instead of nearest
  std::optional<Metric> metric; // must match the index when set

  void validate() const;
};

struct SearchStats {
  std::uint64_t nodes_visited = 0;  // node fetches
  std::uint64_t hops = 0;           // vertices whose skip edges were followed
  std::uint64_t distance_evals = 0;
  std::uint64_t disk_reads = 0;
  std::uint64_t cache_hits = 0;

  SearchStats& operator+=(const SearchStats& o);
};

struct SearchResult {
  std::vector<Neighbor> neighbors;  // ascending (descending when dissimilar)
  SearchStats stats;
};

/// Level-synchronous descent: each frontier node pushes its best beta
/// children; the next frontier is the best beta of everything pushed. Leaves
/// contribute their best k vectors. With d_edge > 0 the candidates are then
/// refined over the skip edges. Takes the store's shared lock.
/// Throws UsageError on a dimension or metric mismatch, or when d_edge > 0 and
/// the index carries no skip edges.
SearchResult search(const NodeStore& store, std::span<const float> q, const SearchParams& params);

/// Same results as calling search() per query. Each node on a level is
/// fetched once for every query that reached it and its keys are scored four
/// queries at a time; skip-edge refinement fans out one query per worker.
/// Stats of a shared node fetch are charged to the first query reaching it.
std::vector<SearchResult> search_batch(const NodeStore& store, const MatrixView& queries,
                                       const SearchParams& params, std::size_t threads = 0);

/// Mean hops per query. Throws UsageError on an empty list.
double avg_hops(std::span<const SearchStats> stats);

}  // namespace bpann
