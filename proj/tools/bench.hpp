#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "bpann/distance.hpp"
#include "bpann/node_store.hpp"
#include "bpann/search.hpp"
#include "bpann/texmex.hpp"

namespace bpann::cli {

struct BenchOptions {
  std::vector<std::size_t> betas{32};
  std::vector<std::size_t> batches{1};
  std::size_t k = 10;
  std::size_t d_edge = 0;
  bool dissimilar = false;
  std::size_t threads = 0;
  bool warmup = true;
};

struct BenchRow {
  std::size_t beta = 0;
  std::size_t batch = 0;
  std::size_t k = 0;
  std::size_t d_edge = 0;
  std::size_t threads = 0;
  std::size_t queries = 0;
  double recall = 0.0;
  double qps = 0.0;
  double total_seconds = 0.0;
  double mean_latency_ms = 0.0;
  double p99_latency_ms = 0.0;
  double avg_hops = 0.0;
  SearchStats stats;  // summed over the timed pass
};

/// One warm-up pass (optional) and one timed pass per (beta, batch) pair.
/// Batches of one go through search(); larger batches through search_batch().
/// A query's latency is the wall time of the batch it belongs to.
/// Throws UsageError when the ground truth has fewer rows than there are
/// queries or fewer than k ids per row.
std::vector<BenchRow> run_bench(const NodeStore& index, const MatrixView& queries,
                                const IntRows& truth, const BenchOptions& opts);

/// Mean Recall-k@k of `results` against the first k ids of each truth row.
double mean_recall(const std::vector<SearchResult>& results, const IntRows& truth, std::size_t k);

}  // namespace bpann::cli
