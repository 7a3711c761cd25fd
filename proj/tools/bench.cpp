#include "bench.hpp"

#include <algorithm>
#include <chrono>

#include "bpann/error.hpp"
#include "bpann/knn.hpp"
#include "bpann/parallel.hpp"

namespace bpann::cli {

namespace {

using Clock = std::chrono::steady_clock;

std::vector<SearchResult> run_pass(const NodeStore& index, const MatrixView& queries,
                                   const SearchParams& sp, std::size_t batch, std::size_t threads,
                                   std::vector<double>* latency_ms) {
  std::vector<SearchResult> out;
  out.reserve(queries.rows);
  for (std::size_t start = 0; start < queries.rows; start += batch) {
    const std::size_t n = std::min(batch, queries.rows - start);
    const auto t0 = Clock::now();
    if (n == 1) {
      out.push_back(search(index, queries.row(start), sp));
    } else {
      MatrixView chunk = queries;
      chunk.data = queries.data + start * queries.stride;
      chunk.rows = n;
      if (queries.norms) chunk.norms = queries.norms + start;
      auto part = search_batch(index, chunk, sp, threads);
      for (auto& r : part) out.push_back(std::move(r));
    }
    const double ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    if (latency_ms) latency_ms->insert(latency_ms->end(), n, ms);
  }
  return out;
}

}  // namespace

double mean_recall(const std::vector<SearchResult>& results, const IntRows& truth, std::size_t k) {
  if (results.empty()) return 0.0;
  double sum = 0.0;
  std::vector<VectorId> approx, exact;
  for (std::size_t i = 0; i < results.size(); ++i) {
    approx.clear();
    exact.clear();
    for (std::size_t j = 0; j < std::min(k, results[i].neighbors.size()); ++j) {
      approx.push_back(results[i].neighbors[j].id);
    }
    const auto row = truth.row(i);
    for (std::size_t j = 0; j < k; ++j) exact.push_back(static_cast<VectorId>(row[j]));
    sum += recall_at(std::span<const VectorId>(approx), std::span<const VectorId>(exact));
  }
  return sum / static_cast<double>(results.size());
}

std::vector<BenchRow> run_bench(const NodeStore& index, const MatrixView& queries,
                                const IntRows& truth, const BenchOptions& opts) {
  if (truth.count < queries.rows) {
    throw UsageError("ground truth has " + std::to_string(truth.count) + " rows for " +
                     std::to_string(queries.rows) + " queries");
  }
  if (truth.dim < opts.k) {
    throw UsageError("ground truth width " + std::to_string(truth.dim) + " is below k = " +
                     std::to_string(opts.k));
  }
  const std::size_t threads = opts.threads == 0 ? default_threads() : opts.threads;
  std::vector<BenchRow> rows;
  for (const std::size_t beta : opts.betas) {
    for (const std::size_t batch : opts.batches) {
      if (batch == 0) throw UsageError("batch size must be positive");
      SearchParams sp;
      sp.k = opts.k;
      sp.beta = beta;
      sp.d_edge = opts.d_edge;
      sp.dissimilar = opts.dissimilar;
      sp.validate();
      if (opts.warmup) run_pass(index, queries, sp, batch, threads, nullptr);

      BenchRow row;
      row.beta = beta;
      row.batch = batch;
      row.k = opts.k;
      row.d_edge = opts.d_edge;
      row.threads = threads;
      row.queries = queries.rows;
      std::vector<double> latency;
      const auto t0 = Clock::now();
      const auto results = run_pass(index, queries, sp, batch, threads, &latency);
      row.total_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
      row.qps = static_cast<double>(queries.rows) / std::max(row.total_seconds, 1e-12);
      row.recall = mean_recall(results, truth, opts.k);
      std::vector<SearchStats> stats;
      for (const auto& r : results) {
        row.stats += r.stats;
        stats.push_back(r.stats);
      }
      if (!stats.empty()) row.avg_hops = avg_hops(stats);
      if (!latency.empty()) {
        double sum = 0.0;
        for (const double l : latency) sum += l;
        row.mean_latency_ms = sum / static_cast<double>(latency.size());
        std::sort(latency.begin(), latency.end());
        const std::size_t idx = (latency.size() * 99 + 99) / 100 - 1;
        row.p99_latency_ms = latency[std::min(idx, latency.size() - 1)];
      }
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace bpann::cli
