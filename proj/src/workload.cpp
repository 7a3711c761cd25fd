#include "bpann/workload.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

namespace bpann {

std::vector<std::size_t> temporal_order(const MatrixView& queries, Metric metric) {
  const std::size_t n = queries.rows;
  std::vector<std::size_t> order;
  if (n == 0) return order;
  std::vector<float> norms(n);
  for (std::size_t i = 0; i < n; ++i) norms[i] = l2_norm(queries.row(i).data(), queries.dim);
  std::vector<char> used(n, 0);
  order.reserve(n);
  std::size_t cur = 0;
  used[0] = 1;
  order.push_back(0);
  for (std::size_t step = 1; step < n; ++step) {
    const auto q = queries.row(cur);
    float best = std::numeric_limits<float>::infinity();
    std::size_t arg = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (used[j]) continue;
      const float d = detail::distance_with_norms(q.data(), queries.row(j).data(), queries.dim,
                                                  norms[cur], norms[j], metric);
      if (d < best || arg == n) {
        best = d;
        arg = j;
      }
    }
    used[arg] = 1;
    order.push_back(arg);
    cur = arg;
  }
  return order;
}

std::vector<std::size_t> shuffled_order(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

std::vector<float> gather_rows(const MatrixView& m, const std::vector<std::size_t>& order) {
  std::vector<float> out;
  out.reserve(order.size() * m.dim);
  for (const std::size_t i : order) {
    const auto r = m.row(i);
    out.insert(out.end(), r.begin(), r.end());
  }
  return out;
}

}  // namespace bpann
