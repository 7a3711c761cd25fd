#include "bpann/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "bpann/error.hpp"
#include "bpann/parallel.hpp"

namespace bpann {

namespace {

// Below this many points the assignment step runs inline.
constexpr std::size_t kParallelAssignMin = 8192;

struct Assignment {
  std::size_t cluster = 0;
  float distance = 0.0f;
};

float point_norm(const MatrixView& points, std::size_t r) {
  return points.norms ? points.norms[r] : l2_norm(points.data + r * points.stride, points.dim);
}

void assign_all(const MatrixView& points, std::span<const std::size_t> rows,
                const std::vector<float>& centroids, const std::vector<float>& centroid_norms,
                std::size_t k, Metric metric, std::size_t threads,
                std::vector<Assignment>& out) {
  const std::size_t dim = points.dim;
  const std::size_t n = rows.size();
  const std::size_t chunk = 1024;
  const std::size_t chunks = (n + chunk - 1) / chunk;
  auto work = [&](std::size_t c) {
    const std::size_t end = std::min(n, (c + 1) * chunk);
    for (std::size_t i = c * chunk; i < end; ++i) {
      const float* x = points.data + rows[i] * points.stride;
      const float xn = metric == Metric::cosine ? point_norm(points, rows[i]) : 0.0f;
      Assignment best{0, std::numeric_limits<float>::infinity()};
      for (std::size_t j = 0; j < k; ++j) {
        const float d = detail::distance_with_norms(x, centroids.data() + j * dim, dim, xn,
                                                    centroid_norms[j], metric);
        if (d < best.distance) best = {j, d};
      }
      out[i] = best;
    }
  };
  parallel_for(chunks, work, n >= kParallelAssignMin ? threads : 1);
}

}  // namespace

void KMeansParams::validate() const {
  if (K < 1) throw UsageError("kmeans: K must be >= 1");
  if (J < 1) throw UsageError("kmeans: J must be >= 1");
  if (!(convergence_eps >= 0.0f)) throw UsageError("kmeans: convergence_eps must be >= 0");
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  auto splitmix = [](std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  };
  return splitmix(splitmix(seed ^ splitmix(a)) ^ splitmix(b + 0x632be59bd9b4e019ULL));
}

std::vector<float> mean_of_rows(const MatrixView& points, std::span<const std::size_t> rows) {
  std::vector<double> acc(points.dim, 0.0);
  for (const std::size_t r : rows) {
    const float* x = points.data + r * points.stride;
    for (std::size_t d = 0; d < points.dim; ++d) acc[d] += x[d];
  }
  std::vector<float> mean(points.dim, 0.0f);
  if (!rows.empty()) {
    for (std::size_t d = 0; d < points.dim; ++d) {
      mean[d] = static_cast<float>(acc[d] / static_cast<double>(rows.size()));
    }
  }
  return mean;
}

std::vector<Cluster> kmeans_pp(const MatrixView& points, const KMeansParams& params,
                               Metric metric) {
  std::vector<std::size_t> rows(points.rows);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return kmeans_pp(points, rows, params, metric);
}

std::vector<Cluster> kmeans_pp(const MatrixView& points, std::span<const std::size_t> rows,
                               const KMeansParams& params, Metric metric) {
  params.validate();
  if (rows.empty()) throw UsageError("kmeans: empty input");
  const std::size_t dim = points.dim;
  const std::size_t n = rows.size();
  const std::size_t k = std::min(params.K, n);
  std::mt19937_64 rng(params.seed);

  // k-means++ seeding: D^2 sampling against the nearest chosen centre.
  std::vector<float> centroids(k * dim);
  std::vector<float> centroid_norms(k, 0.0f);
  auto set_centroid = [&](std::size_t j, const float* src) {
    std::copy(src, src + dim, centroids.begin() + static_cast<std::ptrdiff_t>(j * dim));
    centroid_norms[j] = l2_norm(src, dim);
  };
  std::vector<double> weight(n, std::numeric_limits<double>::infinity());
  std::uniform_int_distribution<std::size_t> pick_first(0, n - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t chosen = pick_first(rng);
  for (std::size_t j = 0; j < k; ++j) {
    const float* c = points.data + rows[chosen] * points.stride;
    set_centroid(j, c);
    if (j + 1 == k) break;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const float* x = points.data + rows[i] * points.stride;
      const float d = detail::distance_with_norms(x, c, dim, point_norm(points, rows[i]),
                                                  centroid_norms[j], metric);
      weight[i] = std::min(weight[i], static_cast<double>(d) * d);
      total += weight[i];
    }
    if (total > 0.0) {
      const double target = unit(rng) * total;
      double run = 0.0;
      chosen = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        run += weight[i];
        if (run > target && weight[i] > 0.0) {
          chosen = i;
          break;
        }
      }
      while (weight[chosen] == 0.0 && chosen > 0) --chosen;
    } else {
      // Every remaining point coincides with a centre; the duplicate centre
      // ends up empty and is dropped.
      chosen = (chosen + 1) % n;
    }
  }

  std::vector<Assignment> assign(n);
  std::vector<std::size_t> counts(k);
  for (std::size_t iter = 0; iter < params.J; ++iter) {
    assign_all(points, rows, centroids, centroid_norms, k, metric, params.threads, assign);

    std::vector<double> sums(k * dim, 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = assign[i].cluster;
      const float* x = points.data + rows[i] * points.stride;
      double* s = sums.data() + j * dim;
      for (std::size_t d = 0; d < dim; ++d) s[d] += x[d];
      ++counts[j];
    }

    // Re-seed empty clusters with the point farthest from its own centre,
    // taken from a cluster that can spare it.
    bool reseeded = false;
    for (std::size_t j = 0; j < k; ++j) {
      if (counts[j] != 0) continue;
      std::size_t far = n;
      float far_d = -1.0f;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[assign[i].cluster] > 1 && assign[i].distance > far_d) {
          far = i;
          far_d = assign[i].distance;
        }
      }
      if (far == n || far_d <= 0.0f) continue;
      const std::size_t from = assign[far].cluster;
      const float* x = points.data + rows[far] * points.stride;
      for (std::size_t d = 0; d < dim; ++d) {
        sums[from * dim + d] -= x[d];
        sums[j * dim + d] = x[d];
      }
      --counts[from];
      counts[j] = 1;
      assign[far] = {j, 0.0f};
      reseeded = true;
    }

    float max_shift = 0.0f;
    for (std::size_t j = 0; j < k; ++j) {
      if (counts[j] == 0) continue;
      float shift = 0.0f;
      float* c = centroids.data() + j * dim;
      for (std::size_t d = 0; d < dim; ++d) {
        const float v = static_cast<float>(sums[j * dim + d] / static_cast<double>(counts[j]));
        shift += (v - c[d]) * (v - c[d]);
        c[d] = v;
      }
      centroid_norms[j] = l2_norm(c, dim);
      max_shift = std::max(max_shift, std::sqrt(shift));
    }
    if (!reseeded && max_shift <= params.convergence_eps) break;
  }

  std::vector<Cluster> clusters(k);
  for (std::size_t i = 0; i < n; ++i) clusters[assign[i].cluster].members.push_back(rows[i]);
  std::vector<Cluster> out;
  out.reserve(k);
  for (std::size_t j = 0; j < k; ++j) {
    if (clusters[j].members.empty()) continue;
    clusters[j].centroid = mean_of_rows(points, clusters[j].members);
    out.push_back(std::move(clusters[j]));
  }
  return out;
}

}  // namespace bpann
