#include "bpann/distance.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "bpann/error.hpp"

namespace bpann {

namespace {

constexpr std::size_t kLanes = 8;

}  // namespace

// Fixed lane count and reduction order: the compiler vectorizes the lanes but
// the summation order is the same on every call.
float dot(const float* a, const float* b, std::size_t n) noexcept {
  float acc[kLanes] = {};
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    for (std::size_t l = 0; l < kLanes; ++l) acc[l] += a[i + l] * b[i + l];
  }
  for (std::size_t l = 0; i < n; ++i, ++l) acc[l] += a[i] * b[i];
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

float squared_l2(const float* a, const float* b, std::size_t n) noexcept {
  float acc[kLanes] = {};
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    for (std::size_t l = 0; l < kLanes; ++l) {
      const float d = a[i + l] - b[i + l];
      acc[l] += d * d;
    }
  }
  for (std::size_t l = 0; i < n; ++i, ++l) {
    const float d = a[i] - b[i];
    acc[l] += d * d;
  }
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

float l2_norm(const float* a, std::size_t n) noexcept { return std::sqrt(dot(a, a, n)); }

namespace detail {

float distance_with_norms(const float* a, const float* b, std::size_t n, float norm_a,
                          float norm_b, Metric metric) noexcept {
  if (metric == Metric::euclidean) return std::sqrt(squared_l2(a, b, n));
  if (norm_a == 0.0f || norm_b == 0.0f) return 1.0f;
  const float cos = dot(a, b, n) / (norm_a * norm_b);
  return std::clamp(1.0f - cos, 0.0f, 2.0f);
}

namespace {

// Each query keeps its eight lanes in two four-wide vectors, lo = lanes 0..3
// and hi = lanes 4..7. Lane l sees exactly the terms the scalar kernels add
// to acc[l], in the same order, so results match them bit for bit.
typedef float Quad __attribute__((vector_size(16)));

inline Quad load(const float* p) {
  Quad v;
  std::memcpy(&v, p, sizeof v);
  return v;
}

template <bool L2>
inline Quad term(Quad x, Quad k) {
  if constexpr (L2) {
    const Quad d = x - k;
    return d * d;
  } else {
    return x * k;
  }
}

template <bool L2>
void accumulate_x4(const float* const q[4], const float* key, std::size_t n, float sums[4]) {
  static_assert(kLanes == 8);
  Quad lo0 = {}, lo1 = {}, lo2 = {}, lo3 = {}, hi0 = {}, hi1 = {}, hi2 = {}, hi3 = {};
  const float *q0 = q[0], *q1 = q[1], *q2 = q[2], *q3 = q[3];
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const Quad kl = load(key + i), kh = load(key + i + 4);
    lo0 += term<L2>(load(q0 + i), kl);
    hi0 += term<L2>(load(q0 + i + 4), kh);
    lo1 += term<L2>(load(q1 + i), kl);
    hi1 += term<L2>(load(q1 + i + 4), kh);
    lo2 += term<L2>(load(q2 + i), kl);
    hi2 += term<L2>(load(q2 + i + 4), kh);
    lo3 += term<L2>(load(q3 + i), kl);
    hi3 += term<L2>(load(q3 + i + 4), kh);
  }
  const Quad lo[4] = {lo0, lo1, lo2, lo3}, hi[4] = {hi0, hi1, hi2, hi3};
  for (std::size_t j = 0; j < 4; ++j) {
    float a[kLanes];
    std::memcpy(a, &lo[j], sizeof(Quad));
    std::memcpy(a + 4, &hi[j], sizeof(Quad));
    for (std::size_t t = i, l = 0; t < n; ++t, ++l) {
      if constexpr (L2) {
        const float d = q[j][t] - key[t];
        a[l] += d * d;
      } else {
        a[l] += q[j][t] * key[t];
      }
    }
    sums[j] = ((a[0] + a[1]) + (a[2] + a[3])) + ((a[4] + a[5]) + (a[6] + a[7]));
  }
}

}  // namespace

void distance_x4(const float* const q[4], const float qnorm[4], const float* key, float key_norm,
                 std::size_t n, Metric metric, float out[4]) noexcept {
  float sums[4];
  if (metric == Metric::euclidean) {
    accumulate_x4<true>(q, key, n, sums);
    for (std::size_t j = 0; j < 4; ++j) out[j] = std::sqrt(sums[j]);
    return;
  }
  accumulate_x4<false>(q, key, n, sums);
  for (std::size_t j = 0; j < 4; ++j) {
    if (qnorm[j] == 0.0f || key_norm == 0.0f) {
      out[j] = 1.0f;
    } else {
      out[j] = std::clamp(1.0f - sums[j] / (qnorm[j] * key_norm), 0.0f, 2.0f);
    }
  }
}

}  // namespace detail

float distance(std::span<const float> a, std::span<const float> b, Metric metric) {
  if (a.size() != b.size()) {
    throw UsageError("distance: dimension mismatch " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  }
  float na = 0.0f;
  float nb = 0.0f;
  if (metric == Metric::cosine) {
    na = l2_norm(a.data(), a.size());
    nb = l2_norm(b.data(), b.size());
    if (na == 0.0f || nb == 0.0f) throw DomainError("cosine distance of a zero vector");
  }
  return detail::distance_with_norms(a.data(), b.data(), a.size(), na, nb, metric);
}

void distance_one_to_many(std::span<const float> q, const MatrixView& block, Metric metric,
                          std::span<float> out) {
  if (q.size() != block.dim) {
    throw UsageError("distance_one_to_many: query dim " + std::to_string(q.size()) +
                     " vs block dim " + std::to_string(block.dim));
  }
  if (out.size() < block.rows) throw UsageError("distance_one_to_many: output too small");
  float qn = 0.0f;
  if (metric == Metric::cosine) {
    qn = l2_norm(q.data(), q.size());
    if (qn == 0.0f) throw DomainError("cosine distance of a zero query");
  }
  for (std::size_t i = 0; i < block.rows; ++i) {
    const float* row = block.data + i * block.stride;
    float rn = 0.0f;
    if (metric == Metric::cosine) rn = block.norms ? block.norms[i] : l2_norm(row, block.dim);
    out[i] = detail::distance_with_norms(q.data(), row, block.dim, qn, rn, metric);
  }
}

std::vector<float> distance_one_to_many(std::span<const float> q, const MatrixView& block,
                                        Metric metric) {
  std::vector<float> out(block.rows);
  distance_one_to_many(q, block, metric, out);
  return out;
}

}  // namespace bpann
