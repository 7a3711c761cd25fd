#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bpann/types.hpp"

namespace bpann {

/// Read-only row-major view over `rows` vectors of `dim` floats, with rows
/// `stride` floats apart (stride > dim for interleaved on-disk layouts).
/// `norms`, when set, holds the cached L2 norm of every row.
struct MatrixView {
  const float* data = nullptr;
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::size_t stride = 0;
  const float* norms = nullptr;

  std::span<const float> row(std::size_t i) const { return {data + i * stride, dim}; }

  static MatrixView dense(std::span<const float> flat, std::size_t dim,
                          const float* norms = nullptr) {
    return {flat.data(), dim == 0 ? 0 : flat.size() / dim, dim, dim, norms};
  }
};

// Raw kernels. Every distance in the library is computed by these, so equal
// inputs give bitwise-equal outputs regardless of which path asked.
float dot(const float* a, const float* b, std::size_t n) noexcept;
float squared_l2(const float* a, const float* b, std::size_t n) noexcept;
float l2_norm(const float* a, std::size_t n) noexcept;

namespace detail {
// No validation. A zero norm under cosine yields 1 (treated as orthogonal);
// this is only reachable for centroids, never for validated data vectors.
float distance_with_norms(const float* a, const float* b, std::size_t n, float norm_a,
                          float norm_b, Metric metric) noexcept;

// Four queries against one key. out[j] is bitwise equal to
// distance_with_norms(q[j], key, ...): each pair keeps its own lanes and
// reduction order, the key is just loaded once.
void distance_x4(const float* const q[4], const float qnorm[4], const float* key, float key_norm,
                 std::size_t n, Metric metric, float out[4]) noexcept;
}  // namespace detail

/// Euclidean (L2) or cosine distance, 1 - a.b / (|a||b|), clamped to [0, 2].
/// Throws UsageError on dimension mismatch and DomainError on a zero vector
/// under cosine.
float distance(std::span<const float> a, std::span<const float> b, Metric metric);

/// out[i] = distance(q, block.row(i)). Uses cached block norms when present.
void distance_one_to_many(std::span<const float> q, const MatrixView& block, Metric metric,
                          std::span<float> out);
std::vector<float> distance_one_to_many(std::span<const float> q, const MatrixView& block,
                                        Metric metric);

}  // namespace bpann
