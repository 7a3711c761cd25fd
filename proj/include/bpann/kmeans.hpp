#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "bpann/distance.hpp"
#include "bpann/types.hpp"
#include "bpann/vector_set.hpp"

namespace bpann {

struct KMeansParams {
  std::size_t K = 10;             // clusters per split
  std::size_t J = 25;             // max assignment/update rounds
  std::uint64_t seed = 42;
  float convergence_eps = 1e-4f;  // stop once no centroid moves farther than this
  std::size_t threads = 1;        // 0 = default_threads()

  void validate() const;
};

/// One output cluster; `members` are row indices into the input matrix.
struct Cluster {
  std::vector<float> centroid;
  std::vector<std::size_t> members;
};

/// K-means with k-means++ seeding over the given rows of `points`.
///
/// Returns at most K nonempty clusters (fewer when there are fewer distinct
/// points), every row in exactly one, each centroid the arithmetic mean of its
/// members. Deterministic for a fixed seed and thread-count independent.
/// Throws UsageError for an empty row set.
std::vector<Cluster> kmeans_pp(const MatrixView& points, std::span<const std::size_t> rows,
                               const KMeansParams& params, Metric metric);

/// Same, over all rows of `points`.
std::vector<Cluster> kmeans_pp(const MatrixView& points, const KMeansParams& params,
                               Metric metric);

/// Mean of the given rows, accumulated in double.
std::vector<float> mean_of_rows(const MatrixView& points, std::span<const std::size_t> rows);

/// Mixes a seed with extra words (splitmix64); used to derive per-task seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

}  // namespace bpann
