#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "bpann/distance.hpp"

namespace bpann {

/// Query order that follows a nearest-neighbour chain: start at row 0, then
/// repeatedly append the closest row not yet used (ties by row index).
/// Exact and quadratic in the number of rows.
std::vector<std::size_t> temporal_order(const MatrixView& queries, Metric metric);

/// Uniformly random permutation of 0..n-1.
std::vector<std::size_t> shuffled_order(std::size_t n, std::uint64_t seed);

/// Rows of `m` in the given order, back to back.
std::vector<float> gather_rows(const MatrixView& m, const std::vector<std::size_t>& order);

}  // namespace bpann
