#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bpann/distance.hpp"
#include "bpann/vector_set.hpp"

namespace bpann {

// Texmex vector files: records of [int32 d][d components], little-endian.
// Components are float32 (fvecs), uint8 (bvecs) or int32 (ivecs).

enum class VecFormat { fvecs, bvecs, ivecs };

/// Format from the file extension. Throws UsageError on anything else.
VecFormat format_of(const std::string& path);

/// Integer rows, as used for ground-truth ids.
struct IntRows {
  std::size_t dim = 0;
  std::size_t count = 0;
  std::vector<std::int32_t> values;

  std::span<const std::int32_t> row(std::size_t i) const { return {values.data() + i * dim, dim}; }
};

/// fvecs rows are mapped in place (no copy); bvecs rows are widened to float.
/// An empty file gives an empty set of dimension 0. Throws FormatError when
/// the size is not a whole number of records or record widths disagree.
VectorSet read_vectors(const std::string& path);
IntRows read_ivecs(const std::string& path);

void write_fvecs(const std::string& path, const MatrixView& rows);
/// Throws DomainError unless every component is an integer in [0, 255].
void write_bvecs(const std::string& path, const MatrixView& rows);
void write_ivecs(const std::string& path, const IntRows& rows);

}  // namespace bpann
