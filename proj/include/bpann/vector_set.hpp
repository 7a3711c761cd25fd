#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "bpann/distance.hpp"
#include "bpann/mapped_file.hpp"
#include "bpann/types.hpp"

namespace bpann {

enum class Backing { resident, file_mapped };

/// The dataset: `size()` vectors of `dim()` floats with unique ids.
///
/// Rows are either owned (resident) or read straight out of a mapped file,
/// in which case consecutive rows may be `stride()` floats apart. Every row is
/// checked for NaN/Inf on the way in, and its L2 norm is cached.
class VectorSet {
 public:
  explicit VectorSet(std::size_t dim = 0);

  /// `flat` holds rows back to back. `ids` defaults to 0..N-1.
  static VectorSet from_rows(std::size_t dim, std::vector<float> flat,
                             std::vector<VectorId> ids = {});

  /// Rows live inside `file`; row i starts at base + i * stride.
  static VectorSet mapped(std::shared_ptr<const MappedFile> file, const float* base,
                          std::size_t count, std::size_t dim, std::size_t stride);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return count_; }
  bool empty() const { return count_ == 0; }
  Backing backing() const { return file_ ? Backing::file_mapped : Backing::resident; }
  std::size_t stride() const { return stride_; }

  std::span<const float> row(std::size_t i) const { return {base() + i * stride_, dim_}; }
  VectorId id(std::size_t i) const { return ids_.empty() ? static_cast<VectorId>(i) : ids_[i]; }
  float norm(std::size_t i) const { return norms_[i]; }
  std::optional<std::size_t> index_of(VectorId id) const;

  /// Whole set as a strided matrix (norms attached).
  MatrixView matrix() const { return {base(), count_, dim_, stride_, norms_.data()}; }

  /// Resident sets only. Throws UsageError on a duplicate id or wrong width,
  /// DomainError on a non-finite component.
  void append(std::span<const float> v, VectorId id);

  /// Resident copy of the given rows, keeping their ids.
  VectorSet subset(std::span<const std::size_t> rows) const;

 private:
  const float* base() const { return file_ ? mapped_base_ : owned_.data(); }
  void index_ids();
  void check_and_cache_norms(std::size_t from);

  std::size_t dim_ = 0;
  std::size_t count_ = 0;
  std::size_t stride_ = 0;
  std::vector<float> owned_;
  std::shared_ptr<const MappedFile> file_;
  const float* mapped_base_ = nullptr;
  std::vector<VectorId> ids_;  // empty means identity ids
  std::unordered_map<VectorId, std::size_t> id_index_;
  std::vector<float> norms_;
};

}  // namespace bpann
