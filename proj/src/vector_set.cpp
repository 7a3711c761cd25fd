#include "bpann/vector_set.hpp"

#include <cmath>
#include <string>

#include "bpann/error.hpp"

namespace bpann {

VectorSet::VectorSet(std::size_t dim) : dim_(dim), stride_(dim) {}

VectorSet VectorSet::from_rows(std::size_t dim, std::vector<float> flat,
                               std::vector<VectorId> ids) {
  if (dim == 0) throw UsageError("VectorSet: dim must be positive");
  if (flat.size() % dim != 0) {
    throw UsageError("VectorSet: data length " + std::to_string(flat.size()) +
                     " is not a multiple of dim " + std::to_string(dim));
  }
  VectorSet set(dim);
  set.count_ = flat.size() / dim;
  set.owned_ = std::move(flat);
  if (!ids.empty() && ids.size() != set.count_) {
    throw UsageError("VectorSet: " + std::to_string(ids.size()) + " ids for " +
                     std::to_string(set.count_) + " rows");
  }
  set.ids_ = std::move(ids);
  set.index_ids();
  set.check_and_cache_norms(0);
  return set;
}

VectorSet VectorSet::mapped(std::shared_ptr<const MappedFile> file, const float* base,
                            std::size_t count, std::size_t dim, std::size_t stride) {
  if (dim == 0 && count > 0) throw UsageError("VectorSet: dim must be positive");
  VectorSet set(dim);
  set.file_ = std::move(file);
  set.mapped_base_ = base;
  set.count_ = count;
  set.stride_ = stride;
  set.check_and_cache_norms(0);
  return set;
}

std::optional<std::size_t> VectorSet::index_of(VectorId id) const {
  if (ids_.empty()) {
    if (id < count_) return static_cast<std::size_t>(id);
    return std::nullopt;
  }
  const auto it = id_index_.find(id);
  if (it == id_index_.end()) return std::nullopt;
  return it->second;
}

void VectorSet::append(std::span<const float> v, VectorId id) {
  if (file_) throw UsageError("VectorSet: cannot append to a file-mapped set");
  if (v.size() != dim_) {
    throw UsageError("VectorSet: appending dim " + std::to_string(v.size()) + " to dim " +
                     std::to_string(dim_));
  }
  if (index_of(id)) throw UsageError("VectorSet: duplicate id " + std::to_string(id));
  if (ids_.empty() && id != count_) {
    // Switch from identity ids to an explicit table.
    ids_.resize(count_);
    for (std::size_t i = 0; i < count_; ++i) {
      ids_[i] = i;
      id_index_.emplace(i, i);
    }
  }
  owned_.insert(owned_.end(), v.begin(), v.end());
  if (!ids_.empty()) {
    ids_.push_back(id);
    id_index_.emplace(id, count_);
  }
  ++count_;
  try {
    check_and_cache_norms(count_ - 1);
  } catch (...) {
    --count_;
    owned_.resize(count_ * dim_);
    if (!ids_.empty()) {
      ids_.pop_back();
      id_index_.erase(id);
    }
    throw;
  }
}

VectorSet VectorSet::subset(std::span<const std::size_t> rows) const {
  std::vector<float> flat;
  flat.reserve(rows.size() * dim_);
  std::vector<VectorId> ids;
  ids.reserve(rows.size());
  for (const std::size_t r : rows) {
    const auto v = row(r);
    flat.insert(flat.end(), v.begin(), v.end());
    ids.push_back(id(r));
  }
  return from_rows(dim_, std::move(flat), std::move(ids));
}

void VectorSet::index_ids() {
  id_index_.clear();
  if (ids_.empty()) return;
  id_index_.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!id_index_.emplace(ids_[i], i).second) {
      throw UsageError("VectorSet: duplicate id " + std::to_string(ids_[i]));
    }
  }
}

void VectorSet::check_and_cache_norms(std::size_t from) {
  norms_.resize(count_);
  for (std::size_t i = from; i < count_; ++i) {
    const auto v = row(i);
    for (const float x : v) {
      if (!std::isfinite(x)) {
        throw DomainError("VectorSet: non-finite component in row " + std::to_string(i));
      }
    }
    norms_[i] = l2_norm(v.data(), dim_);
  }
}

}  // namespace bpann
