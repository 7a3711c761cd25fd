#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <utility>

#include "bpann/node.hpp"
#include "bpann/types.hpp"

namespace bpann {

struct IoCounters {
  std::uint64_t disk_reads = 0;
  std::uint64_t cache_hits = 0;
};

using NodePtr = std::shared_ptr<const Node>;

/// Anything a B+ANN tree can live in: memory, or a page file behind a cache.
///
/// Search, insert, split and verification are written once against this
/// interface. Readers take `mutex()` shared; inserts take it exclusively.
/// A NodePtr returned by read() pins the node until it is released.
class NodeStore {
 public:
  virtual ~NodeStore() = default;
  NodeStore() = default;
  NodeStore(NodeStore&&) noexcept = default;
  NodeStore& operator=(NodeStore&&) noexcept = default;

  virtual std::size_t dim() const = 0;
  virtual const BuildParams& params() const = 0;
  Metric metric() const { return params().metric; }
  virtual NodeId root_id() const = 0;
  virtual std::size_t node_count() const = 0;

  virtual NodePtr read(NodeId id, IoCounters* io = nullptr) const = 0;
  virtual std::optional<Location> locate(VectorId id) const = 0;

  virtual bool has_edges() const = 0;
  /// (d_edge, s_leaf) the skip edges were built with; zeros without edges.
  virtual std::pair<std::size_t, std::size_t> edge_shape() const { return {0, 0}; }
  /// Skip edges of the vector in `slot` of `leaf` (nearest first).
  virtual std::span<const VectorId> neighbors(const Node& leaf, std::uint32_t slot) const = 0;

  /// Cache maintenance hook called between traversal levels.
  virtual void sync_lru() const {}

  /// Number of vectors indexed.
  std::uint64_t size() const { return read(root_id())->weight; }
  /// Number of levels (a lone root leaf is height 1).
  std::size_t height() const { return static_cast<std::size_t>(read(root_id())->level) + 1; }

  /// Incremented by every mutation.
  std::uint64_t version() const { return version_; }

  std::shared_mutex& mutex() const { return *mutex_; }

  // Mutation surface for insert/split. Callers hold mutex() exclusively.
  virtual std::shared_ptr<Node> write(NodeId id) = 0;
  /// Assigns the next free id to `node`, stores it, returns the id.
  virtual NodeId allocate(std::shared_ptr<Node> node) = 0;
  virtual void set_root(NodeId id) = 0;
  virtual void set_location(VectorId id, Location loc) = 0;
  /// Called after a leaf's membership changed (edge staleness bookkeeping).
  virtual void leaf_changed(NodeId) {}

 protected:
  void bump_version() { ++version_; }

 private:
  std::uint64_t version_ = 0;
  std::unique_ptr<std::shared_mutex> mutex_ = std::make_unique<std::shared_mutex>();
};

}  // namespace bpann
