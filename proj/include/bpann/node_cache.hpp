#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <list>
#include <memory>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "bpann/node_store.hpp"

namespace bpann {

struct EvictionReport {
  std::size_t evicted = 0;
  std::size_t flushed = 0;
  std::size_t skipped_pinned = 0;
  std::uint64_t bytes_used = 0;
};

/// LRU cache of leaf nodes with a byte cap.
///
/// Loads happen outside the lock, so concurrent misses on one node may both
/// read it; the first insert wins. A node is pinned while anyone besides the
/// cache holds a reference to it; maintenance never evicts pinned nodes and
/// flushes dirty ones before dropping them.
class NodeCache {
 public:
  using Loader = std::function<std::shared_ptr<Node>()>;
  using Flusher = std::function<void(const Node&)>;
  using Sizer = std::function<std::uint64_t(const Node&)>;

  NodeCache(std::uint64_t capacity_bytes, Flusher flusher, Sizer sizer);

  /// Cached node, loading it on a miss. Bumps recency.
  std::shared_ptr<Node> get(NodeId id, const Loader& load, IoCounters* io);
  /// Same, and marks the node dirty.
  std::shared_ptr<Node> get_for_write(NodeId id, const Loader& load, IoCounters* io);
  /// Adds a node that has no disk record yet (always dirty).
  void put_new(std::shared_ptr<Node> node);

  /// Evicts least recently used unpinned nodes until bytes_used <= capacity.
  /// A failed flush leaves that node resident and dirty and rethrows.
  EvictionReport maintain();
  /// Writes every dirty node without evicting anything.
  std::size_t flush_dirty();

  std::uint64_t capacity() const { return capacity_; }
  std::uint64_t bytes_used() const;
  std::uint64_t evictions() const;
  bool contains(NodeId id) const;
  bool is_dirty(NodeId id) const;
  std::size_t size() const;
  /// Most recent first.
  std::vector<NodeId> recency() const;

 private:
  struct Entry {
    std::shared_ptr<Node> node;
    std::uint64_t bytes = 0;
    bool dirty = false;
    std::list<NodeId>::iterator pos;
  };

  std::shared_ptr<Node> lookup(NodeId id, const Loader& load, IoCounters* io, bool dirty);
  void refresh_bytes_locked();

  std::uint64_t capacity_;
  Flusher flusher_;
  Sizer sizer_;
  mutable std::mutex mu_;
  std::list<NodeId> lru_;  // front = most recent
  std::unordered_map<NodeId, Entry> map_;
  std::uint64_t bytes_ = 0;
  std::uint64_t evictions_ = 0;
};

}  // namespace bpann
