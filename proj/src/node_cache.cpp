#include "bpann/node_cache.hpp"

#include <utility>

namespace bpann {

NodeCache::NodeCache(std::uint64_t capacity_bytes, Flusher flusher, Sizer sizer)
    : capacity_(capacity_bytes), flusher_(std::move(flusher)), sizer_(std::move(sizer)) {}

std::shared_ptr<Node> NodeCache::lookup(NodeId id, const Loader& load, IoCounters* io,
                                        bool dirty) {
  {
    std::lock_guard lock(mu_);
    const auto it = map_.find(id);
    if (it != map_.end()) {
      lru_.splice(lru_.begin(), lru_, it->second.pos);
      it->second.dirty = it->second.dirty || dirty;
      if (io) ++io->cache_hits;
      return it->second.node;
    }
  }
  std::shared_ptr<Node> node = load();
  if (io) ++io->disk_reads;
  const std::uint64_t bytes = sizer_(*node);
  std::lock_guard lock(mu_);
  const auto [it, fresh] = map_.try_emplace(id);
  if (fresh) {
    lru_.push_front(id);
    it->second = {std::move(node), bytes, dirty, lru_.begin()};
    bytes_ += bytes;
  } else {
    lru_.splice(lru_.begin(), lru_, it->second.pos);
    it->second.dirty = it->second.dirty || dirty;
  }
  return it->second.node;
}

std::shared_ptr<Node> NodeCache::get(NodeId id, const Loader& load, IoCounters* io) {
  return lookup(id, load, io, false);
}

std::shared_ptr<Node> NodeCache::get_for_write(NodeId id, const Loader& load, IoCounters* io) {
  return lookup(id, load, io, true);
}

void NodeCache::put_new(std::shared_ptr<Node> node) {
  const NodeId id = node->id;
  const std::uint64_t bytes = sizer_(*node);
  std::lock_guard lock(mu_);
  const auto it = map_.find(id);
  if (it != map_.end()) {
    bytes_ -= it->second.bytes;
    lru_.erase(it->second.pos);
    map_.erase(it);
  }
  lru_.push_front(id);
  map_[id] = {std::move(node), bytes, true, lru_.begin()};
  bytes_ += bytes;
}

// Dirty nodes may have grown since they were loaded.
void NodeCache::refresh_bytes_locked() {
  for (auto& [id, e] : map_) {
    if (!e.dirty || e.node.use_count() > 1) continue;
    const std::uint64_t b = sizer_(*e.node);
    bytes_ = bytes_ - e.bytes + b;
    e.bytes = b;
  }
}

EvictionReport NodeCache::maintain() {
  std::lock_guard lock(mu_);
  refresh_bytes_locked();
  EvictionReport rep;
  auto it = lru_.end();
  while (bytes_ > capacity_ && it != lru_.begin()) {
    --it;
    auto found = map_.find(*it);
    Entry& e = found->second;
    if (e.node.use_count() > 1) {
      ++rep.skipped_pinned;
      continue;
    }
    if (e.dirty) {
      flusher_(*e.node);
      e.dirty = false;
      ++rep.flushed;
    }
    bytes_ -= e.bytes;
    it = lru_.erase(it);
    map_.erase(found);
    ++rep.evicted;
    ++evictions_;
  }
  rep.bytes_used = bytes_;
  return rep;
}

std::size_t NodeCache::flush_dirty() {
  std::lock_guard lock(mu_);
  std::size_t n = 0;
  for (auto& [id, e] : map_) {
    if (!e.dirty) continue;
    flusher_(*e.node);
    e.dirty = false;
    ++n;
  }
  refresh_bytes_locked();
  return n;
}

std::uint64_t NodeCache::bytes_used() const {
  std::lock_guard lock(mu_);
  return bytes_;
}

std::uint64_t NodeCache::evictions() const {
  std::lock_guard lock(mu_);
  return evictions_;
}

bool NodeCache::contains(NodeId id) const {
  std::lock_guard lock(mu_);
  return map_.contains(id);
}

bool NodeCache::is_dirty(NodeId id) const {
  std::lock_guard lock(mu_);
  const auto it = map_.find(id);
  return it != map_.end() && it->second.dirty;
}

std::size_t NodeCache::size() const {
  std::lock_guard lock(mu_);
  return map_.size();
}

std::vector<NodeId> NodeCache::recency() const {
  std::lock_guard lock(mu_);
  return {lru_.begin(), lru_.end()};
}

}  // namespace bpann
