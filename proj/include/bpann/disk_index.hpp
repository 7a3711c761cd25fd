#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <limits>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "bpann/node_cache.hpp"
#include "bpann/node_store.hpp"
#include "bpann/page_file.hpp"

namespace bpann {

struct OpenOptions {
  /// Byte cap for cached nodes (leaves, plus inner nodes below resident_min_level).
  std::uint64_t cache_capacity_bytes = std::numeric_limits<std::uint64_t>::max();
  /// Nodes at this level or above stay in memory for the life of the handle.
  /// The root is always resident.
  std::uint16_t resident_min_level = 1;
  bool read_only = false;
  /// Run lru_maintain on a background thread instead of between search levels.
  bool background_maintenance = false;
  std::chrono::milliseconds maintenance_interval{5};
};

struct IoStats {
  std::uint64_t disk_reads = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t bytes_used = 0;
  std::uint64_t evictions = 0;
};

/// A page file opened for search and insert with leaves faulted in on demand.
///
/// Dirty nodes are written back when evicted and on flush(). Records that
/// outgrow their pages move to the end of the payload; the trailer and
/// header are rewritten only by flush(), so the file is consistent on disk
/// after flush() returns and after the handle closes cleanly.
class DiskIndex final : public NodeStore {
 public:
  static std::unique_ptr<DiskIndex> open(const std::string& path, OpenOptions opts = {});
  ~DiskIndex() override;

  DiskIndex(const DiskIndex&) = delete;
  DiskIndex& operator=(const DiskIndex&) = delete;

  std::size_t dim() const override { return header_.dim; }
  const BuildParams& params() const override { return params_; }
  NodeId root_id() const override { return root_; }
  std::size_t node_count() const override;

  NodePtr read(NodeId id, IoCounters* io = nullptr) const override;
  std::optional<Location> locate(VectorId id) const override;

  bool has_edges() const override { return header_.has_edges; }
  std::pair<std::size_t, std::size_t> edge_shape() const override {
    return {header_.d_edge, header_.s_leaf};
  }
  std::span<const VectorId> neighbors(const Node& leaf, std::uint32_t slot) const override;
  void sync_lru() const override;

  std::shared_ptr<Node> write(NodeId id) override;
  NodeId allocate(std::shared_ptr<Node> node) override;
  void set_root(NodeId id) override;
  void set_location(VectorId id, Location loc) override;

  /// Evicts LRU unpinned cached nodes until the cap holds.
  EvictionReport lru_maintain() const;
  IoStats io_stats() const;
  /// Writes dirty nodes, then the trailer and header, then fsyncs.
  /// Takes the store lock exclusively.
  void flush();

  const std::string& path() const { return path_; }
  const FileHeader& header() const { return header_; }
  const NodeCache& cache() const { return *cache_; }
  bool resident(NodeId id) const;
  /// Payload-order directory as it will be written by the next flush.
  std::vector<DirEntry> directory() const;

 private:
  DiskIndex() = default;

  std::shared_ptr<Node> load(NodeId id) const;
  void write_record(const Node& n) const;
  void flush_locked();
  void maintenance_loop();

  std::string path_;
  OpenOptions opts_;
  FileHeader header_;
  BuildParams params_;
  int fd_ = -1;

  mutable std::mutex file_mu_;  // guards dir_, payload_end_ and the fd offset space
  mutable std::unordered_map<NodeId, DirEntry> dir_;
  mutable std::uint64_t payload_end_ = 0;
  mutable bool trailer_stale_ = false;

  std::unordered_map<VectorId, Location> locator_;
  std::unordered_map<NodeId, std::shared_ptr<Node>> resident_;
  std::unordered_set<NodeId> resident_dirty_;
  std::unique_ptr<NodeCache> cache_;
  NodeId root_ = kNoNode;
  NodeId next_id_ = 0;
  std::size_t node_count_ = 0;

  mutable std::atomic<std::uint64_t> disk_reads_{0};
  mutable std::atomic<std::uint64_t> cache_hits_{0};

  std::mutex bg_mu_;
  std::condition_variable bg_cv_;
  bool bg_stop_ = false;
  std::thread bg_;
};

}  // namespace bpann
