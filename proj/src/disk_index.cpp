#include "bpann/disk_index.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <shared_mutex>

#include "bpann/error.hpp"

namespace bpann {

using detail::round_up;

std::unique_ptr<DiskIndex> DiskIndex::open(const std::string& path, OpenOptions opts) {
  std::vector<LocatorEntry> locator;
  const PageFileInfo info = read_page_file_info(path, &locator);

  std::unique_ptr<DiskIndex> ix(new DiskIndex());
  ix->path_ = path;
  ix->opts_ = opts;
  ix->header_ = info.header;
  ix->params_ = info.header.params();
  ix->root_ = info.header.root_id;
  ix->payload_end_ = info.header.directory_offset;
  ix->node_count_ = info.directory.size();
  ix->fd_ = ::open(path.c_str(), (opts.read_only ? O_RDONLY : O_RDWR) | O_CLOEXEC);
  if (ix->fd_ < 0) throw StorageError(path, 0, std::strerror(errno));

  for (const auto& e : info.directory) {
    if (!ix->dir_.emplace(e.id, e).second) {
      throw IntegrityError(path + ": node " + std::to_string(e.id) + " listed twice");
    }
    ix->next_id_ = std::max(ix->next_id_, e.id + 1);
  }
  if (!ix->dir_.contains(ix->root_)) throw IntegrityError(path + ": root missing from directory");
  ix->locator_.reserve(locator.size());
  for (const auto& l : locator) ix->locator_.emplace(l.id, l.loc);

  DiskIndex* self = ix.get();
  ix->cache_ = std::make_unique<NodeCache>(
      opts.cache_capacity_bytes, [self](const Node& n) { self->write_record(n); },
      [self](const Node& n) {
        return detail::record_size(n, self->dim(), self->has_edges() && n.is_leaf());
      });

  for (const auto& e : info.directory) {
    if (e.level >= opts.resident_min_level || e.id == ix->root_) {
      ix->resident_.emplace(e.id, ix->load(e.id));
    }
  }
  if (opts.background_maintenance) {
    ix->bg_ = std::thread([self] { self->maintenance_loop(); });
  }
  return ix;
}

DiskIndex::~DiskIndex() {
  if (bg_.joinable()) {
    {
      std::lock_guard lk(bg_mu_);
      bg_stop_ = true;
    }
    bg_cv_.notify_all();
    bg_.join();
  }
  if (fd_ >= 0) {
    try {
      if (!opts_.read_only) flush_locked();
    } catch (...) {
      // Best effort: a failed close-time flush leaves the last flushed state.
    }
    ::close(fd_);
  }
}

std::size_t DiskIndex::node_count() const { return node_count_; }

std::shared_ptr<Node> DiskIndex::load(NodeId id) const {
  DirEntry e;
  {
    std::lock_guard lock(file_mu_);
    const auto it = dir_.find(id);
    if (it == dir_.end()) throw IntegrityError("node " + std::to_string(id) + " has no disk record");
    e = it->second;
  }
  std::vector<std::byte> buf(e.length);
  detail::read_all(fd_, path_, e.offset, buf);
  return detail::decode_node(buf, dim(), e);
}

NodePtr DiskIndex::read(NodeId id, IoCounters* io) const {
  const auto it = resident_.find(id);
  if (it != resident_.end()) {
    ++cache_hits_;
    if (io) ++io->cache_hits;
    return it->second;
  }
  IoCounters local;
  auto node = cache_->get(id, [&] { return load(id); }, &local);
  disk_reads_ += local.disk_reads;
  cache_hits_ += local.cache_hits;
  if (io) {
    io->disk_reads += local.disk_reads;
    io->cache_hits += local.cache_hits;
  }
  return node;
}

std::optional<Location> DiskIndex::locate(VectorId id) const {
  const auto it = locator_.find(id);
  if (it == locator_.end()) return std::nullopt;
  return it->second;
}

std::span<const VectorId> DiskIndex::neighbors(const Node& leaf, std::uint32_t slot) const {
  if (slot >= leaf.edges.size()) return {};
  return leaf.edges[slot];
}

void DiskIndex::sync_lru() const {
  if (!opts_.background_maintenance) cache_->maintain();
}

EvictionReport DiskIndex::lru_maintain() const { return cache_->maintain(); }

std::shared_ptr<Node> DiskIndex::write(NodeId id) {
  if (opts_.read_only) throw UsageError(path_ + " is open read-only");
  bump_version();
  const auto it = resident_.find(id);
  if (it != resident_.end()) {
    resident_dirty_.insert(id);
    return it->second;
  }
  return cache_->get_for_write(id, [&] { return load(id); }, nullptr);
}

NodeId DiskIndex::allocate(std::shared_ptr<Node> node) {
  if (opts_.read_only) throw UsageError(path_ + " is open read-only");
  bump_version();
  const NodeId id = next_id_++;
  node->id = id;
  ++node_count_;
  trailer_stale_ = true;
  if (node->level >= opts_.resident_min_level) {
    resident_.emplace(id, std::move(node));
    resident_dirty_.insert(id);
  } else {
    cache_->put_new(std::move(node));
  }
  return id;
}

void DiskIndex::set_root(NodeId id) {
  if (!resident_.contains(id)) {
    resident_.emplace(id, write(id));
    resident_dirty_.insert(id);
  }
  bump_version();
  root_ = id;
  trailer_stale_ = true;
}

void DiskIndex::set_location(VectorId id, Location loc) {
  locator_[id] = loc;
  trailer_stale_ = true;
}

// In place when the record still fits its pages, otherwise appended.
void DiskIndex::write_record(const Node& n) const {
  const bool edges = has_edges() && n.is_leaf();
  auto rec = detail::encode_node(n, dim(), edges ? &n.edges : nullptr);
  const std::uint64_t len = rec.size();
  const std::uint64_t page = header_.page_size;
  rec.resize(round_up(len, page), std::byte{0});
  std::lock_guard lock(file_mu_);
  const auto it = dir_.find(n.id);
  std::uint64_t offset;
  if (it != dir_.end() && round_up(it->second.length, page) >= rec.size()) {
    offset = it->second.offset;
  } else {
    offset = payload_end_;
    payload_end_ += rec.size();
  }
  detail::write_all(fd_, path_, offset, rec);
  dir_[n.id] = {n.id, offset, len, n.kind, n.level};
  trailer_stale_ = true;
}

void DiskIndex::flush() {
  std::unique_lock lock(mutex());
  flush_locked();
}

void DiskIndex::flush_locked() {
  if (opts_.read_only) return;
  cache_->flush_dirty();
  for (const NodeId id : resident_dirty_) write_record(*resident_.at(id));
  resident_dirty_.clear();
  std::lock_guard lock(file_mu_);
  if (!trailer_stale_) return;

  std::vector<DirEntry> dir;
  dir.reserve(dir_.size());
  for (const auto& [id, e] : dir_) dir.push_back(e);
  std::sort(dir.begin(), dir.end(),
            [](const DirEntry& a, const DirEntry& b) { return a.offset < b.offset; });
  std::vector<LocatorEntry> loc;
  loc.reserve(locator_.size());
  for (const auto& [id, l] : locator_) loc.push_back({id, l});
  std::sort(loc.begin(), loc.end(),
            [](const LocatorEntry& a, const LocatorEntry& b) { return a.id < b.id; });

  FileHeader h = header_;
  h.node_count = dir.size();
  h.root_id = root_;
  h.directory_offset = payload_end_;
  h.locator_offset = payload_end_ + dir.size() * kDirEntrySize;
  h.locator_count = loc.size();
  h.vector_count = loc.size();
  const auto trailer = detail::encode_trailer(dir, loc);
  h.checksum = detail::header_checksum(h, trailer);
  detail::write_all(fd_, path_, payload_end_, trailer);
  detail::write_all(fd_, path_, 0, detail::encode_header(h));
  const auto end = static_cast<off_t>(payload_end_ + trailer.size());
  if (::ftruncate(fd_, end) != 0) throw StorageError(path_, payload_end_, std::strerror(errno));
  if (::fsync(fd_) != 0) throw StorageError(path_, 0, std::string("fsync: ") + std::strerror(errno));
  header_ = h;
  trailer_stale_ = false;
}

IoStats DiskIndex::io_stats() const {
  return {disk_reads_.load(), cache_hits_.load(), cache_->bytes_used(), cache_->evictions()};
}

bool DiskIndex::resident(NodeId id) const {
  return resident_.contains(id) || cache_->contains(id);
}

std::vector<DirEntry> DiskIndex::directory() const {
  std::lock_guard lock(file_mu_);
  std::vector<DirEntry> dir;
  dir.reserve(dir_.size());
  for (const auto& [id, e] : dir_) dir.push_back(e);
  std::sort(dir.begin(), dir.end(),
            [](const DirEntry& a, const DirEntry& b) { return a.offset < b.offset; });
  return dir;
}

void DiskIndex::maintenance_loop() {
  std::unique_lock lk(bg_mu_);
  // system_clock keeps the wait on pthread_cond_timedwait, which sanitizers see.
  const auto next = [this] { return std::chrono::system_clock::now() + opts_.maintenance_interval; };
  while (!bg_cv_.wait_until(lk, next(), [this] { return bg_stop_; })) {
    lk.unlock();
    {
      std::shared_lock lock(mutex());
      try {
        cache_->maintain();
      } catch (const StorageError&) {
        // The node stays dirty and resident; the next cycle retries.
      }
    }
    lk.lock();
  }
}

}  // namespace bpann
