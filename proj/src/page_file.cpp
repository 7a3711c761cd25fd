#include "bpann/page_file.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <bit>
#include <cerrno>
#include <cstring>
#include <filesystem>
#include <unordered_map>

#include "bpann/error.hpp"

namespace bpann {

static_assert(std::endian::native == std::endian::little,
              "page files are little-endian; big-endian hosts need byte swapping");

BuildParams FileHeader::params() const {
  BuildParams p;
  p.kappa_leaf = kappa_leaf;
  p.kappa_inner = kappa_inner;
  p.metric = metric;
  p.seed = seed;
  return p;
}

namespace detail {

std::uint64_t fnv1a(std::span<const std::byte> bytes, std::uint64_t h) {
  for (const std::byte b : bytes) {
    h ^= static_cast<std::uint64_t>(b);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t round_up(std::uint64_t x, std::uint64_t page) { return (x + page - 1) / page * page; }

namespace {

class Writer {
 public:
  explicit Writer(std::vector<std::byte>& out) : out_(out) {}
  template <typename T>
  void put(T v) {
    const auto* p = reinterpret_cast<const std::byte*>(&v);
    out_.insert(out_.end(), p, p + sizeof(T));
  }
  template <typename T>
  void put_all(const std::vector<T>& v) {
    const auto* p = reinterpret_cast<const std::byte*>(v.data());
    out_.insert(out_.end(), p, p + v.size() * sizeof(T));
  }

 private:
  std::vector<std::byte>& out_;
};

class Reader {
 public:
  Reader(std::span<const std::byte> in, const char* what) : in_(in), what_(what) {}
  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  template <typename T>
  void get_all(std::vector<T>& v, std::size_t n) {
    need(n * sizeof(T));
    v.resize(n);
    std::memcpy(v.data(), in_.data() + pos_, n * sizeof(T));
    pos_ += n * sizeof(T);
  }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw IntegrityError(std::string(what_) + " is truncated");
  }
  std::span<const std::byte> in_;
  const char* what_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::byte> encode_header(const FileHeader& h) {
  std::vector<std::byte> out;
  out.reserve(kHeaderSize);
  Writer w(out);
  for (const char c : kMagic) w.put(c);
  w.put(h.version);
  w.put(h.dim);
  w.put(static_cast<std::uint8_t>(h.metric));
  w.put(h.node_count);
  w.put(h.root_id);
  w.put(h.directory_offset);
  w.put(h.checksum);
  w.put(h.page_size);
  w.put(h.kappa_leaf);
  w.put(h.kappa_inner);
  w.put(h.seed);
  w.put(h.vector_count);
  w.put(static_cast<std::uint8_t>(h.has_edges ? 1 : 0));
  w.put(h.d_edge);
  w.put(h.s_leaf);
  w.put(h.locator_offset);
  w.put(h.locator_count);
  return out;
}

FileHeader decode_header(std::span<const std::byte> bytes) {
  if (bytes.size() < kHeaderSize) throw IntegrityError("index file shorter than its header");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("not a B+ANN index (bad magic)");
  Reader r(bytes.subspan(4), "header");
  FileHeader h;
  h.version = r.get<std::uint32_t>();
  if (h.version != kFormatVersion) {
    throw FormatError("unsupported index format version " + std::to_string(h.version));
  }
  h.dim = r.get<std::uint32_t>();
  const auto metric = r.get<std::uint8_t>();
  if (metric > 1) throw FormatError("unknown metric code " + std::to_string(metric));
  h.metric = static_cast<Metric>(metric);
  h.node_count = r.get<std::uint64_t>();
  h.root_id = r.get<std::uint64_t>();
  h.directory_offset = r.get<std::uint64_t>();
  h.checksum = r.get<std::uint64_t>();
  h.page_size = r.get<std::uint32_t>();
  h.kappa_leaf = r.get<std::uint32_t>();
  h.kappa_inner = r.get<std::uint32_t>();
  h.seed = r.get<std::uint64_t>();
  h.vector_count = r.get<std::uint64_t>();
  h.has_edges = (r.get<std::uint8_t>() & 1) != 0;
  h.d_edge = r.get<std::uint32_t>();
  h.s_leaf = r.get<std::uint32_t>();
  h.locator_offset = r.get<std::uint64_t>();
  h.locator_count = r.get<std::uint64_t>();
  return h;
}

std::vector<std::byte> encode_node(const Node& n, std::size_t dim,
                                   const std::vector<std::vector<VectorId>>* edges) {
  std::vector<std::byte> out;
  Writer w(out);
  const std::size_t count = n.entry_count();
  w.put(n.id);
  w.put(static_cast<std::uint8_t>(n.kind));
  w.put(n.level);
  w.put(static_cast<std::uint32_t>(count));
  w.put(n.parent);
  w.put(n.weight);
  const bool with_edges = n.is_leaf() && edges != nullptr;
  w.put(static_cast<std::uint8_t>(with_edges ? 1 : 0));
  if (n.centroid.size() != dim) throw IntegrityError("node centroid has wrong width");
  w.put_all(n.centroid);
  if (n.is_leaf()) {
    if (n.vectors.size() != count * dim) throw IntegrityError("leaf vector block has wrong size");
    w.put_all(n.ids);
    w.put_all(n.vectors);
    if (with_edges) {
      for (std::size_t s = 0; s < count; ++s) {
        static const std::vector<VectorId> none;
        const auto& e = s < edges->size() ? (*edges)[s] : none;
        w.put(static_cast<std::uint32_t>(e.size()));
        w.put_all(e);
      }
    }
  } else {
    if (n.child_centroids.size() != count * dim || n.child_weights.size() != count) {
      throw IntegrityError("inner node child arrays have wrong size");
    }
    w.put_all(n.children);
    w.put_all(n.child_weights);
    w.put_all(n.child_centroids);
  }
  return out;
}

std::shared_ptr<Node> decode_node(std::span<const std::byte> bytes, std::size_t dim,
                                  const DirEntry& entry) {
  Reader r(bytes, "node record");
  auto n = std::make_shared<Node>();
  n->id = r.get<std::uint64_t>();
  const auto kind = r.get<std::uint8_t>();
  n->level = r.get<std::uint16_t>();
  const auto count = r.get<std::uint32_t>();
  n->parent = r.get<std::uint64_t>();
  n->weight = r.get<std::uint64_t>();
  const bool with_edges = r.get<std::uint8_t>() != 0;
  if (kind > 1) throw IntegrityError("node record has unknown kind");
  n->kind = static_cast<NodeKind>(kind);
  if (n->id != entry.id || n->kind != entry.kind || n->level != entry.level) {
    throw IntegrityError("node record " + std::to_string(n->id) +
                         " disagrees with its directory entry " + std::to_string(entry.id));
  }
  r.get_all(n->centroid, dim);
  if (n->is_leaf()) {
    r.get_all(n->ids, count);
    r.get_all(n->vectors, static_cast<std::size_t>(count) * dim);
    if (with_edges) {
      n->edges.resize(count);
      for (auto& e : n->edges) r.get_all(e, r.get<std::uint32_t>());
    }
  } else {
    r.get_all(n->children, count);
    r.get_all(n->child_weights, count);
    r.get_all(n->child_centroids, static_cast<std::size_t>(count) * dim);
  }
  if (r.pos() != entry.length) {
    throw IntegrityError("node record " + std::to_string(n->id) + " length mismatch");
  }
  n->refresh_norms(dim);
  return n;
}

void write_all(int fd, const std::string& path, std::uint64_t offset,
               std::span<const std::byte> bytes) {
  std::size_t done = 0;
  while (done < bytes.size()) {
    const ssize_t w = ::pwrite(fd, bytes.data() + done, bytes.size() - done,
                               static_cast<off_t>(offset + done));
    if (w < 0) {
      if (errno == EINTR) continue;
      throw StorageError(path, offset + done, std::strerror(errno));
    }
    done += static_cast<std::size_t>(w);
  }
}

void read_all(int fd, const std::string& path, std::uint64_t offset, std::span<std::byte> out) {
  std::size_t done = 0;
  while (done < out.size()) {
    const ssize_t r =
        ::pread(fd, out.data() + done, out.size() - done, static_cast<off_t>(offset + done));
    if (r < 0) {
      if (errno == EINTR) continue;
      throw StorageError(path, offset + done, std::strerror(errno));
    }
    if (r == 0) throw IntegrityError(path + ": unexpected end of file at " + std::to_string(offset + done));
    done += static_cast<std::size_t>(r);
  }
}

std::vector<std::byte> encode_trailer(const std::vector<DirEntry>& dir,
                                      const std::vector<LocatorEntry>& loc) {
  std::vector<std::byte> out;
  out.reserve(dir.size() * kDirEntrySize + loc.size() * kLocatorEntrySize);
  auto put = [&](auto v) {
    const auto* p = reinterpret_cast<const std::byte*>(&v);
    out.insert(out.end(), p, p + sizeof(v));
  };
  for (const auto& e : dir) {
    put(e.id);
    put(e.offset);
    put(e.length);
    put(static_cast<std::uint8_t>(e.kind));
    put(e.level);
  }
  for (const auto& l : loc) {
    put(l.id);
    put(l.loc.leaf);
    put(l.loc.slot);
  }
  return out;
}

std::uint64_t header_checksum(FileHeader h, std::span<const std::byte> trailer) {
  h.checksum = 0;
  const auto hb = detail::encode_header(h);
  return detail::fnv1a(trailer, detail::fnv1a(hb));
}

std::uint64_t record_size(const Node& n, std::size_t dim, bool with_edges) {
  std::uint64_t b = kRecordHeaderSize + dim * sizeof(float);
  const std::uint64_t c = n.entry_count();
  if (n.is_leaf()) {
    b += c * (sizeof(VectorId) + dim * sizeof(float));
    if (with_edges) {
      b += c * sizeof(std::uint32_t);
      for (std::size_t s = 0; s < std::min<std::size_t>(c, n.edges.size()); ++s) {
        b += n.edges[s].size() * sizeof(VectorId);
      }
    }
  } else {
    b += c * (sizeof(NodeId) + sizeof(std::uint64_t) + dim * sizeof(float));
  }
  return b;
}

}  // namespace detail

namespace {

using detail::round_up;

class Fd {
 public:
  Fd(const std::string& path, int flags, mode_t mode = 0644) : path_(path) {
    fd_ = ::open(path.c_str(), flags | O_CLOEXEC, mode);
    if (fd_ < 0) throw StorageError(path, 0, std::strerror(errno));
  }
  ~Fd() {
    if (fd_ >= 0) ::close(fd_);
  }
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  int get() const { return fd_; }
  void sync() const {
    if (::fsync(fd_) != 0) throw StorageError(path_, 0, std::string("fsync: ") + std::strerror(errno));
  }
  void close() {
    if (fd_ >= 0 && ::close(fd_) != 0) {
      fd_ = -1;
      throw StorageError(path_, 0, std::string("close: ") + std::strerror(errno));
    }
    fd_ = -1;
  }

 private:
  std::string path_;
  int fd_ = -1;
};

// Root first, then each node's children back to back, recursively.
std::vector<NodeId> layout_order(const NodeStore& tree) {
  std::vector<NodeId> order{tree.root_id()};
  std::vector<NodeId> stack{tree.root_id()};
  while (!stack.empty()) {
    const NodePtr n = tree.read(stack.back());
    stack.pop_back();
    if (n->is_leaf()) continue;
    order.insert(order.end(), n->children.begin(), n->children.end());
    for (auto it = n->children.rbegin(); it != n->children.rend(); ++it) {
      if (!tree.read(*it)->is_leaf()) stack.push_back(*it);
    }
  }
  return order;
}

}  // namespace

PageFileInfo serialize(const NodeStore& tree, const std::string& path, std::size_t page_size,
                       bool with_edges) {
  if (page_size < 512 || !std::has_single_bit(page_size)) {
    throw UsageError("page_size must be a power of two >= 512, got " + std::to_string(page_size));
  }
  const auto rep = verify_tree(tree);
  if (!rep.ok) throw IntegrityError("refusing to serialize an invalid tree: " + rep.violation);
  const std::size_t dim = tree.dim();
  const bool edges = with_edges && tree.has_edges();

  PageFileInfo info;
  FileHeader& h = info.header;
  h.dim = static_cast<std::uint32_t>(dim);
  h.metric = tree.metric();
  h.root_id = tree.root_id();
  h.page_size = static_cast<std::uint32_t>(page_size);
  h.kappa_leaf = static_cast<std::uint32_t>(tree.params().kappa_leaf);
  h.kappa_inner = static_cast<std::uint32_t>(tree.params().kappa_inner);
  h.seed = tree.params().seed;
  h.has_edges = edges;

  const std::string tmp = path + ".tmp";
  {
    Fd fd(tmp, O_WRONLY | O_CREAT | O_TRUNC);
    std::vector<LocatorEntry> locator;
    std::uint64_t offset = page_size;
    std::size_t max_degree = 0;
    for (const NodeId id : layout_order(tree)) {
      const NodePtr n = tree.read(id);
      std::vector<std::vector<VectorId>> lists;
      if (edges && n->is_leaf()) {
        lists.resize(n->ids.size());
        for (std::size_t s = 0; s < n->ids.size(); ++s) {
          const auto nb = tree.neighbors(*n, static_cast<std::uint32_t>(s));
          lists[s].assign(nb.begin(), nb.end());
          max_degree = std::max(max_degree, lists[s].size());
        }
      }
      auto rec = detail::encode_node(*n, dim, edges && n->is_leaf() ? &lists : nullptr);
      const std::uint64_t len = rec.size();
      rec.resize(round_up(len, page_size), std::byte{0});
      detail::write_all(fd.get(), tmp, offset, rec);
      info.directory.push_back({id, offset, len, n->kind, n->level});
      if (n->is_leaf()) {
        for (std::size_t s = 0; s < n->ids.size(); ++s) {
          locator.push_back({n->ids[s], {id, static_cast<std::uint32_t>(s)}});
        }
        h.vector_count += n->ids.size();
      }
      offset += rec.size();
    }
    std::sort(locator.begin(), locator.end(),
              [](const LocatorEntry& a, const LocatorEntry& b) { return a.id < b.id; });
    h.node_count = info.directory.size();
    h.directory_offset = offset;
    h.locator_offset = offset + info.directory.size() * kDirEntrySize;
    h.locator_count = locator.size();
    if (edges) {
      const auto [d_edge, s_leaf] = tree.edge_shape();
      h.d_edge = static_cast<std::uint32_t>(d_edge > 0 ? d_edge : max_degree);
      h.s_leaf = static_cast<std::uint32_t>(s_leaf);
    }
    const auto trailer = detail::encode_trailer(info.directory, locator);
    h.checksum = detail::header_checksum(h, trailer);
    detail::write_all(fd.get(), tmp, offset, trailer);
    auto hb = detail::encode_header(h);
    hb.resize(page_size, std::byte{0});
    detail::write_all(fd.get(), tmp, 0, hb);
    info.file_size = offset + trailer.size();
    fd.sync();
    fd.close();
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw StorageError(path, 0, "rename: " + ec.message());
  const auto dir = std::filesystem::absolute(path).parent_path();
  const int dfd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
  if (dfd >= 0) {
    ::fsync(dfd);
    ::close(dfd);
  }
  return info;
}

PageFileInfo read_page_file_info(const std::string& path, std::vector<LocatorEntry>* locator) {
  Fd fd(path, O_RDONLY);
  struct stat st {};
  if (::fstat(fd.get(), &st) != 0) throw StorageError(path, 0, std::strerror(errno));
  PageFileInfo info;
  info.file_size = static_cast<std::uint64_t>(st.st_size);
  if (info.file_size < kHeaderSize) {
    if (info.file_size >= 4) {
      char magic[4];
      detail::read_all(fd.get(), path, 0, std::as_writable_bytes(std::span(magic)));
      if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("not a B+ANN index (bad magic)");
    }
    throw IntegrityError(path + ": file shorter than its header");
  }
  std::vector<std::byte> hb(kHeaderSize);
  detail::read_all(fd.get(), path, 0, hb);
  info.header = detail::decode_header(hb);
  const FileHeader& h = info.header;

  const std::uint64_t trailer_len =
      h.node_count * kDirEntrySize + h.locator_count * kLocatorEntrySize;
  if (h.locator_offset != h.directory_offset + h.node_count * kDirEntrySize ||
      h.directory_offset + trailer_len > info.file_size || h.directory_offset < kHeaderSize) {
    throw IntegrityError(path + ": truncated or inconsistent trailer");
  }
  std::vector<std::byte> trailer(trailer_len);
  detail::read_all(fd.get(), path, h.directory_offset, trailer);
  if (detail::header_checksum(h, trailer) != h.checksum) {
    throw IntegrityError(path + ": header checksum mismatch");
  }

  auto get = [&](std::size_t& pos, auto& v) {
    std::memcpy(&v, trailer.data() + pos, sizeof(v));
    pos += sizeof(v);
  };
  std::size_t pos = 0;
  info.directory.resize(h.node_count);
  for (auto& e : info.directory) {
    std::uint8_t kind = 0;
    get(pos, e.id);
    get(pos, e.offset);
    get(pos, e.length);
    get(pos, kind);
    get(pos, e.level);
    e.kind = static_cast<NodeKind>(kind);
    if (e.offset % h.page_size != 0 || e.offset + e.length > h.directory_offset) {
      throw IntegrityError(path + ": directory entry for node " + std::to_string(e.id) +
                           " out of range");
    }
  }
  if (locator) {
    locator->resize(h.locator_count);
    for (auto& l : *locator) {
      get(pos, l.id);
      get(pos, l.loc.leaf);
      get(pos, l.loc.slot);
    }
  }
  return info;
}

BPlusAnnTree load_tree(const std::string& path) {
  const PageFileInfo info = read_page_file_info(path);
  const FileHeader& h = info.header;
  Fd fd(path, O_RDONLY);
  NodeId max_id = 0;
  for (const auto& e : info.directory) max_id = std::max(max_id, e.id);
  std::vector<std::shared_ptr<Node>> nodes(info.directory.empty() ? 0 : max_id + 1);
  std::shared_ptr<SkipEdgeGraph> graph;
  if (h.has_edges) graph = std::make_shared<SkipEdgeGraph>(h.d_edge, h.s_leaf);
  std::vector<std::byte> buf;
  for (const auto& e : info.directory) {
    buf.resize(e.length);
    detail::read_all(fd.get(), path, e.offset, buf);
    auto n = detail::decode_node(buf, h.dim, e);
    if (graph && n->is_leaf()) {
      for (std::size_t s = 0; s < n->edges.size(); ++s) graph->set(n->ids[s], std::move(n->edges[s]));
      n->edges.clear();
    }
    if (nodes[e.id]) throw IntegrityError(path + ": node " + std::to_string(e.id) + " stored twice");
    nodes[e.id] = std::move(n);
  }
  auto tree = BPlusAnnTree::from_nodes(h.dim, h.params(), std::move(nodes), h.root_id);
  if (graph) tree.attach_edges(std::move(graph));
  return tree;
}

double sibling_consecutiveness(const PageFileInfo& info, const NodeStore& tree) {
  std::unordered_map<NodeId, std::size_t> pos;
  for (std::size_t i = 0; i < info.directory.size(); ++i) pos.emplace(info.directory[i].id, i);
  std::size_t parents = 0, good = 0;
  for (const auto& e : info.directory) {
    if (e.kind != NodeKind::inner) continue;
    const NodePtr n = tree.read(e.id);
    ++parents;
    std::vector<std::size_t> p;
    for (const NodeId c : n->children) {
      const auto it = pos.find(c);
      if (it != pos.end()) p.push_back(it->second);
    }
    if (p.size() != n->children.size()) continue;
    const auto [lo, hi] = std::minmax_element(p.begin(), p.end());
    if (*hi - *lo + 1 == p.size()) ++good;
  }
  return parents == 0 ? 1.0 : static_cast<double>(good) / static_cast<double>(parents);
}

}  // namespace bpann
