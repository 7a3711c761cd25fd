#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bpann/node_store.hpp"
#include "bpann/tree.hpp"

namespace bpann {

// Index file layout. All integers little-endian, floats raw IEEE-754.
//
//   page 0      header (kHeaderSize bytes, zero padded)
//   payload     node records, each starting on a page boundary; root first,
//               then every node's children back to back, parents before
//               children
//   trailer     directory (one entry per node, payload order), then the
//               vector locator (sorted by vector id)
//
// The header checksum (FNV-1a 64) covers the header with the checksum field
// zeroed, the directory and the locator.

inline constexpr char kMagic[4] = {'B', 'P', 'A', 'N'};
inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::size_t kDefaultPageSize = 4096;
inline constexpr std::size_t kHeaderSize = 98;
inline constexpr std::size_t kDirEntrySize = 27;
inline constexpr std::size_t kLocatorEntrySize = 20;
inline constexpr std::size_t kRecordHeaderSize = 32;

struct FileHeader {
  std::uint32_t version = kFormatVersion;
  std::uint32_t dim = 0;
  Metric metric = Metric::euclidean;
  std::uint64_t node_count = 0;
  NodeId root_id = kNoNode;
  std::uint64_t directory_offset = 0;
  std::uint64_t checksum = 0;
  std::uint32_t page_size = kDefaultPageSize;
  std::uint32_t kappa_leaf = 0;
  std::uint32_t kappa_inner = 0;
  std::uint64_t seed = 0;
  std::uint64_t vector_count = 0;
  bool has_edges = false;
  std::uint32_t d_edge = 0;
  std::uint32_t s_leaf = 0;
  std::uint64_t locator_offset = 0;
  std::uint64_t locator_count = 0;

  BuildParams params() const;
};

struct DirEntry {
  NodeId id = kNoNode;
  std::uint64_t offset = 0;
  std::uint64_t length = 0;
  NodeKind kind = NodeKind::leaf;
  std::uint16_t level = 0;
};

struct LocatorEntry {
  VectorId id = 0;
  Location loc;
};

struct PageFileInfo {
  FileHeader header;
  std::vector<DirEntry> directory;  // payload order
  std::uint64_t file_size = 0;
};

/// Writes `tree` to `path` (via a temporary file, fsync, rename). Skip edges
/// are written when the store has them and `with_edges` is set.
/// Throws IntegrityError if the tree fails verify_tree, StorageError on I/O
/// failure, UsageError if page_size is not a power of two >= 512.
PageFileInfo serialize(const NodeStore& tree, const std::string& path,
                       std::size_t page_size = kDefaultPageSize, bool with_edges = true);

/// Reads and checks header, directory and locator. Throws FormatError on a
/// bad magic or version, IntegrityError on truncation or checksum mismatch.
PageFileInfo read_page_file_info(const std::string& path,
                                 std::vector<LocatorEntry>* locator = nullptr);

/// Loads the whole file into memory. Edges, if present, become an attached
/// SkipEdgeGraph.
BPlusAnnTree load_tree(const std::string& path);

/// Fraction of inner nodes whose children occupy consecutive directory
/// slots (no foreign record between siblings). 1.0 for a tree without inner
/// nodes.
double sibling_consecutiveness(const PageFileInfo& info, const NodeStore& tree);

namespace detail {

std::uint64_t fnv1a(std::span<const std::byte> bytes, std::uint64_t h = 0xcbf29ce484222325ULL);

/// Encodes one node record. `edges`, when non-null, holds one list per leaf
/// slot (missing trailing lists are written empty).
std::vector<std::byte> encode_node(const Node& n, std::size_t dim,
                                   const std::vector<std::vector<VectorId>>* edges);

/// Decodes a record, checking it against its directory entry. Norms are
/// recomputed; skip edges land in Node::edges.
std::shared_ptr<Node> decode_node(std::span<const std::byte> bytes, std::size_t dim,
                                  const DirEntry& entry);

std::vector<std::byte> encode_header(const FileHeader& h);
FileHeader decode_header(std::span<const std::byte> bytes);

/// Directory followed by locator, as stored in the trailer.
std::vector<std::byte> encode_trailer(const std::vector<DirEntry>& dir,
                                      const std::vector<LocatorEntry>& loc);
/// Checksum of `h` (checksum field zeroed) followed by the trailer bytes.
std::uint64_t header_checksum(FileHeader h, std::span<const std::byte> trailer);
/// encode_node(n, dim, with_edges ? &n.edges : nullptr).size() without encoding.
std::uint64_t record_size(const Node& n, std::size_t dim, bool with_edges);

std::uint64_t round_up(std::uint64_t x, std::uint64_t page);

void write_all(int fd, const std::string& path, std::uint64_t offset,
               std::span<const std::byte> bytes);
void read_all(int fd, const std::string& path, std::uint64_t offset, std::span<std::byte> out);

}  // namespace detail

}  // namespace bpann
