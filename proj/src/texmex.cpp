#include "bpann/texmex.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <memory>

#include "bpann/error.hpp"
#include "bpann/mapped_file.hpp"

namespace bpann {

namespace {

struct Layout {
  std::size_t dim = 0;
  std::size_t count = 0;
};

// Validates the record structure of `bytes` for components of `width` bytes.
Layout scan(std::span<const std::byte> bytes, std::size_t width, const std::string& path) {
  Layout l;
  if (bytes.empty()) return l;
  if (bytes.size() < 4) throw FormatError(path + ": truncated record header");
  std::int32_t d = 0;
  std::memcpy(&d, bytes.data(), 4);
  if (d <= 0) throw FormatError(path + ": record dimension " + std::to_string(d) + " is not positive");
  l.dim = static_cast<std::size_t>(d);
  const std::size_t rec = 4 + l.dim * width;
  if (bytes.size() % rec != 0) {
    throw FormatError(path + ": size " + std::to_string(bytes.size()) +
                      " is not a multiple of the record size " + std::to_string(rec));
  }
  l.count = bytes.size() / rec;
  for (std::size_t i = 1; i < l.count; ++i) {
    std::int32_t di = 0;
    std::memcpy(&di, bytes.data() + i * rec, 4);
    if (di != d) {
      throw FormatError(path + ": record " + std::to_string(i) + " has dimension " +
                        std::to_string(di) + ", expected " + std::to_string(d));
    }
  }
  return l;
}

class Out {
 public:
  explicit Out(const std::string& path) : path_(path), f_(path, std::ios::binary | std::ios::trunc) {
    if (!f_) throw StorageError(path, 0, "cannot open for writing");
  }
  void put(const void* p, std::size_t n) {
    f_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    if (!f_) throw StorageError(path_, written_, "write failed");
    written_ += n;
  }
  void close() {
    f_.close();
    if (!f_) throw StorageError(path_, written_, "close failed");
  }

 private:
  std::string path_;
  std::ofstream f_;
  std::uint64_t written_ = 0;
};

}  // namespace

VecFormat format_of(const std::string& path) {
  auto ends = [&](const char* ext) {
    const std::size_t n = std::strlen(ext);
    return path.size() >= n && path.compare(path.size() - n, n, ext) == 0;
  };
  if (ends(".fvecs")) return VecFormat::fvecs;
  if (ends(".bvecs")) return VecFormat::bvecs;
  if (ends(".ivecs")) return VecFormat::ivecs;
  throw UsageError(path + ": expected a .fvecs, .bvecs or .ivecs file");
}

VectorSet read_vectors(const std::string& path) {
  const VecFormat fmt = format_of(path);
  if (fmt == VecFormat::ivecs) throw UsageError(path + ": ivecs holds ids, not vectors");
  auto file = std::make_shared<const MappedFile>(path);
  const auto bytes = file->bytes();
  if (fmt == VecFormat::fvecs) {
    const Layout l = scan(bytes, 4, path);
    if (l.count == 0) return VectorSet(0);
    const auto* base = reinterpret_cast<const float*>(bytes.data() + 4);
    return VectorSet::mapped(file, base, l.count, l.dim, l.dim + 1);
  }
  const Layout l = scan(bytes, 1, path);
  if (l.count == 0) return VectorSet(0);
  std::vector<float> flat(l.count * l.dim);
  for (std::size_t i = 0; i < l.count; ++i) {
    const auto* src = reinterpret_cast<const std::uint8_t*>(bytes.data() + i * (4 + l.dim) + 4);
    for (std::size_t d = 0; d < l.dim; ++d) flat[i * l.dim + d] = static_cast<float>(src[d]);
  }
  return VectorSet::from_rows(l.dim, std::move(flat));
}

IntRows read_ivecs(const std::string& path) {
  const MappedFile file(path);
  const Layout l = scan(file.bytes(), 4, path);
  IntRows out;
  out.dim = l.dim;
  out.count = l.count;
  out.values.resize(l.count * l.dim);
  for (std::size_t i = 0; i < l.count; ++i) {
    std::memcpy(out.values.data() + i * l.dim, file.bytes().data() + i * (4 + 4 * l.dim) + 4,
                4 * l.dim);
  }
  return out;
}

void write_fvecs(const std::string& path, const MatrixView& rows) {
  Out out(path);
  const auto d = static_cast<std::int32_t>(rows.dim);
  for (std::size_t i = 0; i < rows.rows; ++i) {
    out.put(&d, 4);
    out.put(rows.row(i).data(), 4 * rows.dim);
  }
  out.close();
}

void write_bvecs(const std::string& path, const MatrixView& rows) {
  std::vector<std::uint8_t> buf(rows.dim);
  for (std::size_t i = 0; i < rows.rows; ++i) {
    for (const float x : rows.row(i)) {
      if (!(x >= 0.0f && x <= 255.0f) || std::floor(x) != x) {
        throw DomainError("bvecs component " + std::to_string(x) + " is not a byte value");
      }
    }
  }
  Out out(path);
  const auto d = static_cast<std::int32_t>(rows.dim);
  for (std::size_t i = 0; i < rows.rows; ++i) {
    const auto r = rows.row(i);
    for (std::size_t k = 0; k < rows.dim; ++k) buf[k] = static_cast<std::uint8_t>(r[k]);
    out.put(&d, 4);
    out.put(buf.data(), rows.dim);
  }
  out.close();
}

void write_ivecs(const std::string& path, const IntRows& rows) {
  Out out(path);
  const auto d = static_cast<std::int32_t>(rows.dim);
  for (std::size_t i = 0; i < rows.count; ++i) {
    out.put(&d, 4);
    out.put(rows.row(i).data(), 4 * rows.dim);
  }
  out.close();
}

}  // namespace bpann
