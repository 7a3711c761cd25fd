#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace bpann {

enum class ErrorKind {
  usage,      // caller violated a precondition (bad k, dimension mismatch, ...)
  domain,     // mathematically undefined input (zero vector under cosine)
  format,     // malformed file contents
  integrity,  // internal structure inconsistent with itself
  storage,    // I/O failure
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::usage, what) {}
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ErrorKind::domain, what) {}
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error(ErrorKind::format, what) {}
};

class IntegrityError : public Error {
 public:
  explicit IntegrityError(const std::string& what) : Error(ErrorKind::integrity, what) {}
};

class StorageError : public Error {
 public:
  StorageError(const std::string& path, std::uint64_t offset, const std::string& what)
      : Error(ErrorKind::storage, path + " @" + std::to_string(offset) + ": " + what),
        path_(path),
        offset_(offset) {}

  const std::string& path() const noexcept { return path_; }
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::string path_;
  std::uint64_t offset_;
};

}  // namespace bpann
