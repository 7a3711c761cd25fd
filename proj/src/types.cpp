#include "bpann/types.hpp"

#include <string>

#include "bpann/error.hpp"

namespace bpann {

std::string_view to_string(Metric metric) noexcept {
  return metric == Metric::cosine ? "cosine" : "euclidean";
}

Metric parse_metric(std::string_view name) {
  if (name == "euclidean" || name == "l2") return Metric::euclidean;
  if (name == "cosine" || name == "angular") return Metric::cosine;
  throw UsageError("unknown metric '" + std::string(name) + "'");
}

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::usage: return "usage";
    case ErrorKind::domain: return "domain";
    case ErrorKind::format: return "format";
    case ErrorKind::integrity: return "integrity";
    case ErrorKind::storage: return "storage";
  }
  return "unknown";
}

}  // namespace bpann
