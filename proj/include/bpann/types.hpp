#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>

namespace bpann {

using VectorId = std::uint64_t;
using NodeId = std::uint64_t;

inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

enum class Metric : std::uint8_t { euclidean = 0, cosine = 1 };

std::string_view to_string(Metric metric) noexcept;
// Throws UsageError for anything but "euclidean"/"l2" or "cosine"/"angular".
Metric parse_metric(std::string_view name);

struct Neighbor {
  VectorId id = 0;
  float distance = 0.0f;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

// Nearest first; equal distances break toward the smaller id.
struct NearerFirst {
  bool operator()(const Neighbor& a, const Neighbor& b) const noexcept {
    return a.distance < b.distance || (a.distance == b.distance && a.id < b.id);
  }
};

// Farthest first; equal distances break toward the smaller id.
struct FartherFirst {
  bool operator()(const Neighbor& a, const Neighbor& b) const noexcept {
    return a.distance > b.distance || (a.distance == b.distance && a.id < b.id);
  }
};

}  // namespace bpann
