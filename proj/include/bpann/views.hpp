#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

#include "bpann/edges.hpp"
#include "bpann/search.hpp"
#include "bpann/tree.hpp"
#include "bpann/vector_set.hpp"

namespace bpann {

struct ViewParams {
  std::size_t k_view = 1000;
  /// Beta (and d_edge) of the base search that picks the view's leaves.
  SearchParams seed_search;
  /// Skip edges over the copied leaves; none when empty.
  std::optional<EdgeParams> edges = EdgeParams{};
};

/// A memory-resident sub-tree: every base leaf holding one of the seed's
/// k_view approximate neighbours, their original parents, and a synthetic
/// sub-root. Immutable once built apart from the `served` counter.
class View {
 public:
  const BPlusAnnTree& tree() const { return tree_; }
  std::span<const float> seed() const { return seed_; }
  std::size_t k_view() const { return k_view_; }
  std::uint64_t created_at() const { return created_at_; }
  /// Distance from the seed to its k_view-th base result.
  float seed_radius() const { return seed_radius_; }
  /// Base leaf ids the view was copied from, in copy order.
  const std::vector<NodeId>& base_leaves() const { return base_leaves_; }
  bool contains(VectorId id) const { return tree_.locate(id).has_value(); }
  std::uint64_t served() const { return served_.load(); }

 private:
  friend std::shared_ptr<const View> create_view(const NodeStore&, std::span<const float>,
                                                 const ViewParams&, std::uint64_t);
  friend struct ViewSearchResult view_search(const View&, std::span<const float>,
                                             const SearchParams&, const struct ViewPolicy&);

  explicit View(BPlusAnnTree tree) : tree_(std::move(tree)) {}

  BPlusAnnTree tree_;
  std::vector<float> seed_;
  std::size_t k_view_ = 0;
  std::uint64_t created_at_ = 0;
  float seed_radius_ = 0.0f;
  std::vector<NodeId> base_leaves_;
  mutable std::atomic<std::uint64_t> served_{0};
};

/// Searches `base` for the seed's k_view neighbours and copies the leaves
/// holding them. Never mutates `base`. Throws UsageError if k_view is zero or
/// exceeds the index size; search errors propagate.
std::shared_ptr<const View> create_view(const NodeStore& base, std::span<const float> seed,
                                        const ViewParams& params, std::uint64_t created_at = 0);

enum class Exhaustion {
  oracle,  // recall against brute force over `oracle_set` is zero
  radius,  // best distance exceeds lambda * seed_radius
};

struct ViewPolicy {
  Exhaustion kind = Exhaustion::radius;
  double lambda = 2.0;
  const VectorSet* oracle_set = nullptr;  // required for oracle mode
};

struct ViewSearchResult {
  SearchResult result;
  bool in_view = true;
  std::optional<double> recall;  // oracle mode only
};

/// Search confined to the view. `in_view` is false when the policy declares
/// the view exhausted for this query.
ViewSearchResult view_search(const View& view, std::span<const float> q, const SearchParams& params,
                             const ViewPolicy& policy = {});

/// Farthest-first search over `base`, or over `scope` when given; results
/// then come only from the view's leaves.
SearchResult search_dissimilar(const NodeStore& base, std::span<const float> q,
                               SearchParams params, const View* scope = nullptr);

/// Holder whose view can be swapped while readers keep using the old one.
class ViewHandle {
 public:
  std::shared_ptr<const View> get() const;
  void replace(std::shared_ptr<const View> next);

 private:
  mutable std::mutex mu_;
  std::shared_ptr<const View> view_;
};

struct SurvivalRecord {
  std::size_t view_index = 0;
  std::size_t seed_query_index = 0;
  std::size_t queries_served = 0;
  std::optional<double> mean_recall;
};

struct StreamParams {
  SearchParams search;  // per-query search inside the view
  ViewParams view;
  ViewPolicy policy;
};

struct StreamResult {
  std::vector<SearchResult> results;
  std::vector<SurvivalRecord> log;
  std::vector<bool> refreshed;  // query t triggered a new view

  double mean_survival() const;
};

/// Serves `queries` in order from a view, replacing it with one seeded by the
/// current query whenever the policy reports exhaustion. Throws UsageError on
/// an empty stream.
StreamResult serve_stream(const NodeStore& base, const MatrixView& queries,
                          const StreamParams& params);

}  // namespace bpann
