#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "bpann/graph.hpp"
#include "bpann/hcluster.hpp"
#include "bpann/node_store.hpp"
#include "bpann/vector_set.hpp"

namespace bpann {

/// Exact centroid recompute period (per node, in mutations).
inline constexpr std::uint32_t kRecomputeEvery = 256;

/// In-memory B+ANN tree. Node ids index a dense table; a locator maps every
/// vector id to its leaf slot. Skip edges, when attached, live beside it.
class BPlusAnnTree final : public NodeStore {
 public:
  /// Empty tree: a single empty root leaf.
  BPlusAnnTree(std::size_t dim, BuildParams params);

  /// Adopts a complete node table (ids must equal table positions; unused
  /// positions may be null). Rebuilds the locator. Throws IntegrityError on
  /// structural problems it can see cheaply.
  static BPlusAnnTree from_nodes(std::size_t dim, BuildParams params,
                                 std::vector<std::shared_ptr<Node>> nodes, NodeId root);

  std::size_t dim() const override { return dim_; }
  const BuildParams& params() const override { return params_; }
  NodeId root_id() const override { return root_; }
  std::size_t node_count() const override { return live_nodes_; }

  NodePtr read(NodeId id, IoCounters* io = nullptr) const override;
  std::optional<Location> locate(VectorId id) const override;

  bool has_edges() const override { return edges_ != nullptr; }
  std::pair<std::size_t, std::size_t> edge_shape() const override {
    if (!edges_) return {0, 0};
    return {edges_->d_edge(), edges_->s_leaf()};
  }
  std::span<const VectorId> neighbors(const Node& leaf, std::uint32_t slot) const override;

  std::shared_ptr<Node> write(NodeId id) override;
  NodeId allocate(std::shared_ptr<Node> node) override;
  void set_root(NodeId id) override { root_ = id; bump_version(); }
  void set_location(VectorId id, Location loc) override { locator_[id] = loc; }
  void leaf_changed(NodeId leaf) override;

  void attach_edges(std::shared_ptr<SkipEdgeGraph> graph) { edges_ = std::move(graph); }
  void detach_edges() { edges_.reset(); }
  const SkipEdgeGraph* edges() const { return edges_.get(); }
  SkipEdgeGraph* edges() { return edges_.get(); }

  /// All node ids in the table, ascending.
  std::vector<NodeId> node_ids() const;
  std::vector<NodeId> leaf_ids() const;

  /// Test hook: direct mutable access that bypasses all bookkeeping.
  Node& raw_node(NodeId id) { return *nodes_.at(id); }

 private:
  std::size_t dim_;
  BuildParams params_;
  std::vector<std::shared_ptr<Node>> nodes_;
  std::size_t live_nodes_ = 0;
  NodeId root_ = kNoNode;
  std::unordered_map<VectorId, Location> locator_;
  std::shared_ptr<SkipEdgeGraph> edges_;
};

/// Builds the tree from the partition hierarchy. Any hierarchy subtree with at
/// most kappa_leaf vectors becomes one leaf block; blocks are added whole, in
/// hierarchy depth-first order, and inner nodes split as they fill.
/// Throws IntegrityError if the hierarchy does not partition `set`.
BPlusAnnTree build_tree(const ClusterNode& hierarchy, const VectorSet& set,
                        const BuildParams& params);

struct InsertReport {
  NodeId leaf = kNoNode;  // leaf that received the vector (before any split)
  std::size_t splits = 0;
};

/// Routes `v` root-to-leaf by nearest centroid, appends it, updates centroids
/// on the path, and splits upward while nodes exceed capacity. The caller must
/// hold store.mutex() exclusively. Throws UsageError on a duplicate id or
/// wrong dimension, DomainError on a non-finite or (cosine) zero vector.
InsertReport insert(NodeStore& store, std::span<const float> v, VectorId id);

/// Same, taking the store's lock.
InsertReport insert_locked(NodeStore& store, std::span<const float> v, VectorId id);

/// Splits an over-capacity node in two with 2-means on its keys; the new
/// sibling goes right after it in the parent (a new root if needed). Returns
/// (original id, sibling id). Throws UsageError if the node is not over
/// capacity.
std::pair<NodeId, NodeId> split_node(NodeStore& store, NodeId id);

struct VerifyReport {
  bool ok = true;
  std::string violation;  // first problem found
  std::size_t nodes = 0;
  std::size_t leaves = 0;
  std::uint64_t vectors = 0;
  std::size_t height = 0;
};

/// Checks capacity, balance, parent links, child key copies, centroid means
/// (1e-4 relative), id uniqueness, and locator consistency.
VerifyReport verify_tree(const NodeStore& store);

/// Leaf ids in depth-first order (children in stored order).
std::vector<NodeId> leaves_in_order(const NodeStore& store);

/// Exact mean of a node's content: leaf vectors, or child centroids weighted
/// by child vector counts.
std::vector<float> content_mean(const Node& node, std::size_t dim);

}  // namespace bpann
