#include "bpann/tree.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <mutex>
#include <string>
#include <unordered_set>

#include "bpann/error.hpp"
#include "bpann/kmeans.hpp"
#include "bpann/parallel.hpp"

namespace bpann {

namespace {

std::shared_ptr<Node> empty_leaf(std::size_t dim) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::leaf;
  n->centroid.assign(dim, 0.0f);
  return n;
}

void refresh_child_entry(Node& parent, const Node& child, std::size_t dim) {
  const auto it = std::find(parent.children.begin(), parent.children.end(), child.id);
  if (it == parent.children.end()) {
    throw IntegrityError("node " + std::to_string(child.id) + " missing from parent " +
                         std::to_string(parent.id));
  }
  const auto i = static_cast<std::size_t>(it - parent.children.begin());
  std::copy(child.centroid.begin(), child.centroid.end(),
            parent.child_centroids.begin() + static_cast<std::ptrdiff_t>(i * dim));
  parent.child_weights[i] = child.weight;
  parent.child_norms[i] = l2_norm(child.centroid.data(), dim);
}

void append_child_entry(Node& parent, const Node& child, std::size_t dim,
                        std::size_t position) {
  const auto pos = static_cast<std::ptrdiff_t>(position);
  parent.children.insert(parent.children.begin() + pos, child.id);
  parent.child_weights.insert(parent.child_weights.begin() + pos, child.weight);
  parent.child_centroids.insert(parent.child_centroids.begin() + pos * static_cast<std::ptrdiff_t>(dim),
                                child.centroid.begin(), child.centroid.end());
  parent.child_norms.insert(parent.child_norms.begin() + pos,
                            l2_norm(child.centroid.data(), dim));
}

std::size_t capacity_of(const Node& n, const BuildParams& p) {
  return n.is_leaf() ? p.kappa_leaf : p.kappa_inner;
}

// Index of the child whose centroid is nearest `v`; ties to the smaller id.
std::size_t nearest_child(const Node& n, const float* v, float vnorm, std::size_t dim,
                          Metric metric) {
  std::size_t best = 0;
  float best_d = std::numeric_limits<float>::infinity();
  for (std::size_t i = 0; i < n.children.size(); ++i) {
    const float d = detail::distance_with_norms(v, n.child_centroids.data() + i * dim, dim,
                                                vnorm, n.child_norms[i], metric);
    if (d < best_d || (d == best_d && n.children[i] < n.children[best])) {
      best = i;
      best_d = d;
    }
  }
  return best;
}

void check_vector(std::span<const float> v, std::size_t dim, Metric metric) {
  if (v.size() != dim) {
    throw UsageError("vector dim " + std::to_string(v.size()) + " does not match index dim " +
                     std::to_string(dim));
  }
  for (const float x : v) {
    if (!std::isfinite(x)) throw DomainError("non-finite vector component");
  }
  if (metric == Metric::cosine && l2_norm(v.data(), dim) == 0.0f) {
    throw DomainError("zero vector under cosine metric");
  }
}

bool rel_close(std::span<const float> a, std::span<const float> b, double tol) {
  if (a.size() != b.size()) return false;
  double scale = 1.0;
  double diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    scale = std::max(scale, static_cast<double>(std::fabs(b[i])));
    diff = std::max(diff, static_cast<double>(std::fabs(a[i] - b[i])));
  }
  return diff <= tol * scale;
}

void split_until_over(NodeStore& store, NodeId start) {
  NodeId cur = start;
  while (cur != kNoNode) {
    const NodePtr n = store.read(cur);
    if (n->entry_count() <= capacity_of(*n, store.params())) break;
    split_node(store, cur);
    cur = store.read(cur)->parent;
  }
}

}  // namespace

std::vector<float> content_mean(const Node& node, std::size_t dim) {
  std::vector<double> acc(dim, 0.0);
  double total = 0.0;
  if (node.is_leaf()) {
    for (std::size_t i = 0; i < node.ids.size(); ++i) {
      const float* x = node.vectors.data() + i * dim;
      for (std::size_t d = 0; d < dim; ++d) acc[d] += x[d];
    }
    total = static_cast<double>(node.ids.size());
  } else {
    for (std::size_t i = 0; i < node.children.size(); ++i) {
      const double w = static_cast<double>(node.child_weights[i]);
      const float* c = node.child_centroids.data() + i * dim;
      for (std::size_t d = 0; d < dim; ++d) acc[d] += w * c[d];
      total += w;
    }
  }
  std::vector<float> mean(dim, 0.0f);
  if (total > 0.0) {
    for (std::size_t d = 0; d < dim; ++d) mean[d] = static_cast<float>(acc[d] / total);
  }
  return mean;
}

// ---------------------------------------------------------------------------
// BPlusAnnTree

BPlusAnnTree::BPlusAnnTree(std::size_t dim, BuildParams params)
    : dim_(dim), params_(params) {
  params_.validate();
  if (dim_ == 0) throw UsageError("tree: dim must be positive");
  root_ = allocate(empty_leaf(dim_));
}

BPlusAnnTree BPlusAnnTree::from_nodes(std::size_t dim, BuildParams params,
                                      std::vector<std::shared_ptr<Node>> nodes, NodeId root) {
  BPlusAnnTree tree(dim, params);
  tree.nodes_ = std::move(nodes);
  tree.live_nodes_ = 0;
  tree.locator_.clear();
  for (std::size_t i = 0; i < tree.nodes_.size(); ++i) {
    const auto& n = tree.nodes_[i];
    if (!n) continue;
    if (n->id != i) {
      throw IntegrityError("node table slot " + std::to_string(i) + " holds node " +
                           std::to_string(n->id));
    }
    ++tree.live_nodes_;
    if (n->norms.empty() && n->child_norms.empty()) n->refresh_norms(dim);
    if (!n->is_leaf()) continue;
    for (std::size_t s = 0; s < n->ids.size(); ++s) {
      if (!tree.locator_.emplace(n->ids[s], Location{n->id, static_cast<std::uint32_t>(s)})
               .second) {
        throw IntegrityError("vector id " + std::to_string(n->ids[s]) + " stored twice");
      }
    }
  }
  if (root >= tree.nodes_.size() || !tree.nodes_[root]) {
    throw IntegrityError("root node " + std::to_string(root) + " does not exist");
  }
  tree.root_ = root;
  return tree;
}

NodePtr BPlusAnnTree::read(NodeId id, IoCounters*) const {
  if (id >= nodes_.size() || !nodes_[id]) {
    throw IntegrityError("unknown node id " + std::to_string(id));
  }
  return nodes_[id];
}

std::optional<Location> BPlusAnnTree::locate(VectorId id) const {
  const auto it = locator_.find(id);
  if (it == locator_.end()) return std::nullopt;
  return it->second;
}

std::span<const VectorId> BPlusAnnTree::neighbors(const Node& leaf, std::uint32_t slot) const {
  if (!edges_) return {};
  return edges_->neighbors(leaf.ids[slot]);
}

std::shared_ptr<Node> BPlusAnnTree::write(NodeId id) {
  if (id >= nodes_.size() || !nodes_[id]) {
    throw IntegrityError("unknown node id " + std::to_string(id));
  }
  bump_version();
  return nodes_[id];
}

NodeId BPlusAnnTree::allocate(std::shared_ptr<Node> node) {
  node->id = nodes_.size();
  nodes_.push_back(std::move(node));
  ++live_nodes_;
  bump_version();
  return nodes_.back()->id;
}

void BPlusAnnTree::leaf_changed(NodeId leaf) {
  if (edges_) edges_->stale_leaves.insert(leaf);
}

std::vector<NodeId> BPlusAnnTree::node_ids() const {
  std::vector<NodeId> out;
  for (const auto& n : nodes_) {
    if (n) out.push_back(n->id);
  }
  return out;
}

std::vector<NodeId> BPlusAnnTree::leaf_ids() const {
  std::vector<NodeId> out;
  for (const auto& n : nodes_) {
    if (n && n->is_leaf()) out.push_back(n->id);
  }
  return out;
}

// ---------------------------------------------------------------------------
// insert / split

InsertReport insert(NodeStore& store, std::span<const float> v, VectorId id) {
  const std::size_t dim = store.dim();
  const Metric metric = store.metric();
  check_vector(v, dim, metric);
  if (store.locate(id)) throw UsageError("duplicate vector id " + std::to_string(id));
  const float vnorm = l2_norm(v.data(), dim);

  std::vector<std::shared_ptr<Node>> path;
  path.push_back(store.write(store.root_id()));
  while (!path.back()->is_leaf()) {
    const Node& n = *path.back();
    if (n.children.empty()) {
      throw IntegrityError("inner node " + std::to_string(n.id) + " has no children");
    }
    path.push_back(store.write(n.children[nearest_child(n, v.data(), vnorm, dim, metric)]));
  }

  Node& leaf = *path.back();
  const auto slot = static_cast<std::uint32_t>(leaf.ids.size());
  leaf.ids.push_back(id);
  leaf.vectors.insert(leaf.vectors.end(), v.begin(), v.end());
  leaf.norms.push_back(vnorm);
  if (!leaf.edges.empty()) leaf.edges.resize(leaf.ids.size());
  store.set_location(id, {leaf.id, slot});

  for (std::size_t i = path.size(); i-- > 0;) {
    Node& n = *path[i];
    if (i + 1 < path.size()) refresh_child_entry(n, *path[i + 1], dim);
    n.weight += 1;
    if (n.centroid.size() != dim) n.centroid.assign(dim, 0.0f);
    if (++n.mutations >= kRecomputeEvery) {
      n.centroid = content_mean(n, dim);
      n.mutations = 0;
    } else {
      const float w = static_cast<float>(n.weight);
      for (std::size_t d = 0; d < dim; ++d) n.centroid[d] += (v[d] - n.centroid[d]) / w;
    }
  }
  store.leaf_changed(leaf.id);

  InsertReport report{leaf.id, 0};
  NodeId cur = leaf.id;
  while (cur != kNoNode) {
    const NodePtr n = store.read(cur);
    if (n->entry_count() <= capacity_of(*n, store.params())) break;
    split_node(store, cur);
    ++report.splits;
    cur = store.read(cur)->parent;
  }
  path.clear();
  store.sync_lru();
  return report;
}

InsertReport insert_locked(NodeStore& store, std::span<const float> v, VectorId id) {
  std::unique_lock lock(store.mutex());
  return insert(store, v, id);
}

std::pair<NodeId, NodeId> split_node(NodeStore& store, NodeId id) {
  const std::size_t dim = store.dim();
  const BuildParams& params = store.params();
  std::shared_ptr<Node> node = store.write(id);
  const std::size_t count = node->entry_count();
  if (count <= capacity_of(*node, params)) {
    throw UsageError("split_node: node " + std::to_string(id) + " holds " +
                     std::to_string(count) + " entries, not over capacity");
  }

  KMeansParams kp;
  kp.K = 2;
  kp.J = 25;
  kp.seed = mix_seed(params.seed, id, count);
  kp.convergence_eps = 0.0f;
  kp.threads = 1;
  const auto clusters = kmeans_pp(node->keys(dim), kp, params.metric);
  std::vector<std::uint8_t> side(count, 0);
  if (clusters.size() == 2) {
    for (const std::size_t r : clusters[1].members) side[r] = 1;
  } else {
    for (std::size_t i = count / 2; i < count; ++i) side[i] = 1;
  }

  auto sib = std::make_shared<Node>();
  sib->kind = node->kind;
  sib->level = node->level;
  sib->parent = node->parent;
  const NodeId sib_id = store.allocate(sib);

  Node keep;
  keep.kind = node->kind;
  if (node->is_leaf()) {
    const bool with_edges = !node->edges.empty();
    if (with_edges) node->edges.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      Node& dst = side[i] ? *sib : keep;
      dst.ids.push_back(node->ids[i]);
      dst.vectors.insert(dst.vectors.end(), node->vectors.begin() + static_cast<std::ptrdiff_t>(i * dim),
                         node->vectors.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim));
      dst.norms.push_back(node->norms[i]);
      if (with_edges) dst.edges.push_back(std::move(node->edges[i]));
    }
    node->ids = std::move(keep.ids);
    node->vectors = std::move(keep.vectors);
    node->norms = std::move(keep.norms);
    node->edges = std::move(keep.edges);
    for (std::size_t s = 0; s < node->ids.size(); ++s) {
      store.set_location(node->ids[s], {id, static_cast<std::uint32_t>(s)});
    }
    for (std::size_t s = 0; s < sib->ids.size(); ++s) {
      store.set_location(sib->ids[s], {sib_id, static_cast<std::uint32_t>(s)});
    }
    node->weight = node->ids.size();
    sib->weight = sib->ids.size();
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      Node& dst = side[i] ? *sib : keep;
      dst.children.push_back(node->children[i]);
      dst.child_weights.push_back(node->child_weights[i]);
      dst.child_centroids.insert(dst.child_centroids.end(),
                                 node->child_centroids.begin() + static_cast<std::ptrdiff_t>(i * dim),
                                 node->child_centroids.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim));
      dst.child_norms.push_back(node->child_norms[i]);
    }
    node->children = std::move(keep.children);
    node->child_weights = std::move(keep.child_weights);
    node->child_centroids = std::move(keep.child_centroids);
    node->child_norms = std::move(keep.child_norms);
    for (const NodeId c : sib->children) store.write(c)->parent = sib_id;
    node->weight = 0;
    for (const auto w : node->child_weights) node->weight += w;
    sib->weight = 0;
    for (const auto w : sib->child_weights) sib->weight += w;
  }
  node->centroid = content_mean(*node, dim);
  sib->centroid = content_mean(*sib, dim);
  node->mutations = 0;
  sib->mutations = 0;

  if (node->parent == kNoNode) {
    auto root = std::make_shared<Node>();
    root->kind = NodeKind::inner;
    root->level = static_cast<std::uint16_t>(node->level + 1);
    const NodeId root_id = store.allocate(root);
    append_child_entry(*root, *node, dim, 0);
    append_child_entry(*root, *sib, dim, 1);
    root->weight = node->weight + sib->weight;
    root->centroid = content_mean(*root, dim);
    node->parent = root_id;
    sib->parent = root_id;
    store.set_root(root_id);
  } else {
    std::shared_ptr<Node> parent = store.write(node->parent);
    refresh_child_entry(*parent, *node, dim);
    const auto it = std::find(parent->children.begin(), parent->children.end(), id);
    append_child_entry(*parent, *sib, dim,
                       static_cast<std::size_t>(it - parent->children.begin()) + 1);
  }
  if (node->is_leaf()) {
    store.leaf_changed(id);
    store.leaf_changed(sib_id);
  }
  return {id, sib_id};
}

// ---------------------------------------------------------------------------
// bulk build

namespace {

std::size_t subtree_count(const ClusterNode& n) {
  if (n.is_leaf()) return n.member_ids.size();
  std::size_t total = 0;
  for (const auto& c : n.children) total += subtree_count(c);
  return total;
}

void collect_rows(const ClusterNode& n, const VectorSet& set, std::vector<std::size_t>& out) {
  if (n.is_leaf()) {
    for (const VectorId id : n.member_ids) out.push_back(*set.index_of(id));
    return;
  }
  for (const auto& c : n.children) collect_rows(c, set, out);
}

// Adds a finished leaf block under the nearest level-1 inner node.
void add_block(NodeStore& store, const std::shared_ptr<Node>& leaf) {
  const std::size_t dim = store.dim();
  const Metric metric = store.metric();
  const float cnorm = l2_norm(leaf->centroid.data(), dim);

  std::vector<std::shared_ptr<Node>> path;
  path.push_back(store.write(store.root_id()));
  while (path.back()->level > 1) {
    const Node& n = *path.back();
    path.push_back(store.write(n.children[nearest_child(n, leaf->centroid.data(), cnorm, dim, metric)]));
  }
  Node& parent = *path.back();
  append_child_entry(parent, *leaf, dim, parent.children.size());
  leaf->parent = parent.id;
  for (std::size_t i = path.size(); i-- > 0;) {
    Node& n = *path[i];
    if (i + 1 < path.size()) refresh_child_entry(n, *path[i + 1], dim);
    n.weight += leaf->weight;
    n.centroid = content_mean(n, dim);
  }
  split_until_over(store, parent.id);
}

}  // namespace

BPlusAnnTree build_tree(const ClusterNode& hierarchy, const VectorSet& set,
                        const BuildParams& params) {
  params.validate();
  if (set.dim() == 0) throw UsageError("build_tree: dataset has no dimension (empty input?)");

  // The hierarchy must partition the dataset exactly.
  {
    std::unordered_set<VectorId> seen;
    seen.reserve(set.size());
    bool bad = false;
    std::string why;
    for_each_leaf(hierarchy, [&](const ClusterNode& leaf) {
      for (const VectorId id : leaf.member_ids) {
        if (bad) return;
        if (!set.index_of(id)) {
          bad = true;
          why = "hierarchy id " + std::to_string(id) + " not in dataset";
        } else if (!seen.insert(id).second) {
          bad = true;
          why = "hierarchy id " + std::to_string(id) + " appears twice";
        }
      }
    });
    if (!bad && seen.size() != set.size()) {
      bad = true;
      why = "hierarchy covers " + std::to_string(seen.size()) + " of " +
            std::to_string(set.size()) + " vectors";
    }
    if (bad) throw IntegrityError("build_tree: " + why);
  }

  BPlusAnnTree tree(set.dim(), params);
  if (set.empty()) return tree;

  const MatrixView points = set.matrix();
  std::vector<std::vector<std::size_t>> units;
  std::function<void(std::vector<std::size_t>)> split_oversized =
      [&](std::vector<std::size_t> rows) {
        if (rows.size() <= params.kappa_leaf) {
          units.push_back(std::move(rows));
          return;
        }
        KMeansParams kp;
        kp.K = 2;
        kp.seed = mix_seed(params.seed, units.size(), rows.size());
        kp.threads = 1;
        auto halves = kmeans_pp(points, rows, kp, params.metric);
        if (halves.size() < 2) {
          const auto mid = rows.begin() + static_cast<std::ptrdiff_t>(rows.size() / 2);
          split_oversized(std::vector<std::size_t>(rows.begin(), mid));
          split_oversized(std::vector<std::size_t>(mid, rows.end()));
          return;
        }
        for (auto& h : halves) split_oversized(std::move(h.members));
      };
  std::function<void(const ClusterNode&)> gather = [&](const ClusterNode& n) {
    if (subtree_count(n) <= params.kappa_leaf) {
      std::vector<std::size_t> rows;
      collect_rows(n, set, rows);
      if (!rows.empty()) units.push_back(std::move(rows));
    } else if (!n.is_leaf()) {
      for (const auto& c : n.children) gather(c);
    } else {
      std::vector<std::size_t> rows;
      collect_rows(n, set, rows);
      split_oversized(std::move(rows));
    }
  };
  gather(hierarchy);

  // Leaf contents are independent of each other; fill them in parallel.
  const std::size_t dim = set.dim();
  std::vector<std::shared_ptr<Node>> blocks(units.size());
  parallel_for(units.size(), [&](std::size_t u) {
    auto leaf = std::make_shared<Node>();
    leaf->kind = NodeKind::leaf;
    leaf->ids.reserve(units[u].size());
    leaf->vectors.reserve(units[u].size() * dim);
    for (const std::size_t r : units[u]) {
      leaf->ids.push_back(set.id(r));
      const auto row = set.row(r);
      leaf->vectors.insert(leaf->vectors.end(), row.begin(), row.end());
      leaf->norms.push_back(set.norm(r));
    }
    leaf->weight = leaf->ids.size();
    leaf->centroid = mean_of_rows(points, units[u]);
    blocks[u] = std::move(leaf);
  });

  const auto index_block = [&](const Node& leaf) {
    for (std::size_t s = 0; s < leaf.ids.size(); ++s) {
      tree.set_location(leaf.ids[s], {leaf.id, static_cast<std::uint32_t>(s)});
    }
  };

  if (blocks.size() == 1) {
    std::shared_ptr<Node> root = tree.write(tree.root_id());
    const NodeId rid = root->id;
    *root = std::move(*blocks[0]);
    root->id = rid;
    index_block(*root);
    return tree;
  }

  {
    std::shared_ptr<Node> root = tree.write(tree.root_id());
    root->kind = NodeKind::inner;
    root->level = 1;
  }
  for (auto& b : blocks) {
    tree.allocate(b);
    index_block(*b);
    add_block(tree, b);
  }
  return tree;
}

std::vector<NodeId> leaves_in_order(const NodeStore& store) {
  std::vector<NodeId> out;
  std::vector<NodeId> stack{store.root_id()};
  while (!stack.empty()) {
    const NodePtr n = store.read(stack.back());
    stack.pop_back();
    if (n->is_leaf()) {
      out.push_back(n->id);
      continue;
    }
    for (auto it = n->children.rbegin(); it != n->children.rend(); ++it) stack.push_back(*it);
  }
  return out;
}

// ---------------------------------------------------------------------------
// verification

VerifyReport verify_tree(const NodeStore& store) {
  VerifyReport rep;
  const std::size_t dim = store.dim();
  const BuildParams& params = store.params();
  auto fail = [&](const std::string& why) {
    if (rep.ok) {
      rep.ok = false;
      rep.violation = why;
    }
  };

  const NodePtr root = store.read(store.root_id());
  rep.height = static_cast<std::size_t>(root->level) + 1;
  if (root->parent != kNoNode) fail("root " + std::to_string(root->id) + " has a parent");

  std::unordered_set<VectorId> seen;
  std::deque<std::pair<NodeId, NodeId>> queue{{store.root_id(), kNoNode}};
  while (!queue.empty() && rep.ok) {
    const auto [id, parent] = queue.front();
    queue.pop_front();
    const NodePtr np = store.read(id);
    const Node& n = *np;
    const std::string tag = "node " + std::to_string(id) + ": ";
    ++rep.nodes;
    if (n.id != id) fail(tag + "record carries id " + std::to_string(n.id));
    if (n.parent != parent) fail(tag + "parent link " + std::to_string(n.parent) + " != " + std::to_string(parent));
    if (n.centroid.size() != dim) fail(tag + "centroid has wrong width");
    if (n.entry_count() > capacity_of(n, params)) {
      fail(tag + "holds " + std::to_string(n.entry_count()) + " entries, over capacity");
    }
    if (n.is_leaf()) {
      ++rep.leaves;
      if (n.level != 0) fail(tag + "leaf at level " + std::to_string(n.level) + " (unbalanced)");
      if (n.vectors.size() != n.ids.size() * dim) fail(tag + "vector block size mismatch");
      if (n.weight != n.ids.size()) fail(tag + "weight does not match entry count");
      if (!n.edges.empty() && n.edges.size() > n.ids.size()) fail(tag + "more edge lists than vectors");
      for (std::size_t s = 0; s < n.ids.size() && rep.ok; ++s) {
        if (!seen.insert(n.ids[s]).second) fail(tag + "vector id " + std::to_string(n.ids[s]) + " duplicated");
        const auto loc = store.locate(n.ids[s]);
        if (!loc || *loc != Location{id, static_cast<std::uint32_t>(s)}) {
          fail(tag + "locator disagrees for vector " + std::to_string(n.ids[s]));
        }
      }
      rep.vectors += n.ids.size();
    } else {
      if (n.level == 0) fail(tag + "inner node at leaf level");
      if (n.children.empty()) fail(tag + "inner node without children");
      if (n.child_weights.size() != n.children.size() ||
          n.child_centroids.size() != n.children.size() * dim) {
        fail(tag + "child arrays disagree in size");
        continue;
      }
      std::uint64_t sum = 0;
      for (std::size_t i = 0; i < n.children.size() && rep.ok; ++i) {
        const NodePtr c = store.read(n.children[i]);
        if (c->level + 1 != n.level) fail(tag + "child " + std::to_string(c->id) + " at wrong level (unbalanced)");
        if (n.child_weights[i] != c->weight) fail(tag + "stale weight for child " + std::to_string(c->id));
        if (!rel_close({n.child_centroids.data() + i * dim, dim}, c->centroid, 1e-4)) {
          fail(tag + "stale centroid copy for child " + std::to_string(c->id));
        }
        sum += n.child_weights[i];
        queue.emplace_back(n.children[i], id);
      }
      if (sum != n.weight) fail(tag + "weight does not match children");
    }
    if (rep.ok && n.weight > 0 && !rel_close(n.centroid, content_mean(n, dim), 1e-4)) {
      fail(tag + "centroid differs from content mean");
    }
  }
  if (rep.ok && rep.vectors != root->weight) fail("leaf total differs from root weight");
  return rep;
}

}  // namespace bpann
