#include "bpann/views.hpp"

#include <algorithm>
#include <map>
#include <shared_mutex>
#include <unordered_map>
#include <unordered_set>

#include "bpann/error.hpp"
#include "bpann/knn.hpp"

namespace bpann {

namespace {

void refresh_entry(Node& parent, std::size_t i, const Node& child, std::size_t dim) {
  parent.child_weights[i] = child.weight;
  std::copy(child.centroid.begin(), child.centroid.end(),
            parent.child_centroids.begin() + static_cast<std::ptrdiff_t>(i * dim));
}

std::shared_ptr<Node> inner(NodeId id, NodeId parent, std::uint16_t level,
                            const std::vector<std::shared_ptr<Node>>& kids, std::size_t dim) {
  auto n = std::make_shared<Node>();
  n->id = id;
  n->kind = NodeKind::inner;
  n->level = level;
  n->parent = parent;
  n->child_weights.resize(kids.size());
  n->child_centroids.resize(kids.size() * dim);
  for (std::size_t i = 0; i < kids.size(); ++i) {
    n->children.push_back(kids[i]->id);
    refresh_entry(*n, i, *kids[i], dim);
    n->weight += kids[i]->weight;
  }
  n->centroid = content_mean(*n, dim);
  n->refresh_norms(dim);
  return n;
}

}  // namespace

std::shared_ptr<const View> create_view(const NodeStore& base, std::span<const float> seed,
                                        const ViewParams& params, std::uint64_t created_at) {
  const std::uint64_t n = base.size();
  if (params.k_view == 0 || params.k_view > n) {
    throw UsageError("k_view must be in [1, " + std::to_string(n) + "], got " +
                     std::to_string(params.k_view));
  }
  const std::size_t dim = base.dim();
  SearchParams sp = params.seed_search;
  sp.k = params.k_view;
  sp.dissimilar = false;
  const SearchResult found = search(base, seed, sp);

  // Base leaves holding a result, in the order their first result appears.
  std::vector<NodeId> leaves;
  {
    std::shared_lock lock(base.mutex());
    std::unordered_set<NodeId> seen;
    for (const auto& nb : found.neighbors) {
      const auto loc = base.locate(nb.id);
      if (!loc) throw IntegrityError("search returned unknown id " + std::to_string(nb.id));
      if (seen.insert(loc->leaf).second) leaves.push_back(loc->leaf);
    }
  }
  // Copy order: grouped by original parent, parents and their children in
  // base order, so sibling leaves stay adjacent.
  std::map<NodeId, std::vector<NodeId>> by_parent;
  std::vector<NodePtr> originals;
  {
    std::shared_lock lock(base.mutex());
    for (const NodeId id : leaves) originals.push_back(base.read(id));
    for (const auto& leaf : originals) by_parent[leaf->parent].push_back(leaf->id);
    for (auto& [parent, kids] : by_parent) {
      if (parent == kNoNode) continue;
      const NodePtr p = base.read(parent);
      std::unordered_map<NodeId, std::size_t> pos;
      for (std::size_t i = 0; i < p->children.size(); ++i) pos.emplace(p->children[i], i);
      std::sort(kids.begin(), kids.end(),
                [&](NodeId a, NodeId b) { return pos.at(a) < pos.at(b); });
    }
  }
  std::unordered_map<NodeId, NodePtr> original_of;
  for (const auto& o : originals) original_of.emplace(o->id, o);

  BuildParams bp = base.params();
  std::vector<std::shared_ptr<Node>> nodes;
  std::vector<NodeId> copied;
  auto copy_leaf = [&](NodeId base_id, NodeId parent) {
    auto leaf = std::make_shared<Node>(*original_of.at(base_id));
    leaf->id = nodes.size();
    leaf->parent = parent;
    leaf->edges.clear();
    leaf->mutations = 0;
    nodes.push_back(leaf);
    copied.push_back(base_id);
    return leaf;
  };

  NodeId root;
  if (by_parent.size() == 1 && by_parent.begin()->first == kNoNode) {
    // The base tree is a single leaf.
    copy_leaf(by_parent.begin()->second.front(), kNoNode);
    root = 0;
  } else {
    nodes.push_back(nullptr);  // sub-root slot
    std::vector<std::shared_ptr<Node>> parents;
    for (const auto& [base_parent, kids] : by_parent) {
      const NodeId pid = nodes.size();
      nodes.push_back(nullptr);
      std::vector<std::shared_ptr<Node>> copies;
      for (const NodeId k : kids) copies.push_back(copy_leaf(k, pid));
      nodes[pid] = inner(pid, 0, 1, copies, dim);
      parents.push_back(nodes[pid]);
    }
    nodes[0] = inner(0, kNoNode, 2, parents, dim);
    root = 0;
    bp.kappa_inner = std::max(bp.kappa_inner, parents.size());
  }

  BPlusAnnTree tree = BPlusAnnTree::from_nodes(dim, bp, std::move(nodes), root);
  if (params.edges) tree.attach_edges(build_skip_edges(tree, *params.edges));

  std::shared_ptr<View> view(new View(std::move(tree)));
  view->seed_.assign(seed.begin(), seed.end());
  view->k_view_ = params.k_view;
  view->created_at_ = created_at;
  view->seed_radius_ = found.neighbors.empty() ? 0.0f : found.neighbors.back().distance;
  view->base_leaves_ = std::move(copied);
  return view;
}

ViewSearchResult view_search(const View& view, std::span<const float> q, const SearchParams& params,
                             const ViewPolicy& policy) {
  ViewSearchResult out;
  out.result = search(view.tree(), q, params);
  ++view.served_;
  const auto& nb = out.result.neighbors;
  switch (policy.kind) {
    case Exhaustion::oracle: {
      if (!policy.oracle_set) throw UsageError("oracle exhaustion needs an oracle set");
      const auto truth = brute_force_knn(*policy.oracle_set, q, params.k, view.tree().metric());
      out.recall = recall_at(nb, truth);
      out.in_view = *out.recall > 0.0;
      break;
    }
    case Exhaustion::radius: {
      const double limit = policy.lambda * static_cast<double>(view.seed_radius());
      out.in_view = !nb.empty() && static_cast<double>(nb.front().distance) <= limit;
      break;
    }
  }
  return out;
}

SearchResult search_dissimilar(const NodeStore& base, std::span<const float> q,
                               SearchParams params, const View* scope) {
  params.dissimilar = true;
  return search(scope ? static_cast<const NodeStore&>(scope->tree()) : base, q, params);
}

std::shared_ptr<const View> ViewHandle::get() const {
  std::lock_guard lock(mu_);
  return view_;
}

void ViewHandle::replace(std::shared_ptr<const View> next) {
  std::lock_guard lock(mu_);
  view_ = std::move(next);
}

double StreamResult::mean_survival() const {
  if (log.empty()) return 0.0;
  std::size_t total = 0;
  for (const auto& r : log) total += r.queries_served;
  return static_cast<double>(total) / static_cast<double>(log.size());
}

StreamResult serve_stream(const NodeStore& base, const MatrixView& queries,
                          const StreamParams& params) {
  if (queries.rows == 0) throw UsageError("serve_stream needs at least one query");
  StreamResult out;
  ViewHandle handle;
  double recall_sum = 0.0;
  auto close = [&] {
    if (out.log.empty()) return;
    auto& rec = out.log.back();
    if (params.policy.kind == Exhaustion::oracle && rec.queries_served > 0) {
      rec.mean_recall = recall_sum / static_cast<double>(rec.queries_served);
    }
    recall_sum = 0.0;
  };
  auto open = [&](std::size_t t) {
    close();
    handle.replace(create_view(base, queries.row(t), params.view, t));
    out.log.push_back({out.log.size(), t, 0, std::nullopt});
  };

  for (std::size_t t = 0; t < queries.rows; ++t) {
    const auto q = queries.row(t);
    bool fresh = false;
    if (!handle.get()) {
      open(t);
      fresh = true;
    }
    auto r = view_search(*handle.get(), q, params.search, params.policy);
    if (!r.in_view && !fresh) {
      open(t);
      fresh = true;
      r = view_search(*handle.get(), q, params.search, params.policy);
    }
    out.refreshed.push_back(fresh);
    ++out.log.back().queries_served;
    if (r.recall) recall_sum += *r.recall;
    out.results.push_back(std::move(r.result));
  }
  close();
  return out;
}

}  // namespace bpann
