#include "bpann/hcluster.hpp"

#include <numeric>
#include <utility>

#include "bpann/error.hpp"
#include "bpann/parallel.hpp"

namespace bpann {

namespace {

struct Pending {
  ClusterNode* node;
  std::vector<std::size_t> rows;
};

}  // namespace

ClusterNode hcluster(const VectorSet& set, std::size_t tau, const KMeansParams& params,
                     Metric metric) {
  if (tau < 1) throw UsageError("hcluster: tau must be >= 1");
  if (params.K < 2) throw UsageError("hcluster: K must be >= 2");
  params.validate();
  if (set.empty()) throw UsageError("hcluster: empty dataset");

  const MatrixView points = set.matrix();
  ClusterNode root;
  std::vector<std::size_t> all(set.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  root.centroid = mean_of_rows(points, all);
  root.count = all.size();

  auto make_leaf = [&](ClusterNode& node, const std::vector<std::size_t>& rows) {
    node.member_ids.reserve(rows.size());
    for (const std::size_t r : rows) node.member_ids.push_back(set.id(r));
  };

  std::vector<Pending> queue;
  if (all.size() <= tau) {
    make_leaf(root, all);
    return root;
  }
  queue.push_back({&root, std::move(all)});

  std::uint64_t serial = 0;
  while (!queue.empty()) {
    // Every partition on the queue sits at the same depth; split them all.
    std::vector<std::vector<Cluster>> results(queue.size());
    const bool many = queue.size() > 1;
    parallel_for(
        queue.size(),
        [&](std::size_t i) {
          KMeansParams p = params;
          p.seed = mix_seed(params.seed, serial + i);
          if (many) p.threads = 1;
          results[i] = kmeans_pp(points, queue[i].rows, p, metric);
        },
        many ? params.threads : 1);
    serial += queue.size();

    std::vector<Pending> next;
    for (std::size_t i = 0; i < queue.size(); ++i) {
      ClusterNode& parent = *queue[i].node;
      auto& clusters = results[i];
      if (clusters.size() < 2) {
        parent.overflow = true;
        make_leaf(parent, queue[i].rows);
        continue;
      }
      parent.children.resize(clusters.size());
      for (std::size_t c = 0; c < clusters.size(); ++c) {
        ClusterNode& child = parent.children[c];
        child.centroid = std::move(clusters[c].centroid);
        child.level = parent.level + 1;
        child.count = clusters[c].members.size();
        if (child.count <= tau) {
          make_leaf(child, clusters[c].members);
        } else {
          next.push_back({&child, std::move(clusters[c].members)});
        }
      }
    }
    queue = std::move(next);
  }
  return root;
}

std::size_t hierarchy_depth(const ClusterNode& root) {
  std::size_t depth = root.level;
  for (const auto& c : root.children) depth = std::max(depth, hierarchy_depth(c));
  return depth;
}

void for_each_leaf(const ClusterNode& root, const std::function<void(const ClusterNode&)>& fn) {
  if (root.is_leaf()) {
    fn(root);
    return;
  }
  for (const auto& c : root.children) for_each_leaf(c, fn);
}

}  // namespace bpann
