#include "bpann/node.hpp"

#include "bpann/error.hpp"

namespace bpann {

void Node::refresh_norms(std::size_t dim) {
  auto fill = [dim](const std::vector<float>& flat, std::vector<float>& out) {
    const std::size_t n = dim == 0 ? 0 : flat.size() / dim;
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = l2_norm(flat.data() + i * dim, dim);
  };
  if (is_leaf()) {
    fill(vectors, norms);
  } else {
    fill(child_centroids, child_norms);
  }
}

bool same_content(const Node& a, const Node& b) {
  return a.id == b.id && a.kind == b.kind && a.level == b.level && a.parent == b.parent &&
         a.weight == b.weight && a.centroid == b.centroid && a.children == b.children &&
         a.child_weights == b.child_weights && a.child_centroids == b.child_centroids &&
         a.ids == b.ids && a.vectors == b.vectors && a.edges == b.edges;
}

void BuildParams::validate() const {
  if (kappa_leaf < 1) throw UsageError("kappa_leaf must be >= 1");
  if (kappa_inner < 4) throw UsageError("kappa_inner must be >= 4");
}

}  // namespace bpann
