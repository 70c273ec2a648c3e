#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "sgcl/pointcloud.hpp"

namespace sgcl {

struct KnnEdge {
  std::int64_t source;
  std::int64_t target;
  double dist_sq;
};

// Exact k-nearest-neighbor graph. Edges are stored grouped by source, each
// group sorted ascending by (dist_sq, target); distance ties break to the
// smaller point index. Every source has exactly `k` edges.
struct KnnGraph {
  std::int64_t k = 0;  // effective neighbor count: min(requested, M-1)
  std::int64_t num_points = 0;
  std::vector<KnnEdge> edges;

  const KnnEdge* neighbors(std::int64_t i) const { return edges.data() + i * k; }

  // (num_points, k) row-major neighbor index list for feature aggregation.
  std::vector<std::int64_t> flat_targets() const {
    std::vector<std::int64_t> out(edges.size());
    for (std::size_t e = 0; e < edges.size(); ++e) out[e] = edges[e].target;
    return out;
  }
};

// Brute-force all-pairs scan; exact at desk scale.
inline KnnGraph knn_graph(const PointCloud& cloud, std::int64_t k) {
  const auto m = cloud.size();
  if (m < 2) throw empty_input_error("knn_graph: need at least 2 points");
  if (k < 1) throw precondition_error("knn_graph: k must be >= 1");

  KnnGraph g;
  g.num_points = m;
  g.k = std::min<std::int64_t>(k, m - 1);
  g.edges.reserve(static_cast<std::size_t>(m * g.k));

  std::vector<std::pair<double, std::int64_t>> cand(static_cast<std::size_t>(m - 1));
  for (std::int64_t i = 0; i < m; ++i) {
    std::size_t w = 0;
    for (std::int64_t j = 0; j < m; ++j) {
      if (j == i) continue;
      cand[w++] = {dist_sq(cloud.coords[static_cast<std::size_t>(i)],
                           cloud.coords[static_cast<std::size_t>(j)]),
                   j};
    }
    std::partial_sort(cand.begin(), cand.begin() + g.k, cand.end());
    for (std::int64_t t = 0; t < g.k; ++t)
      g.edges.push_back({i, cand[static_cast<std::size_t>(t)].second,
                         cand[static_cast<std::size_t>(t)].first});
  }
  return g;
}

}  // namespace sgcl
