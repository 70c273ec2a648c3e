#pragma once

// Independent reference implementation of the normal-weighted
// Felzenszwalb-Huttenlocher segmentation, used as the oracle for
// graph_cut_segments. Deliberately different machinery: explicit component
// member lists instead of union-find, and its own edge assembly.

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "sgcl/knn.hpp"
#include "sgcl/pointcloud.hpp"

namespace reference_fh {

// Returns the partition of overlap ids as a sorted set of sorted id vectors,
// numbered by smallest contained id like the library's SegmentMap.
inline std::vector<std::vector<std::int64_t>> partition(const sgcl::PointCloud& cloud,
                                                        const std::vector<std::int64_t>& overlap_ids,
                                                        const sgcl::KnnGraph& graph,
                                                        double threshold,
                                                        std::int64_t min_segment_size) {
  const std::set<std::int64_t> overlap(overlap_ids.begin(), overlap_ids.end());
  std::vector<std::int64_t> rows;
  std::vector<std::int64_t> comp_of(static_cast<std::size_t>(cloud.size()), -1);
  for (std::int64_t r = 0; r < cloud.size(); ++r)
    if (overlap.count(cloud.ids[static_cast<std::size_t>(r)])) rows.push_back(r);

  struct Component {
    std::vector<std::int64_t> members;  // rows
    double internal = 0.0;
    bool alive = true;
  };
  std::vector<Component> comps;
  for (const auto r : rows) {
    comp_of[static_cast<std::size_t>(r)] = static_cast<std::int64_t>(comps.size());
    comps.push_back({{r}, 0.0, true});
  }

  struct Edge {
    double w;
    std::int64_t id_u, id_v;  // ascending original ids
    std::int64_t u, v;
  };
  std::set<std::pair<std::int64_t, std::int64_t>> seen;
  std::vector<Edge> edges;
  for (const auto& e : graph.edges) {
    auto u = e.source, v = e.target;
    if (comp_of[static_cast<std::size_t>(u)] < 0 || comp_of[static_cast<std::size_t>(v)] < 0) continue;
    auto id_u = cloud.ids[static_cast<std::size_t>(u)], id_v = cloud.ids[static_cast<std::size_t>(v)];
    if (id_u > id_v) {
      std::swap(u, v);
      std::swap(id_u, id_v);
    }
    if (!seen.insert({id_u, id_v}).second) continue;
    edges.push_back({1.0 - sgcl::dot(cloud.normals[static_cast<std::size_t>(u)],
                                     cloud.normals[static_cast<std::size_t>(v)]),
                     id_u, id_v, u, v});
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    if (a.w != b.w) return a.w < b.w;
    if (a.id_u != b.id_u) return a.id_u < b.id_u;
    return a.id_v < b.id_v;
  });

  auto merge = [&](std::int64_t ca, std::int64_t cb, double w) {
    auto& a = comps[static_cast<std::size_t>(ca)];
    auto& b = comps[static_cast<std::size_t>(cb)];
    for (const auto r : b.members) {
      comp_of[static_cast<std::size_t>(r)] = ca;
      a.members.push_back(r);
    }
    a.internal = std::max({a.internal, b.internal, w});
    b.alive = false;
    b.members.clear();
  };

  for (const auto& e : edges) {
    const auto ca = comp_of[static_cast<std::size_t>(e.u)], cb = comp_of[static_cast<std::size_t>(e.v)];
    if (ca == cb) continue;
    const double ta = comps[static_cast<std::size_t>(ca)].internal +
                      threshold / static_cast<double>(comps[static_cast<std::size_t>(ca)].members.size());
    const double tb = comps[static_cast<std::size_t>(cb)].internal +
                      threshold / static_cast<double>(comps[static_cast<std::size_t>(cb)].members.size());
    if (e.w <= std::min(ta, tb)) merge(ca, cb, e.w);
  }
  for (const auto& e : edges) {
    const auto ca = comp_of[static_cast<std::size_t>(e.u)], cb = comp_of[static_cast<std::size_t>(e.v)];
    if (ca == cb) continue;
    if (static_cast<std::int64_t>(comps[static_cast<std::size_t>(ca)].members.size()) < min_segment_size ||
        static_cast<std::int64_t>(comps[static_cast<std::size_t>(cb)].members.size()) < min_segment_size)
      merge(ca, cb, e.w);
  }

  std::map<std::int64_t, std::vector<std::int64_t>> by_min_id;
  for (const auto& c : comps) {
    if (!c.alive || c.members.empty()) continue;
    std::vector<std::int64_t> ids;
    for (const auto r : c.members) ids.push_back(cloud.ids[static_cast<std::size_t>(r)]);
    std::sort(ids.begin(), ids.end());
    by_min_id[ids.front()] = std::move(ids);
  }
  std::vector<std::vector<std::int64_t>> out;
  for (auto& [_, ids] : by_min_id) out.push_back(std::move(ids));
  return out;
}

}  // namespace reference_fh
