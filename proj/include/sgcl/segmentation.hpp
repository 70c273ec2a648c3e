#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "sgcl/knn.hpp"
#include "sgcl/pointcloud.hpp"

namespace sgcl {

// Partition of the overlap region into P segments, keyed by original point
// id. Segment indices are contiguous and ordered by smallest contained id.
struct SegmentMap {
  std::map<std::int64_t, std::int64_t> segment_of;
  std::int64_t count = 0;
  std::vector<std::int64_t> sizes;

  std::int64_t at(std::int64_t original_id) const {
    const auto it = segment_of.find(original_id);
    if (it == segment_of.end())
      throw precondition_error("segment map: unknown point id " + std::to_string(original_id));
    return it->second;
  }

  void validate() const {
    if (count <= 0) throw empty_input_error("segment map is empty");
    if (static_cast<std::int64_t>(sizes.size()) != count)
      throw dimension_error("segment map: sizes length disagrees with count");
    std::vector<std::int64_t> check(static_cast<std::size_t>(count), 0);
    for (const auto& [_, seg] : segment_of) {
      if (seg < 0 || seg >= count)
        throw dimension_error("segment map: segment index out of range");
      ++check[static_cast<std::size_t>(seg)];
    }
    if (check != sizes) throw dimension_error("segment map: sizes disagree with assignments");
    std::int64_t total = 0;
    for (const auto s : sizes) {
      if (s == 0) throw dimension_error("segment map: empty segment");
      total += s;
    }
    if (total != static_cast<std::int64_t>(segment_of.size()))
      throw dimension_error("segment map: size sum mismatch");
  }
};

namespace seg_detail {

struct UnionFind {
  std::vector<std::int64_t> parent, size;
  std::vector<double> internal;  // max weight merged so far (FH Int)

  explicit UnionFind(std::int64_t n)
      : parent(static_cast<std::size_t>(n)), size(static_cast<std::size_t>(n), 1),
        internal(static_cast<std::size_t>(n), 0.0) {
    for (std::int64_t i = 0; i < n; ++i) parent[static_cast<std::size_t>(i)] = i;
  }
  std::int64_t find(std::int64_t x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  }
  void unite(std::int64_t a, std::int64_t b, double w) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (size[static_cast<std::size_t>(a)] < size[static_cast<std::size_t>(b)]) std::swap(a, b);
    parent[static_cast<std::size_t>(b)] = a;
    size[static_cast<std::size_t>(a)] += size[static_cast<std::size_t>(b)];
    internal[static_cast<std::size_t>(a)] =
        std::max({internal[static_cast<std::size_t>(a)], internal[static_cast<std::size_t>(b)], w});
  }
};

struct WeightedEdge {
  double w;
  std::int64_t id_u, id_v;  // original ids, id_u < id_v (permutation stable)
  std::int64_t u, v;        // rows
  bool operator<(const WeightedEdge& o) const {
    if (w != o.w) return w < o.w;
    if (id_u != o.id_u) return id_u < o.id_u;
    return id_v < o.id_v;
  }
};

}  // namespace seg_detail

// Felzenszwalb-Huttenlocher segmentation of the overlap region with edge
// weight w(i,j) = 1 - dot(n_i, n_j). Two components merge when the
// connecting weight is <= min over both of (internal difference +
// threshold / size); edges are processed ascending, ties by the original id
// pair so the partition does not depend on point order. Components below
// min_segment_size are then merged into the neighbor reachable over their
// lowest-weight edge (single ascending pass).
inline SegmentMap graph_cut_segments(const PointCloud& cloud,
                                     const std::vector<std::int64_t>& overlap_ids,
                                     const KnnGraph& graph, double threshold,
                                     std::int64_t min_segment_size) {
  if (!cloud.has_normals())
    throw precondition_error("graph_cut_segments: cloud has no normals");
  if (overlap_ids.empty()) throw empty_input_error("graph_cut_segments: empty overlap");
  if (graph.num_points != cloud.size())
    throw precondition_error("graph_cut_segments: graph was built over a different cloud");

  std::unordered_set<std::int64_t> overlap(overlap_ids.begin(), overlap_ids.end());
  std::vector<bool> in_overlap(static_cast<std::size_t>(cloud.size()), false);
  for (std::int64_t row = 0; row < cloud.size(); ++row)
    in_overlap[static_cast<std::size_t>(row)] = overlap.count(cloud.ids[static_cast<std::size_t>(row)]) > 0;

  std::vector<seg_detail::WeightedEdge> edges;
  edges.reserve(graph.edges.size());
  for (const auto& e : graph.edges) {
    if (!in_overlap[static_cast<std::size_t>(e.source)] || !in_overlap[static_cast<std::size_t>(e.target)])
      continue;
    auto u = e.source, v = e.target;
    auto id_u = cloud.ids[static_cast<std::size_t>(u)], id_v = cloud.ids[static_cast<std::size_t>(v)];
    if (id_u > id_v) {
      std::swap(u, v);
      std::swap(id_u, id_v);
    }
    const double w = 1.0 - dot(cloud.normals[static_cast<std::size_t>(u)],
                               cloud.normals[static_cast<std::size_t>(v)]);
    edges.push_back({w, id_u, id_v, u, v});
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end(),
                          [](const auto& a, const auto& b) { return a.id_u == b.id_u && a.id_v == b.id_v; }),
              edges.end());

  seg_detail::UnionFind uf(cloud.size());
  for (const auto& e : edges) {
    const auto ra = uf.find(e.u), rb = uf.find(e.v);
    if (ra == rb) continue;
    const double ta = uf.internal[static_cast<std::size_t>(ra)] +
                      threshold / static_cast<double>(uf.size[static_cast<std::size_t>(ra)]);
    const double tb = uf.internal[static_cast<std::size_t>(rb)] +
                      threshold / static_cast<double>(uf.size[static_cast<std::size_t>(rb)]);
    if (e.w <= std::min(ta, tb)) uf.unite(ra, rb, e.w);
  }
  for (const auto& e : edges) {
    const auto ra = uf.find(e.u), rb = uf.find(e.v);
    if (ra == rb) continue;
    if (uf.size[static_cast<std::size_t>(ra)] < min_segment_size ||
        uf.size[static_cast<std::size_t>(rb)] < min_segment_size)
      uf.unite(ra, rb, e.w);
  }

  // Index segments by smallest contained original id.
  std::map<std::int64_t, std::vector<std::int64_t>> by_root_min_id;
  {
    std::unordered_map<std::int64_t, std::vector<std::int64_t>> members;  // root -> ids
    for (std::int64_t row = 0; row < cloud.size(); ++row) {
      if (!in_overlap[static_cast<std::size_t>(row)]) continue;
      members[uf.find(row)].push_back(cloud.ids[static_cast<std::size_t>(row)]);
    }
    for (auto& [root, ids] : members) {
      std::sort(ids.begin(), ids.end());
      by_root_min_id[ids.front()] = std::move(ids);
    }
  }

  SegmentMap out;
  for (auto& [_, ids] : by_root_min_id) {
    for (const auto id : ids) out.segment_of[id] = out.count;
    out.sizes.push_back(static_cast<std::int64_t>(ids.size()));
    ++out.count;
  }
  out.validate();
  return out;
}

// Appendix-style external segment masks: text lines "original_id mask_id".
// Mask ids are reindexed to 0..P-1 by first appearance in file order
// (restricted to overlap ids); ids missing from the file are an error.
inline SegmentMap load_external_segments(const std::string& path,
                                         const std::vector<std::int64_t>& overlap_ids) {
  if (overlap_ids.empty()) throw empty_input_error("load_external_segments: empty overlap");
  std::ifstream in(path);
  if (!in) throw io_error("cannot open segment file: " + path);

  std::unordered_set<std::int64_t> overlap(overlap_ids.begin(), overlap_ids.end());
  std::unordered_map<std::int64_t, std::int64_t> mask_index;
  SegmentMap out;
  std::string line;
  int lineno = 0;
  bool any = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    any = true;
    std::istringstream ls(t);
    std::int64_t id, mask;
    if (!(ls >> id >> mask))
      throw parse_error(format("%s:%d: expected 'original_id mask_id'", path.c_str(), lineno));
    if (!overlap.count(id)) continue;
    const auto [it, inserted] = mask_index.try_emplace(mask, out.count);
    if (inserted) {
      out.sizes.push_back(0);
      ++out.count;
    }
    const auto seg = it->second;
    const auto [_, fresh] = out.segment_of.try_emplace(id, seg);
    if (fresh) ++out.sizes[static_cast<std::size_t>(seg)];
  }
  if (!any) throw empty_input_error("segment file is empty: " + path);

  std::vector<std::int64_t> missing;
  for (const auto id : overlap_ids)
    if (!out.segment_of.count(id)) missing.push_back(id);
  if (!missing.empty()) {
    std::sort(missing.begin(), missing.end());
    std::string msg = "segment file " + path + " misses " + std::to_string(missing.size()) +
                      " overlap ids:";
    for (std::size_t i = 0; i < std::min<std::size_t>(10, missing.size()); ++i)
      msg += " " + std::to_string(missing[i]);
    throw precondition_error(msg);
  }
  out.validate();
  return out;
}

inline void save_segments(const SegmentMap& map, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write segment file: " + path);
  for (const auto& [id, seg] : map.segment_of) out << id << " " << seg << "\n";
  if (!out) throw io_error("write failure on segment file: " + path);
}

}  // namespace sgcl
