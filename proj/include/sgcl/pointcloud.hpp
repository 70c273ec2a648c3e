#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <unordered_set>
#include <vector>

#include "sgcl/common.hpp"

namespace sgcl {

using Vec3 = std::array<double, 3>;

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator*(const Vec3& a, double s) { return {a[0] * s, a[1] * s, a[2] * s}; }
inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline double dist_sq(const Vec3& a, const Vec3& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return dx * dx + dy * dy + dz * dz;
}
inline Vec3 normalized(const Vec3& a) {
  const double n = norm(a);
  if (n < 1e-300) return {0.0, 0.0, 0.0};
  return a * (1.0 / n);
}

// A point set with stable per-point identifiers. Augmentation filters points
// but carries ids through, so views of one scene can be matched afterwards.
// normals/labels are optional (empty when absent).
struct PointCloud {
  std::vector<Vec3> coords;
  std::vector<Vec3> colors;
  std::vector<Vec3> normals;
  std::vector<std::int64_t> ids;
  std::vector<std::int32_t> labels;

  std::int64_t size() const { return static_cast<std::int64_t>(coords.size()); }
  bool has_normals() const { return !normals.empty(); }
  bool has_labels() const { return !labels.empty(); }

  void validate() const {
    const auto m = coords.size();
    if (m == 0) throw empty_input_error("point cloud is empty");
    if (colors.size() != m || ids.size() != m)
      throw dimension_error("point cloud field lengths disagree");
    if (!normals.empty() && normals.size() != m)
      throw dimension_error("point cloud normals length disagrees");
    if (!labels.empty() && labels.size() != m)
      throw dimension_error("point cloud labels length disagrees");
    std::unordered_set<std::int64_t> seen;
    seen.reserve(m);
    for (const auto id : ids) {
      if (id < 0) throw precondition_error("point ids must be non-negative");
      if (!seen.insert(id).second)
        throw precondition_error("duplicate point id " + std::to_string(id));
    }
    for (const auto& n : normals)
      if (std::abs(norm(n) - 1.0) > 1e-6)
        throw precondition_error("normal is not unit length");
  }

  // Row subset, preserving order. Indices must be valid.
  PointCloud subset(const std::vector<std::int64_t>& rows) const {
    PointCloud out;
    out.coords.reserve(rows.size());
    out.colors.reserve(rows.size());
    out.ids.reserve(rows.size());
    if (has_normals()) out.normals.reserve(rows.size());
    if (has_labels()) out.labels.reserve(rows.size());
    for (const auto r : rows) {
      out.coords.push_back(coords[static_cast<std::size_t>(r)]);
      out.colors.push_back(colors[static_cast<std::size_t>(r)]);
      out.ids.push_back(ids[static_cast<std::size_t>(r)]);
      if (has_normals()) out.normals.push_back(normals[static_cast<std::size_t>(r)]);
      if (has_labels()) out.labels.push_back(labels[static_cast<std::size_t>(r)]);
    }
    return out;
  }

  Vec3 centroid() const {
    Vec3 c{0, 0, 0};
    for (const auto& p : coords) c = c + p;
    return c * (1.0 / static_cast<double>(size()));
  }
};

}  // namespace sgcl
