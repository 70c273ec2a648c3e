#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "sgcl/knn.hpp"
#include "sgcl/pointcloud.hpp"

namespace sgcl {

namespace detail {

// Eigen-decomposition of a symmetric 3x3 matrix by cyclic Jacobi rotations.
// Returns eigenvalues ascending with matching unit eigenvectors (rows of V).
struct Eig3 {
  std::array<double, 3> values;
  std::array<Vec3, 3> vectors;
};

inline Eig3 symmetric_eig3(std::array<std::array<double, 3>, 3> a) {
  std::array<std::array<double, 3>, 3> v = {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  for (int sweep = 0; sweep < 64; ++sweep) {
    const double off = std::abs(a[0][1]) + std::abs(a[0][2]) + std::abs(a[1][2]);
    if (off < 1e-300) break;
    const double scale = std::abs(a[0][0]) + std::abs(a[1][1]) + std::abs(a[2][2]) + off;
    if (off <= 1e-15 * scale) break;
    for (int p = 0; p < 2; ++p)
      for (int q = p + 1; q < 3; ++q) {
        if (a[p][q] == 0.0) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int r = 0; r < 3; ++r) {
          const double arp = a[r][p], arq = a[r][q];
          a[r][p] = c * arp - s * arq;
          a[r][q] = s * arp + c * arq;
        }
        for (int r = 0; r < 3; ++r) {
          const double apr = a[p][r], aqr = a[q][r];
          a[p][r] = c * apr - s * aqr;
          a[q][r] = s * apr + c * aqr;
        }
        for (int r = 0; r < 3; ++r) {
          const double vrp = v[r][p], vrq = v[r][q];
          v[r][p] = c * vrp - s * vrq;
          v[r][q] = s * vrp + c * vrq;
        }
      }
  }
  std::array<int, 3> order = {0, 1, 2};
  std::sort(order.begin(), order.end(), [&](int i, int j) { return a[i][i] < a[j][j]; });
  Eig3 out;
  for (int i = 0; i < 3; ++i) {
    out.values[static_cast<std::size_t>(i)] = a[order[static_cast<std::size_t>(i)]][order[static_cast<std::size_t>(i)]];
    out.vectors[static_cast<std::size_t>(i)] = {v[0][order[static_cast<std::size_t>(i)]],
                                                v[1][order[static_cast<std::size_t>(i)]],
                                                v[2][order[static_cast<std::size_t>(i)]]};
  }
  return out;
}

}  // namespace detail

// Fixes the sign so the first nonzero of (z, y, x) is positive. Segmentation
// weights depend on the dot of neighboring normals, so a deterministic
// convention keeps partitions reproducible.
inline Vec3 canonical_normal_sign(Vec3 n) {
  if (n[2] > 0) return n;
  if (n[2] < 0) return n * -1.0;
  if (n[1] > 0) return n;
  if (n[1] < 0) return n * -1.0;
  if (n[0] < 0) return n * -1.0;
  return n;
}

// PCA normal per point: eigenvector of the neighborhood covariance with the
// smallest eigenvalue. Neighborhood = the point plus its graph neighbors.
// Rank-deficient neighborhoods (collinear or too small) get (0,0,1) and are
// appended to *degenerate when given. Existing normals are overwritten.
inline PointCloud estimate_normals(const PointCloud& cloud, const KnnGraph& graph,
                                   std::vector<std::int64_t>* degenerate = nullptr) {
  if (graph.num_points != cloud.size())
    throw precondition_error("estimate_normals: graph was built over a different cloud");
  if (graph.k < 3) throw precondition_error("estimate_normals: need k >= 3 neighbors");

  PointCloud out = cloud;
  out.normals.assign(static_cast<std::size_t>(cloud.size()), Vec3{0, 0, 1});

  std::vector<Vec3> nbhd;
  for (std::int64_t i = 0; i < cloud.size(); ++i) {
    nbhd.clear();
    nbhd.push_back(cloud.coords[static_cast<std::size_t>(i)]);
    const KnnEdge* es = graph.neighbors(i);
    for (std::int64_t t = 0; t < graph.k; ++t)
      nbhd.push_back(cloud.coords[static_cast<std::size_t>(es[t].target)]);

    Vec3 mean{0, 0, 0};
    for (const auto& p : nbhd) mean = mean + p;
    mean = mean * (1.0 / static_cast<double>(nbhd.size()));

    std::array<std::array<double, 3>, 3> cov = {{{0, 0, 0}, {0, 0, 0}, {0, 0, 0}}};
    for (const auto& p : nbhd) {
      const Vec3 d = p - mean;
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) cov[r][c] += d[r] * d[c];
    }

    const auto eig = detail::symmetric_eig3(cov);
    const double l_max = eig.values[2], l_mid = eig.values[1];
    if (l_max <= 1e-300 || l_mid <= 1e-9 * l_max) {
      if (degenerate) degenerate->push_back(i);
      continue;  // keep (0,0,1)
    }
    out.normals[static_cast<std::size_t>(i)] = canonical_normal_sign(normalized(eig.vectors[0]));
  }
  return out;
}

}  // namespace sgcl
