#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <unordered_map>
#include <vector>

#include "sgcl/common.hpp"
#include "sgcl/pointcloud.hpp"

// Two-view augmentation pipeline. Steps run in a fixed order; each step
// first draws its probability coin, then (if taken) its parameters, then any
// per-point noise in point order. That draw discipline is what makes a
// seeded pipeline replayable step by step.
//
// Order: z-rotation, x-rotation, y-rotation, x-flip, y-flip, coordinate
// jitter, color brightness/contrast/saturation/hue, color Gaussian noise,
// voxel downsampling, random crop. Original ids ride through every step.

namespace sgcl {

struct AugmentConfig {
  // rotations, in multiples of pi
  double rotate_z_range = 1.0;
  double rotate_z_p = 1.0;
  double rotate_xy_range = 1.0 / 64.0;
  double rotate_xy_p = 1.0;

  double flip_p = 0.5;

  double jitter_sigma = 0.005;
  double jitter_clip = 0.02;
  double jitter_p = 1.0;

  double brightness_ratio = 0.4;
  double brightness_p = 0.8;
  double contrast_ratio = 0.4;
  double contrast_p = 0.8;
  double saturation_ratio = 0.2;
  double saturation_p = 0.8;
  double hue_ratio = 0.02;  // fraction of a full hue cycle
  double hue_p = 0.8;
  double color_gauss_std = 0.05;
  double color_gauss_p = 0.95;

  double voxel_size = 0.02;
  double crop_ratio = 0.6;

  std::int64_t min_overlap = 256;

  void validate() const {
    for (const double p : {rotate_z_p, rotate_xy_p, flip_p, jitter_p, brightness_p, contrast_p,
                           saturation_p, hue_p, color_gauss_p})
      if (p < 0.0 || p > 1.0) throw config_error("augment: probability outside [0,1]");
    if (voxel_size <= 0.0) throw config_error("augment: voxel_size must be positive");
    if (crop_ratio < 0.0 || crop_ratio > 1.0) throw config_error("augment: crop_ratio outside [0,1]");
    if (jitter_sigma < 0.0 || jitter_clip < 0.0) throw config_error("augment: negative jitter");
    if (min_overlap < 1) throw config_error("augment: min_overlap must be >= 1");
  }
};

// Two augmented views of one scene plus the id-matched overlap.
// correspondence[(t)] = (index into view_q, index into view_k) of one shared
// original id; overlap_q / overlap_k are the per-view index sets, ascending.
struct ViewPair {
  PointCloud view_q;
  PointCloud view_k;
  std::vector<std::int64_t> overlap_q;
  std::vector<std::int64_t> overlap_k;
  std::vector<std::pair<std::int64_t, std::int64_t>> correspondence;

  std::vector<std::int64_t> overlap_ids() const {
    std::vector<std::int64_t> ids;
    ids.reserve(correspondence.size());
    for (const auto& [qi, ki] : correspondence)
      ids.push_back(view_q.ids[static_cast<std::size_t>(qi)]);
    return ids;
  }
};

namespace aug_detail {

inline void rotate_about_centroid(PointCloud& c, int axis, double angle) {
  const Vec3 center = c.centroid();
  const double ca = std::cos(angle), sa = std::sin(angle);
  const int u = (axis + 1) % 3, v = (axis + 2) % 3;
  auto rot = [&](Vec3& p, bool translate) {
    Vec3 q = p;
    if (translate) q = q - center;
    const double a = q[u], b = q[v];
    q[u] = ca * a - sa * b;
    q[v] = sa * a + ca * b;
    if (translate) q = q + center;
    p = q;
  };
  for (auto& p : c.coords) rot(p, true);
  for (auto& n : c.normals) rot(n, false);
}

inline void flip_axis(PointCloud& c, int axis) {
  const Vec3 center = c.centroid();
  for (auto& p : c.coords) p[axis] = 2.0 * center[axis] - p[axis];
  for (auto& n : c.normals) n[axis] = -n[axis];
}

inline Vec3 rgb_to_hsv(const Vec3& rgb) {
  const double r = rgb[0], g = rgb[1], b = rgb[2];
  const double mx = std::max({r, g, b}), mn = std::min({r, g, b});
  const double d = mx - mn;
  double h = 0.0;
  if (d > 0.0) {
    if (mx == r) h = std::fmod((g - b) / d, 6.0);
    else if (mx == g) h = (b - r) / d + 2.0;
    else h = (r - g) / d + 4.0;
    h /= 6.0;
    if (h < 0.0) h += 1.0;
  }
  const double s = mx > 0.0 ? d / mx : 0.0;
  return {h, s, mx};
}

inline Vec3 hsv_to_rgb(const Vec3& hsv) {
  const double h = hsv[0] * 6.0, s = hsv[1], v = hsv[2];
  const int i = static_cast<int>(std::floor(h)) % 6;
  const double f = h - std::floor(h);
  const double p = v * (1.0 - s);
  const double q = v * (1.0 - s * f);
  const double t = v * (1.0 - s * (1.0 - f));
  switch (i) {
    case 0: return {v, t, p};
    case 1: return {q, v, p};
    case 2: return {p, v, t};
    case 3: return {p, q, v};
    case 4: return {t, p, v};
    default: return {v, p, q};
  }
}

inline std::int64_t voxel_key_part(double coord, double voxel) {
  return static_cast<std::int64_t>(std::floor(coord / voxel));
}

}  // namespace aug_detail

// One augmented view. Deterministic for a fixed (cloud, seed, cfg).
inline PointCloud augment(const PointCloud& cloud, std::uint64_t seed, const AugmentConfig& cfg) {
  if (cloud.size() == 0) throw empty_input_error("augment: empty cloud");
  cfg.validate();
  Rng rng(mix_seed(seed, 0xa06));
  PointCloud c = cloud;

  if (rng.coin(cfg.rotate_z_p))
    aug_detail::rotate_about_centroid(c, 2, rng.uniform(-cfg.rotate_z_range * M_PI,
                                                        cfg.rotate_z_range * M_PI));
  if (rng.coin(cfg.rotate_xy_p))
    aug_detail::rotate_about_centroid(c, 0, rng.uniform(-cfg.rotate_xy_range * M_PI,
                                                        cfg.rotate_xy_range * M_PI));
  if (rng.coin(cfg.rotate_xy_p))
    aug_detail::rotate_about_centroid(c, 1, rng.uniform(-cfg.rotate_xy_range * M_PI,
                                                        cfg.rotate_xy_range * M_PI));
  if (rng.coin(cfg.flip_p)) aug_detail::flip_axis(c, 0);
  if (rng.coin(cfg.flip_p)) aug_detail::flip_axis(c, 1);

  if (rng.coin(cfg.jitter_p) && cfg.jitter_sigma > 0.0) {
    for (auto& p : c.coords)
      for (int a = 0; a < 3; ++a)
        p[a] += std::clamp(rng.normal(0.0, cfg.jitter_sigma), -cfg.jitter_clip, cfg.jitter_clip);
  }

  if (rng.coin(cfg.brightness_p)) {
    const double f = rng.uniform(std::max(0.0, 1.0 - cfg.brightness_ratio),
                                 1.0 + cfg.brightness_ratio);
    for (auto& col : c.colors)
      for (int a = 0; a < 3; ++a) col[a] = clamp01(col[a] * f);
  }
  if (rng.coin(cfg.contrast_p)) {
    const double f = rng.uniform(std::max(0.0, 1.0 - cfg.contrast_ratio), 1.0 + cfg.contrast_ratio);
    double mean = 0.0;
    for (const auto& col : c.colors) mean += (col[0] + col[1] + col[2]) / 3.0;
    mean /= static_cast<double>(c.size());
    for (auto& col : c.colors)
      for (int a = 0; a < 3; ++a) col[a] = clamp01(mean + f * (col[a] - mean));
  }
  if (rng.coin(cfg.saturation_p)) {
    const double f = rng.uniform(std::max(0.0, 1.0 - cfg.saturation_ratio),
                                 1.0 + cfg.saturation_ratio);
    for (auto& col : c.colors) {
      const double gray = (col[0] + col[1] + col[2]) / 3.0;
      for (int a = 0; a < 3; ++a) col[a] = clamp01(gray + f * (col[a] - gray));
    }
  }
  if (rng.coin(cfg.hue_p)) {
    const double shift = rng.uniform(-cfg.hue_ratio, cfg.hue_ratio);
    for (auto& col : c.colors) {
      Vec3 hsv = aug_detail::rgb_to_hsv(col);
      hsv[0] = hsv[0] + shift;
      hsv[0] -= std::floor(hsv[0]);
      col = aug_detail::hsv_to_rgb(hsv);
      for (int a = 0; a < 3; ++a) col[a] = clamp01(col[a]);
    }
  }
  if (rng.coin(cfg.color_gauss_p) && cfg.color_gauss_std > 0.0) {
    for (auto& col : c.colors)
      for (int a = 0; a < 3; ++a) col[a] = clamp01(col[a] + rng.normal(0.0, cfg.color_gauss_std));
  }

  // Voxel downsample: one representative per occupied voxel, the point with
  // the smallest original id, so cross-view correspondence stays exact.
  {
    std::map<std::array<std::int64_t, 3>, std::int64_t> best;  // voxel -> row
    for (std::int64_t i = 0; i < c.size(); ++i) {
      const auto s = static_cast<std::size_t>(i);
      const std::array<std::int64_t, 3> key = {
          aug_detail::voxel_key_part(c.coords[s][0], cfg.voxel_size),
          aug_detail::voxel_key_part(c.coords[s][1], cfg.voxel_size),
          aug_detail::voxel_key_part(c.coords[s][2], cfg.voxel_size)};
      const auto it = best.find(key);
      if (it == best.end() || c.ids[s] < c.ids[static_cast<std::size_t>(it->second)])
        best[key] = i;
    }
    std::vector<std::int64_t> keep;
    keep.reserve(best.size());
    for (const auto& [_, row] : best) keep.push_back(row);
    std::sort(keep.begin(), keep.end());
    c = c.subset(keep);
  }

  // Crop: keep the `ratio` fraction nearest a seeded interior point under
  // the bbox-scaled Chebyshev metric, i.e. an axis-aligned box grown around
  // that point until the target count is inside.
  {
    const auto m = c.size();
    const auto target = static_cast<std::int64_t>(std::llround(cfg.crop_ratio * static_cast<double>(m)));
    for (int attempt = 0;; ++attempt) {
      if (attempt >= 8)
        throw error("augment: crop produced zero points after 8 attempts");
      const auto center_row = rng.uniform_int(m);
      if (target <= 0) continue;
      if (target >= m) break;  // crop keeps everything
      Vec3 lo = c.coords[0], hi = c.coords[0];
      for (const auto& p : c.coords)
        for (int a = 0; a < 3; ++a) {
          lo[a] = std::min(lo[a], p[a]);
          hi[a] = std::max(hi[a], p[a]);
        }
      Vec3 scale;
      for (int a = 0; a < 3; ++a) scale[a] = std::max(1e-12, (hi[a] - lo[a]) * 0.5);
      const Vec3 center = c.coords[static_cast<std::size_t>(center_row)];
      std::vector<std::pair<double, std::int64_t>> dist(static_cast<std::size_t>(m));
      for (std::int64_t i = 0; i < m; ++i) {
        const auto s = static_cast<std::size_t>(i);
        double d = 0.0;
        for (int a = 0; a < 3; ++a)
          d = std::max(d, std::abs(c.coords[s][a] - center[a]) / scale[a]);
        dist[s] = {d, i};
      }
      std::nth_element(dist.begin(), dist.begin() + (target - 1), dist.end());
      std::sort(dist.begin(), dist.begin() + target);
      std::vector<std::int64_t> keep;
      keep.reserve(static_cast<std::size_t>(target));
      for (std::int64_t t = 0; t < target; ++t) keep.push_back(dist[static_cast<std::size_t>(t)].second);
      std::sort(keep.begin(), keep.end());
      c = c.subset(keep);
      break;
    }
  }

  return c;
}

// Index pairs of points sharing an original id, ordered by that id.
inline std::vector<std::pair<std::int64_t, std::int64_t>> match_by_id(const PointCloud& a,
                                                                      const PointCloud& b) {
  std::unordered_map<std::int64_t, std::int64_t> b_index;
  b_index.reserve(static_cast<std::size_t>(b.size()));
  for (std::int64_t i = 0; i < b.size(); ++i) b_index[b.ids[static_cast<std::size_t>(i)]] = i;

  std::vector<std::pair<std::int64_t, std::pair<std::int64_t, std::int64_t>>> by_id;
  for (std::int64_t ai = 0; ai < a.size(); ++ai) {
    const auto id = a.ids[static_cast<std::size_t>(ai)];
    const auto it = b_index.find(id);
    if (it != b_index.end()) by_id.push_back({id, {ai, it->second}});
  }
  std::sort(by_id.begin(), by_id.end());
  std::vector<std::pair<std::int64_t, std::int64_t>> out;
  out.reserve(by_id.size());
  for (const auto& [_, pair] : by_id) out.push_back(pair);
  return out;
}

// Builds V_q and V_k with derived sub-seeds and matches the overlap by
// original id. Regenerates up to 8 times if the overlap is below
// cfg.min_overlap, then reports the scene.
inline ViewPair make_view_pair(const PointCloud& cloud, std::uint64_t seed,
                               const AugmentConfig& cfg, const std::string& scene_name = "") {
  if (cloud.size() == 0) throw empty_input_error("make_view_pair: empty cloud");
  for (int attempt = 0; attempt < 8; ++attempt) {
    ViewPair vp;
    vp.view_q = augment(cloud, mix_seed(seed, static_cast<std::uint64_t>(attempt), 0), cfg);
    vp.view_k = augment(cloud, mix_seed(seed, static_cast<std::uint64_t>(attempt), 1), cfg);
    vp.correspondence = match_by_id(vp.view_q, vp.view_k);
    if (static_cast<std::int64_t>(vp.correspondence.size()) < cfg.min_overlap) continue;

    vp.overlap_q.reserve(vp.correspondence.size());
    vp.overlap_k.reserve(vp.correspondence.size());
    for (const auto& [qi, ki] : vp.correspondence) {
      vp.overlap_q.push_back(qi);
      vp.overlap_k.push_back(ki);
    }
    std::sort(vp.overlap_q.begin(), vp.overlap_q.end());
    std::sort(vp.overlap_k.begin(), vp.overlap_k.end());
    return vp;
  }
  throw error("make_view_pair: overlap below min_overlap=" + std::to_string(cfg.min_overlap) +
              " after 8 attempts" + (scene_name.empty() ? "" : " for scene " + scene_name));
}

}  // namespace sgcl
