#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sgcl/common.hpp"
#include "sgcl/pointcloud.hpp"

// Labeled room-scale scene generator. A recipe lists surface primitives
// (floor plane, wall planes, boxes, spheres), each with a semantic class,
// extent and areal point density; scenes are sampled uniformly on the
// primitive surfaces with analytic normals and small Gaussian jitter.
//
// Recipe text format, one statement per line, '#' comments:
//
//   room = 2.4 2.4 1.4            # width depth height (m)
//   jitter_sigma = 0.002          # coordinate noise (m)
//   color_noise = 0.04            # per-point color noise
//   scenes_train = 64             # used by gen-data
//   scenes_test = 16
//   primitive floor class=0 density=140
//   primitive wall class=1 density=140 count=2
//   primitive box class=2 density=260 size=0.25..0.55 count=2
//   primitive sphere class=3 density=260 radius=0.12..0.25 count=2
//
// Densities are points per square meter; box/sphere extents are ranges drawn
// per instance. Placement inside the room is seeded per scene.

namespace sgcl {

enum class PrimitiveKind { Floor, Wall, Box, Sphere };

struct PrimitiveSpec {
  PrimitiveKind kind = PrimitiveKind::Floor;
  std::int32_t class_id = 0;
  double density = 100.0;
  std::int64_t count = 1;
  double size_min = 0.3, size_max = 0.3;      // box edge range (m)
  double radius_min = 0.15, radius_max = 0.15;  // sphere radius range (m)
};

struct SceneRecipe {
  double room_w = 2.4, room_d = 2.4, room_h = 1.4;
  double jitter_sigma = 0.002;
  double color_noise = 0.04;
  std::int64_t scenes_train = 64;
  std::int64_t scenes_test = 16;
  std::vector<PrimitiveSpec> primitives;
};

namespace synth_detail {

inline double parse_num(const std::string& s, const std::string& ctx) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw parse_error("scene recipe: bad number '" + s + "' in " + ctx);
  }
}

inline void parse_range(const std::string& s, double& lo, double& hi, const std::string& ctx) {
  const auto dots = s.find("..");
  if (dots == std::string::npos) {
    lo = hi = parse_num(s, ctx);
  } else {
    lo = parse_num(s.substr(0, dots), ctx);
    hi = parse_num(s.substr(dots + 2), ctx);
  }
  if (hi < lo) throw parse_error("scene recipe: inverted range '" + s + "' in " + ctx);
}

// Pastel per-class base colors. Classes 0/1 (floor/wall) are nearly the same
// gray and box/sphere share one palette, so color alone does not identify
// the class; normals and context have to.
inline Vec3 class_base_color(std::int32_t class_id, std::int64_t variant) {
  switch (class_id % 8) {
    case 0: return {0.48, 0.47, 0.45};
    case 1: return {0.52, 0.51, 0.48};
    case 2:
    case 3: return (variant % 2 == 0) ? Vec3{0.58, 0.25, 0.22} : Vec3{0.22, 0.30, 0.55};
    case 4: return {0.30, 0.55, 0.30};
    case 5: return {0.60, 0.55, 0.25};
    case 6: return {0.45, 0.25, 0.55};
    default: return {0.25, 0.55, 0.55};
  }
}

}  // namespace synth_detail

inline SceneRecipe parse_scene_recipe_text(const std::string& text,
                                           const std::string& origin = "<recipe>") {
  SceneRecipe r;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool any_primitive = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    std::istringstream ls(line);
    std::string head;
    ls >> head;
    if (head == "primitive") {
      PrimitiveSpec p;
      std::string kind;
      ls >> kind;
      if (kind == "floor") p.kind = PrimitiveKind::Floor;
      else if (kind == "wall") p.kind = PrimitiveKind::Wall;
      else if (kind == "box") p.kind = PrimitiveKind::Box;
      else if (kind == "sphere") p.kind = PrimitiveKind::Sphere;
      else
        throw parse_error(format("%s:%d: unknown primitive kind '%s'", origin.c_str(), lineno,
                                 kind.c_str()));
      std::string kvtok;
      while (ls >> kvtok) {
        const auto eq = kvtok.find('=');
        if (eq == std::string::npos)
          throw parse_error(format("%s:%d: expected key=value, got '%s'", origin.c_str(), lineno,
                                   kvtok.c_str()));
        const std::string k = kvtok.substr(0, eq), v = kvtok.substr(eq + 1);
        const std::string ctx = origin + ":" + std::to_string(lineno);
        if (k == "class") p.class_id = static_cast<std::int32_t>(synth_detail::parse_num(v, ctx));
        else if (k == "density") p.density = synth_detail::parse_num(v, ctx);
        else if (k == "count") p.count = static_cast<std::int64_t>(synth_detail::parse_num(v, ctx));
        else if (k == "size") synth_detail::parse_range(v, p.size_min, p.size_max, ctx);
        else if (k == "radius") synth_detail::parse_range(v, p.radius_min, p.radius_max, ctx);
        else
          throw parse_error(format("%s:%d: unknown primitive key '%s'", origin.c_str(), lineno,
                                   k.c_str()));
      }
      if (p.density <= 0)
        throw parse_error(format("%s:%d: density must be positive", origin.c_str(), lineno));
      r.primitives.push_back(p);
      any_primitive = true;
    } else {
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw parse_error(format("%s:%d: expected 'key = value' or 'primitive ...'",
                                 origin.c_str(), lineno));
      const std::string k = trim(line.substr(0, eq));
      const std::string v = trim(line.substr(eq + 1));
      const std::string ctx = origin + ":" + std::to_string(lineno);
      if (k == "room") {
        std::istringstream vs(v);
        if (!(vs >> r.room_w >> r.room_d >> r.room_h))
          throw parse_error(ctx + ": room needs three numbers");
      } else if (k == "jitter_sigma") r.jitter_sigma = synth_detail::parse_num(v, ctx);
      else if (k == "color_noise") r.color_noise = synth_detail::parse_num(v, ctx);
      else if (k == "scenes_train") r.scenes_train = static_cast<std::int64_t>(synth_detail::parse_num(v, ctx));
      else if (k == "scenes_test") r.scenes_test = static_cast<std::int64_t>(synth_detail::parse_num(v, ctx));
      else throw parse_error(ctx + ": unknown recipe key '" + k + "'");
    }
  }
  if (!any_primitive) throw empty_input_error(origin + ": recipe lists no primitives");
  return r;
}

inline SceneRecipe parse_scene_recipe_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open scene recipe: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scene_recipe_text(ss.str(), path);
}

inline SceneRecipe default_room_recipe() {
  return parse_scene_recipe_text(
      "room = 2.4 2.4 1.4\n"
      "jitter_sigma = 0.002\n"
      "color_noise = 0.04\n"
      "primitive floor class=0 density=140\n"
      "primitive wall class=1 density=140 count=2\n"
      "primitive box class=2 density=260 size=0.25..0.55 count=2\n"
      "primitive sphere class=3 density=260 radius=0.12..0.25 count=2\n",
      "<default recipe>");
}

// One scene from a recipe. Deterministic per (seed, recipe): primitives are
// emitted in recipe order; per instance the placement parameters are drawn
// first, then every point draws its surface coordinates, jitter (3 normal
// draws) and color noise (3 normal draws), in that order.
inline PointCloud generate_synthetic_scene(std::uint64_t seed, const SceneRecipe& recipe) {
  if (recipe.primitives.empty()) throw empty_input_error("generate_synthetic_scene: empty recipe");
  Rng rng(mix_seed(seed, 0x5ce9e));

  PointCloud cloud;
  auto emit = [&](const Vec3& pos, const Vec3& normal, const Vec3& base_color,
                  std::int32_t class_id) {
    Vec3 p = pos;
    for (int a = 0; a < 3; ++a) p[a] += rng.normal(0.0, recipe.jitter_sigma);
    Vec3 c = base_color;
    for (int a = 0; a < 3; ++a) c[a] = clamp01(c[a] + rng.normal(0.0, recipe.color_noise));
    cloud.coords.push_back(p);
    cloud.colors.push_back(c);
    cloud.normals.push_back(normal);
    cloud.labels.push_back(class_id);
    cloud.ids.push_back(cloud.size() - 1);
  };

  std::int64_t instance_counter = 0;
  for (const auto& prim : recipe.primitives) {
    for (std::int64_t inst = 0; inst < prim.count; ++inst) {
      const Vec3 base = synth_detail::class_base_color(prim.class_id, instance_counter);
      ++instance_counter;
      switch (prim.kind) {
        case PrimitiveKind::Floor: {
          const double area = recipe.room_w * recipe.room_d;
          const auto n = std::max<std::int64_t>(1, std::llround(area * prim.density));
          for (std::int64_t i = 0; i < n; ++i) {
            const double u = rng.uniform01() * recipe.room_w;
            const double v = rng.uniform01() * recipe.room_d;
            emit({u, v, 0.0}, {0, 0, 1}, base, prim.class_id);
          }
          break;
        }
        case PrimitiveKind::Wall: {
          // Walls take room sides in order: y=0, x=0, y=d, x=w.
          const int side = static_cast<int>(inst % 4);
          const double len = (side % 2 == 0) ? recipe.room_w : recipe.room_d;
          const double area = len * recipe.room_h;
          const auto n = std::max<std::int64_t>(1, std::llround(area * prim.density));
          for (std::int64_t i = 0; i < n; ++i) {
            const double u = rng.uniform01() * len;
            const double v = rng.uniform01() * recipe.room_h;
            Vec3 pos, normal;
            switch (side) {
              case 0: pos = {u, 0.0, v}; normal = {0, 1, 0}; break;
              case 1: pos = {0.0, u, v}; normal = {1, 0, 0}; break;
              case 2: pos = {u, recipe.room_d, v}; normal = {0, -1, 0}; break;
              default: pos = {recipe.room_w, u, v}; normal = {-1, 0, 0}; break;
            }
            emit(pos, normal, base, prim.class_id);
          }
          break;
        }
        case PrimitiveKind::Box: {
          const double sx = rng.uniform(prim.size_min, prim.size_max);
          const double sy = rng.uniform(prim.size_min, prim.size_max);
          const double sz = rng.uniform(prim.size_min, prim.size_max);
          const double cx = rng.uniform(sx / 2, std::max(sx / 2, recipe.room_w - sx / 2));
          const double cy = rng.uniform(sy / 2, std::max(sy / 2, recipe.room_d - sy / 2));
          const Vec3 lo{cx - sx / 2, cy - sy / 2, 0.0};
          // face areas: +x,-x,+y,-y,+z,-z
          const double fa[6] = {sy * sz, sy * sz, sx * sz, sx * sz, sx * sy, sx * sy};
          double area = 0.0;
          for (const double a : fa) area += a;
          const auto n = std::max<std::int64_t>(1, std::llround(area * prim.density));
          for (std::int64_t i = 0; i < n; ++i) {
            double pick = rng.uniform01() * area;
            int face = 0;
            while (face < 5 && pick > fa[face]) pick -= fa[face], ++face;
            const double u = rng.uniform01(), v = rng.uniform01();
            Vec3 pos, normal;
            switch (face) {
              case 0: pos = {lo[0] + sx, lo[1] + u * sy, lo[2] + v * sz}; normal = {1, 0, 0}; break;
              case 1: pos = {lo[0], lo[1] + u * sy, lo[2] + v * sz}; normal = {-1, 0, 0}; break;
              case 2: pos = {lo[0] + u * sx, lo[1] + sy, lo[2] + v * sz}; normal = {0, 1, 0}; break;
              case 3: pos = {lo[0] + u * sx, lo[1], lo[2] + v * sz}; normal = {0, -1, 0}; break;
              case 4: pos = {lo[0] + u * sx, lo[1] + v * sy, lo[2] + sz}; normal = {0, 0, 1}; break;
              default: pos = {lo[0] + u * sx, lo[1] + v * sy, lo[2]}; normal = {0, 0, -1}; break;
            }
            emit(pos, normal, base, prim.class_id);
          }
          break;
        }
        case PrimitiveKind::Sphere: {
          const double r = rng.uniform(prim.radius_min, prim.radius_max);
          const double cx = rng.uniform(r, std::max(r, recipe.room_w - r));
          const double cy = rng.uniform(r, std::max(r, recipe.room_d - r));
          const double cz = rng.uniform(r, std::max(r, recipe.room_h - r));
          const double area = 4.0 * M_PI * r * r;
          const auto n = std::max<std::int64_t>(1, std::llround(area * prim.density));
          for (std::int64_t i = 0; i < n; ++i) {
            const double z = 1.0 - 2.0 * rng.uniform01();
            const double phi = 2.0 * M_PI * rng.uniform01();
            const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
            const Vec3 normal{s * std::cos(phi), s * std::sin(phi), z};
            emit({cx + r * normal[0], cy + r * normal[1], cz + r * normal[2]}, normal,
                 base, prim.class_id);
          }
          break;
        }
      }
    }
  }
  cloud.validate();
  return cloud;
}

}  // namespace sgcl
