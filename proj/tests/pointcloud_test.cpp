#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "oracle.hpp"
#include "sgcl/knn.hpp"
#include "sgcl/normals.hpp"
#include "sgcl/ply.hpp"
#include "sgcl/synthetic.hpp"

using namespace sgcl;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  const auto path = (std::filesystem::temp_directory_path() / name).string();
  std::ofstream out(path, std::ios::binary);
  out << content;
  return path;
}

// Brute-force reference: full sort of all other points by (distance, index).
std::vector<std::int64_t> knn_oracle(const PointCloud& cloud, std::int64_t i, std::int64_t k) {
  std::vector<std::pair<double, std::int64_t>> all;
  for (std::int64_t j = 0; j < cloud.size(); ++j)
    if (j != i)
      all.emplace_back(dist_sq(cloud.coords[static_cast<std::size_t>(i)],
                               cloud.coords[static_cast<std::size_t>(j)]),
                       j);
  std::sort(all.begin(), all.end());
  std::vector<std::int64_t> out;
  for (std::int64_t t = 0; t < std::min<std::int64_t>(k, static_cast<std::int64_t>(all.size())); ++t)
    out.push_back(all[static_cast<std::size_t>(t)].second);
  return out;
}

PointCloud random_cloud(Rng& rng, std::int64_t m) {
  PointCloud c;
  for (std::int64_t i = 0; i < m; ++i) {
    c.coords.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
    c.colors.push_back({0.5, 0.5, 0.5});
    c.ids.push_back(i);
  }
  return c;
}

}  // namespace

TEST_CASE("ply loading", "[pointcloud]") {
  SECTION("vertices without color get the 0.5 fill") {
    const auto path = write_temp("sgcl_nocolor.ply",
                                 "ply\nformat ascii 1.0\nelement vertex 3\n"
                                 "property float x\nproperty float y\nproperty float z\n"
                                 "end_header\n0 0 0\n1 0 0\n0 1 0\n");
    const PointCloud c = load_ply(path);
    REQUIRE(c.size() == 3);
    for (const auto& col : c.colors)
      for (const double v : col) CHECK(v == 0.5);
    CHECK(c.ids == std::vector<std::int64_t>{0, 1, 2});
  }
  SECTION("uchar colors scale to [0,1]") {
    const auto path = write_temp("sgcl_color.ply",
                                 "ply\nformat ascii 1.0\nelement vertex 1\n"
                                 "property float x\nproperty float y\nproperty float z\n"
                                 "property uchar red\nproperty uchar green\nproperty uchar blue\n"
                                 "end_header\n1 2 3 255 0 0\n");
    const PointCloud c = load_ply(path);
    CHECK(c.coords[0] == Vec3{1.0, 2.0, 3.0});
    CHECK(c.colors[0] == Vec3{1.0, 0.0, 0.0});
  }
  SECTION("malformed header names the offending line") {
    const auto path = write_temp("sgcl_bad.ply",
                                 "ply\nformat ascii 1.0\nelement vertex notanumber\nend_header\n");
    CHECK_THROWS_MATCHES(load_ply(path), parse_error,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring(":3:")));
  }
  SECTION("zero vertices is an empty-input error") {
    const auto path = write_temp("sgcl_empty.ply",
                                 "ply\nformat ascii 1.0\nelement vertex 0\n"
                                 "property float x\nproperty float y\nproperty float z\n"
                                 "end_header\n");
    CHECK_THROWS_AS(load_ply(path), empty_input_error);
  }
  SECTION("reference fixture matches the independent reader") {
    // Frozen values produced once by a struct-based Python reader over the
    // committed fixture bytes.
    const PointCloud c = load_ply(std::string(TEST_DATA_DIR) + "/fixture_1000.ply");
    REQUIRE(c.size() == 1000);
    Vec3 lo = c.coords[0], hi = c.coords[0];
    for (const auto& p : c.coords)
      for (int a = 0; a < 3; ++a) {
        lo[a] = std::min(lo[a], p[a]);
        hi[a] = std::max(hi[a], p[a]);
      }
    CHECK(lo[0] == Catch::Approx(-1.9988693).margin(1e-6));
    CHECK(lo[1] == Catch::Approx(-0.998689055).margin(1e-6));
    CHECK(lo[2] == Catch::Approx(0.00567380991).margin(1e-6));
    CHECK(hi[0] == Catch::Approx(2.99776506).margin(1e-6));
    CHECK(hi[1] == Catch::Approx(1.49775493).margin(1e-6));
    CHECK(hi[2] == Catch::Approx(2.49790931).margin(1e-6));
    double checksum = 0.0;
    for (const auto& col : c.colors) checksum += col[0] + 2.0 * col[1] + 3.0 * col[2];
    CHECK(checksum == Catch::Approx(3036.89803922).margin(1e-6));
    REQUIRE(c.has_normals());
    for (const auto& n : c.normals) CHECK(norm(n) == Catch::Approx(1.0).margin(1e-9));
  }
  SECTION("binary round trip preserves coords, labels and extra channels") {
    Rng rng(3);
    PointCloud c = random_cloud(rng, 50);
    c.labels.assign(50, 0);
    for (std::int64_t i = 0; i < 50; ++i) c.labels[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(i % 4);
    std::vector<double> sim(50);
    for (auto& v : sim) v = rng.uniform(-1, 1);
    const auto path = (std::filesystem::temp_directory_path() / "sgcl_rt.ply").string();
    save_ply(c, path, true, {{"similarity", sim}});
    const LoadedPly back = load_ply_full(path);
    REQUIRE(back.cloud.size() == 50);
    for (std::int64_t i = 0; i < 50; ++i) {
      const auto s = static_cast<std::size_t>(i);
      CHECK(back.cloud.coords[s][0] == c.coords[s][0]);  // doubles survive bit-exact
      CHECK(back.cloud.labels[s] == c.labels[s]);
      CHECK(back.extras.at("similarity")[s] == Catch::Approx(sim[s]).margin(1e-6));
    }
  }
}

TEST_CASE("synthetic scenes", "[pointcloud]") {
  SECTION("single floor at density 100 gives 400 labeled points") {
    const SceneRecipe r = parse_scene_recipe_text(
        "room = 2 2 1\nprimitive floor class=0 density=100\njitter_sigma = 0.002\n");
    const PointCloud c = generate_synthetic_scene(1, r);
    REQUIRE(c.size() == 400);
    for (const auto lab : c.labels) CHECK(lab == 0);
    for (const auto& n : c.normals) CHECK(n == Vec3{0, 0, 1});
    for (const auto& p : c.coords) CHECK(std::abs(p[2]) < 0.02);  // jitter only
  }
  SECTION("same seed reproduces the scene bit-exactly") {
    const SceneRecipe r = default_room_recipe();
    const PointCloud a = generate_synthetic_scene(42, r);
    const PointCloud b = generate_synthetic_scene(42, r);
    REQUIRE(a.size() == b.size());
    CHECK(a.coords == b.coords);
    CHECK(a.colors == b.colors);
    CHECK(a.labels == b.labels);
    const PointCloud other = generate_synthetic_scene(43, r);
    CHECK(a.coords != other.coords);
  }
  SECTION("class histogram is area proportional") {
    // Fixed extents so the expected counts can be derived independently.
    const SceneRecipe r = parse_scene_recipe_text(
        "room = 2.4 2.4 1.4\n"
        "primitive floor class=0 density=140\n"
        "primitive wall class=1 density=140 count=2\n"
        "primitive box class=2 density=260 size=0.4..0.4 count=2\n"
        "primitive sphere class=3 density=260 radius=0.2..0.2 count=2\n");
    const PointCloud c = generate_synthetic_scene(7, r);
    std::map<int, std::int64_t> hist;
    for (const auto lab : c.labels) hist[lab]++;
    // Independent expected counts: area * density per instance.
    const double expected[4] = {
        2.4 * 2.4 * 140.0,
        2.0 * (2.4 * 1.4 * 140.0),
        2.0 * (6.0 * 0.4 * 0.4 * 260.0),
        2.0 * (4.0 * M_PI * 0.2 * 0.2 * 260.0),
    };
    for (int cls = 0; cls < 4; ++cls) {
      const double actual = static_cast<double>(hist[cls]);
      CHECK(std::abs(actual - expected[cls]) / expected[cls] < 0.05);
    }
  }
  SECTION("empty recipe rejected") {
    CHECK_THROWS_AS(parse_scene_recipe_text("room = 2 2 1\n"), empty_input_error);
  }
}

TEST_CASE("knn graph", "[pointcloud]") {
  SECTION("collinear tie breaks to the smaller index") {
    PointCloud c;
    c.coords = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
    c.colors.assign(3, {0.5, 0.5, 0.5});
    c.ids = {0, 1, 2};
    const KnnGraph g = knn_graph(c, 1);
    CHECK(g.neighbors(1)[0].target == 0);  // both endpoints at distance 1
    CHECK(g.neighbors(0)[0].target == 1);
    CHECK(g.neighbors(2)[0].target == 1);
  }
  SECTION("k saturates at M-1") {
    Rng rng(5);
    const PointCloud c = random_cloud(rng, 6);
    const KnnGraph g = knn_graph(c, 50);
    CHECK(g.k == 5);
    for (std::int64_t i = 0; i < 6; ++i) {
      std::set<std::int64_t> targets;
      for (std::int64_t t = 0; t < g.k; ++t) {
        CHECK(g.neighbors(i)[t].target != i);
        targets.insert(g.neighbors(i)[t].target);
      }
      CHECK(targets.size() == 5);
    }
  }
  SECTION("matches the brute-force oracle on random instances") {
    Rng rng(17);
    for (const std::int64_t m : {20, 113, 200}) {
      const PointCloud c = random_cloud(rng, m);
      const std::int64_t k = 8;
      const KnnGraph g = knn_graph(c, k);
      for (std::int64_t i = 0; i < m; ++i) {
        const auto expected = knn_oracle(c, i, k);
        for (std::int64_t t = 0; t < g.k; ++t)
          CHECK(g.neighbors(i)[t].target == expected[static_cast<std::size_t>(t)]);
      }
    }
  }
  SECTION("fewer than two points rejected") {
    Rng rng(1);
    CHECK_THROWS_AS(knn_graph(random_cloud(rng, 1), 1), empty_input_error);
  }
}

TEST_CASE("normal estimation", "[pointcloud]") {
  SECTION("plane z=0 gives (0,0,1)") {
    Rng rng(23);
    PointCloud c;
    for (std::int64_t i = 0; i < 60; ++i) {
      c.coords.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), 0.0});
      c.colors.push_back({0.5, 0.5, 0.5});
      c.ids.push_back(i);
    }
    const PointCloud out = estimate_normals(c, knn_graph(c, 8));
    for (const auto& n : out.normals) {
      CHECK(n[2] == Catch::Approx(1.0).margin(1e-9));
    }
  }
  SECTION("plane x=0 gives (1,0,0) after the sign convention") {
    Rng rng(29);
    PointCloud c;
    for (std::int64_t i = 0; i < 60; ++i) {
      c.coords.push_back({0.0, rng.uniform(-1, 1), rng.uniform(-1, 1)});
      c.colors.push_back({0.5, 0.5, 0.5});
      c.ids.push_back(i);
    }
    const PointCloud out = estimate_normals(c, knn_graph(c, 8));
    for (const auto& n : out.normals) CHECK(n[0] == Catch::Approx(1.0).margin(1e-9));
  }
  SECTION("noisy sphere normals stay within 10 degrees of radial") {
    const SceneRecipe r = parse_scene_recipe_text(
        "room = 2 2 2\njitter_sigma = 0.002\n"
        "primitive sphere class=0 density=900 radius=0.5..0.5\n");
    const PointCloud c = generate_synthetic_scene(11, r);
    const PointCloud est = estimate_normals(c, knn_graph(c, 16));
    double total_deg = 0.0;
    for (std::int64_t i = 0; i < c.size(); ++i) {
      const auto s = static_cast<std::size_t>(i);
      const double d = std::abs(dot(est.normals[s], c.normals[s]));
      total_deg += std::acos(std::min(1.0, d)) * 180.0 / M_PI;
    }
    CHECK(total_deg / static_cast<double>(c.size()) < 10.0);
  }
  SECTION("rotating the cloud rotates the normals") {
    const SceneRecipe r = parse_scene_recipe_text(
        "room = 2 2 2\njitter_sigma = 0.001\n"
        "primitive sphere class=0 density=500 radius=0.5..0.5\n");
    PointCloud c = generate_synthetic_scene(31, r);
    const PointCloud base = estimate_normals(c, knn_graph(c, 12));
    const double a = 0.7;
    const double R[3][3] = {{std::cos(a), -std::sin(a), 0},
                            {std::sin(a), std::cos(a), 0},
                            {0, 0, 1}};
    PointCloud rotated = c;
    for (auto& p : rotated.coords) {
      const Vec3 q = p;
      for (int row = 0; row < 3; ++row)
        p[row] = R[row][0] * q[0] + R[row][1] * q[1] + R[row][2] * q[2];
    }
    const PointCloud rot_est = estimate_normals(rotated, knn_graph(rotated, 12));
    for (std::int64_t i = 0; i < c.size(); ++i) {
      const auto s = static_cast<std::size_t>(i);
      Vec3 rn;
      for (int row = 0; row < 3; ++row)
        rn[row] = R[row][0] * base.normals[s][0] + R[row][1] * base.normals[s][1] +
                  R[row][2] * base.normals[s][2];
      CHECK(std::abs(dot(rn, rot_est.normals[s])) == Catch::Approx(1.0).margin(1e-5));
    }
  }
  SECTION("collinear neighborhoods are degenerate") {
    PointCloud c;
    for (std::int64_t i = 0; i < 8; ++i) {
      c.coords.push_back({static_cast<double>(i), 0.0, 0.0});
      c.colors.push_back({0.5, 0.5, 0.5});
      c.ids.push_back(i);
    }
    std::vector<std::int64_t> degenerate;
    const PointCloud out = estimate_normals(c, knn_graph(c, 4), &degenerate);
    CHECK(degenerate.size() == 8);
    for (const auto& n : out.normals) CHECK(n == Vec3{0, 0, 1});
  }
}
