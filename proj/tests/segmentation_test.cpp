#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <set>

#include "reference_fh.hpp"
#include "sgcl/knn.hpp"
#include "sgcl/segmentation.hpp"
#include "sgcl/synthetic.hpp"

using namespace sgcl;

namespace {

std::vector<std::int64_t> all_ids(const PointCloud& c) { return c.ids; }

// Partition as a canonical set of id-sets for order-independent comparison.
std::set<std::vector<std::int64_t>> as_id_sets(const SegmentMap& m) {
  std::map<std::int64_t, std::vector<std::int64_t>> groups;
  for (const auto& [id, seg] : m.segment_of) groups[seg].push_back(id);
  std::set<std::vector<std::int64_t>> out;
  for (auto& [_, ids] : groups) {
    std::sort(ids.begin(), ids.end());
    out.insert(ids);
  }
  return out;
}

PointCloud two_orthogonal_patches() {
  PointCloud c;
  Rng rng(40);
  for (std::int64_t i = 0; i < 40; ++i) {  // z=0 plane
    c.coords.push_back({rng.uniform(0, 1), rng.uniform(0, 1), 0.0});
    c.normals.push_back({0, 0, 1});
  }
  for (std::int64_t i = 0; i < 40; ++i) {  // x=0 plane
    c.coords.push_back({0.0, rng.uniform(0, 1), rng.uniform(-1.2, -0.2)});
    c.normals.push_back({1, 0, 0});
  }
  c.colors.assign(80, {0.5, 0.5, 0.5});
  for (std::int64_t i = 0; i < 80; ++i) c.ids.push_back(i);
  return c;
}

}  // namespace

TEST_CASE("graph cut on uniform normals yields one segment", "[segmentation]") {
  Rng rng(2);
  PointCloud c;
  for (std::int64_t i = 0; i < 50; ++i) {
    c.coords.push_back({rng.uniform(0, 1), rng.uniform(0, 1), 0.0});
    c.colors.push_back({0.5, 0.5, 0.5});
    c.normals.push_back({0, 0, 1});
    c.ids.push_back(i);
  }
  const SegmentMap m = graph_cut_segments(c, all_ids(c), knn_graph(c, 8), 0.05, 1);
  CHECK(m.count == 1);
  CHECK(m.sizes == std::vector<std::int64_t>{50});
}

TEST_CASE("orthogonal patches split at the seam", "[segmentation]") {
  const PointCloud c = two_orthogonal_patches();
  const SegmentMap m = graph_cut_segments(c, all_ids(c), knn_graph(c, 6), 0.05, 5);
  REQUIRE(m.count == 2);
  for (std::int64_t id = 0; id < 40; ++id) CHECK(m.at(id) == 0);
  for (std::int64_t id = 40; id < 80; ++id) CHECK(m.at(id) == 1);
}

TEST_CASE("graph cut matches the reference implementation", "[segmentation]") {
  SceneRecipe recipe = default_room_recipe();
  for (auto& p : recipe.primitives) p.density = 60;
  for (const std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    PointCloud c = generate_synthetic_scene(seed, recipe);
    const KnnGraph g = knn_graph(c, 16);
    const SegmentMap mine = graph_cut_segments(c, all_ids(c), g, 0.1, 20);
    const auto ref = reference_fh::partition(c, all_ids(c), g, 0.1, 20);
    REQUIRE(mine.count == static_cast<std::int64_t>(ref.size()));
    // reference is ordered by smallest contained id, like SegmentMap
    for (std::int64_t seg = 0; seg < mine.count; ++seg)
      for (const auto id : ref[static_cast<std::size_t>(seg)]) CHECK(mine.at(id) == seg);
  }
}

TEST_CASE("raising the threshold never increases the segment count", "[segmentation]") {
  SceneRecipe recipe = default_room_recipe();
  for (auto& p : recipe.primitives) p.density = 50;
  const PointCloud c = generate_synthetic_scene(5, recipe);
  const KnnGraph g = knn_graph(c, 12);
  std::int64_t prev = std::numeric_limits<std::int64_t>::max();
  for (const double threshold : {0.01, 0.05, 0.1, 0.3, 1.0, 3.0}) {
    const SegmentMap m = graph_cut_segments(c, all_ids(c), g, threshold, 1);
    CHECK(m.count <= prev);
    prev = m.count;
  }
}

TEST_CASE("permuting point order leaves the partition unchanged", "[segmentation]") {
  SceneRecipe recipe = default_room_recipe();
  for (auto& p : recipe.primitives) p.density = 40;
  const PointCloud c = generate_synthetic_scene(6, recipe);
  const SegmentMap base = graph_cut_segments(c, all_ids(c), knn_graph(c, 10), 0.1, 10);

  std::vector<std::int64_t> perm(static_cast<std::size_t>(c.size()));
  for (std::int64_t i = 0; i < c.size(); ++i) perm[static_cast<std::size_t>(i)] = i;
  Rng rng(77);
  rng.shuffle(perm);
  const PointCloud shuffled = c.subset(perm);
  const SegmentMap moved = graph_cut_segments(shuffled, all_ids(shuffled), knn_graph(shuffled, 10),
                                              0.1, 10);
  CHECK(as_id_sets(base) == as_id_sets(moved));
}

TEST_CASE("segments over-segment but stay label pure", "[segmentation]") {
  SceneRecipe recipe = default_room_recipe();
  for (const std::uint64_t seed : {11ULL, 12ULL}) {
    const PointCloud c = generate_synthetic_scene(seed, recipe);
    const SegmentMap m = graph_cut_segments(c, all_ids(c), knn_graph(c, 16), 0.1, 20);
    // purity of segments w.r.t. ground-truth labels
    std::map<std::int64_t, std::map<std::int32_t, std::int64_t>> contingency;
    for (std::int64_t i = 0; i < c.size(); ++i) {
      const auto s = static_cast<std::size_t>(i);
      contingency[m.at(c.ids[s])][c.labels[s]]++;
    }
    std::int64_t agree = 0;
    for (const auto& [_, counts] : contingency) {
      std::int64_t best = 0;
      for (const auto& [__, n] : counts) best = std::max(best, n);
      agree += best;
    }
    const double purity = static_cast<double>(agree) / static_cast<double>(c.size());
    INFO("seed " << seed << " purity " << purity << " segments " << m.count);
    CHECK(purity >= 0.9);
  }
}

TEST_CASE("missing normals and empty overlap are rejected", "[segmentation]") {
  Rng rng(3);
  PointCloud c;
  for (std::int64_t i = 0; i < 10; ++i) {
    c.coords.push_back({rng.uniform01(), rng.uniform01(), rng.uniform01()});
    c.colors.push_back({0.5, 0.5, 0.5});
    c.ids.push_back(i);
  }
  const KnnGraph g = knn_graph(c, 3);
  CHECK_THROWS_AS(graph_cut_segments(c, all_ids(c), g, 0.1, 1), precondition_error);
  c.normals.assign(10, {0, 0, 1});
  CHECK_THROWS_AS(graph_cut_segments(c, {}, g, 0.1, 1), empty_input_error);
}

TEST_CASE("external segment files", "[segmentation]") {
  const auto dir = std::filesystem::temp_directory_path();
  SECTION("single mask id maps to segment 0") {
    const auto path = (dir / "sgcl_mask1.txt").string();
    std::ofstream(path) << "0 7\n1 7\n2 7\n";
    const SegmentMap m = load_external_segments(path, {0, 1, 2});
    CHECK(m.count == 1);
    CHECK(m.at(0) == 0);
    CHECK(m.sizes == std::vector<std::int64_t>{3});
  }
  SECTION("mask ids reindex by first appearance") {
    const auto path = (dir / "sgcl_mask2.txt").string();
    std::ofstream(path) << "0 9\n1 4\n2 9\n3 4\n";
    const SegmentMap m = load_external_segments(path, {0, 1, 2, 3});
    CHECK(m.count == 2);
    CHECK(m.at(0) == 0);
    CHECK(m.at(1) == 1);
    CHECK(m.at(2) == 0);
    CHECK(m.at(3) == 1);
  }
  SECTION("missing ids are listed") {
    const auto path = (dir / "sgcl_mask3.txt").string();
    std::ofstream(path) << "0 1\n";
    CHECK_THROWS_MATCHES(load_external_segments(path, {0, 1, 2}), precondition_error,
                         Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("2")));
  }
  SECTION("five-mask fixture sizes match a group-by count") {
    const auto path = (dir / "sgcl_mask5.txt").string();
    {
      std::ofstream out(path);
      Rng rng(55);
      for (std::int64_t id = 0; id < 500; ++id)
        out << id << " " << (100 + rng.uniform_int(5)) << "\n";
    }
    std::vector<std::int64_t> overlap(500);
    for (std::int64_t i = 0; i < 500; ++i) overlap[static_cast<std::size_t>(i)] = i;
    const SegmentMap m = load_external_segments(path, overlap);
    REQUIRE(m.count == 5);
    // independent group-by: re-read the file and count ids per mask
    std::map<std::int64_t, std::int64_t> group_by;
    {
      std::ifstream in(path);
      std::int64_t id, mask;
      while (in >> id >> mask) group_by[mask]++;
    }
    std::multiset<std::int64_t> expected_sizes, actual_sizes(m.sizes.begin(), m.sizes.end());
    for (const auto& [_, n] : group_by) expected_sizes.insert(n);
    CHECK(actual_sizes == expected_sizes);
  }
  SECTION("round trip through the export format") {
    const PointCloud c = two_orthogonal_patches();
    const SegmentMap m = graph_cut_segments(c, all_ids(c), knn_graph(c, 6), 0.05, 5);
    const auto path = (dir / "sgcl_mask_rt.txt").string();
    save_segments(m, path);
    const SegmentMap back = load_external_segments(path, all_ids(c));
    CHECK(as_id_sets(m) == as_id_sets(back));
  }
  SECTION("empty file is an empty-input error") {
    const auto path = (dir / "sgcl_mask_empty.txt").string();
    std::ofstream(path) << "";
    CHECK_THROWS_AS(load_external_segments(path, {0}), empty_input_error);
  }
}
