#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "pmap/evaluation.hpp"
#include "pmap/reconstruct.hpp"
#include "pmap/synth.hpp"

using namespace pmap;

namespace {

std::vector<std::vector<Index>> pixel_sets(const std::vector<InstanceMask>& masks) {
  std::vector<std::vector<Index>> sets;
  for (const auto& m : masks) sets.push_back(m.pixels);
  return sets;
}

void check_masks_wellformed(const std::vector<InstanceMask>& masks) {
  std::set<Index> seen;
  for (const auto& mask : masks) {
    REQUIRE(!mask.empty());
    for (Index p : mask.pixels) {
      CHECK(!seen.count(p));  // pairwise disjoint
      seen.insert(p);
    }
    // each mask is one 4-connected component
    const auto comps = test::oracle_components(mask_to_image(mask));
    CHECK(comps.size() == 1);
  }
}

}  // namespace

TEST_SUITE("reconstruct") {

TEST_CASE("binarize_stack") {
  const Grid grid(23, 23);
  const AlphaSchedule schedule = make_schedule(3, 4);
  const auto stack =
      generate_label_stack({{test::square(0, 0, 21)}}, grid, schedule);

  SUBCASE("matches per-pixel thresholding of saf") {
    const auto b = binarize_stack(stack, 0.3);
    REQUIRE(b.count() == 4);
    for (int m = 0; m < 4; ++m) {
      for (Index p = 0; p < grid.size(); ++p) {
        CHECK(static_cast<bool>(b.layers[m].data()[p]) ==
              (stack.maps[m].values.data()[p] >= 0.3));
      }
    }
    // layer 0 (alpha 1) is the most shrunken, layers grow with alpha
    Index prev = b.layers[0].cast<int>().sum();
    CHECK(prev > 0);
    for (int m = 1; m < 4; ++m) {
      const Index count = b.layers[m].cast<int>().sum();
      CHECK(count >= prev);
      prev = count;
    }
  }
  SUBCASE("threshold near zero recovers the full support") {
    const auto b = binarize_stack(stack, 1e-9);
    for (int m = 0; m < 4; ++m) {
      for (Index p = 0; p < grid.size(); ++p) {
        CHECK(static_cast<bool>(b.layers[m].data()[p]) ==
              (stack.maps[m].values.data()[p] > 0.0));
      }
    }
  }
  SUBCASE("all-zero map gives an empty layer") {
    ProbabilityStack zeros;
    zeros.maps.push_back({grid, 1.0, Array2d::Zero(23, 23)});
    zeros.maps.push_back({grid, 4.0, Array2d::Zero(23, 23)});
    const auto b = binarize_stack(zeros, 0.3);
    CHECK(b.layers[0].cast<int>().sum() == 0);
  }
  SUBCASE("threshold domain") {
    CHECK_THROWS_AS(binarize_stack(stack, 0.0), Error);
    CHECK_THROWS_AS(binarize_stack(stack, 1.0), Error);
  }
}

TEST_CASE("connected_components") {
  SUBCASE("two blobs") {
    const auto layer = test::layer_from_ascii({
        "##....##",
        "##....##",
        "........",
    });
    const auto comps = connected_components(layer);
    REQUIRE(comps.size() == 2);
    CHECK(comps[0].label == 1);
    CHECK(comps[0].pixels.size() == 4);
    CHECK(comps[1].label == 2);
    // label order follows the smallest row-major pixel index
    CHECK(comps[0].pixels.front() < comps[1].pixels.front());
  }
  SUBCASE("single pixel") {
    const auto layer = test::layer_from_ascii({"....", ".#..", "...."});
    const auto comps = connected_components(layer);
    REQUIRE(comps.size() == 1);
    CHECK(comps[0].pixels == std::vector<Index>{5});
  }
  SUBCASE("diagonal pixels are separate components") {
    const auto layer = test::layer_from_ascii({"#.", ".#"});
    CHECK(connected_components(layer).size() == 2);
  }
  SUBCASE("random noise matches the flood-fill oracle") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
      Array2u8 layer(32, 32);
      for (Index i = 0; i < 32 * 32; ++i) {
        layer.data()[i] = unit(rng) < 0.45 ? 1 : 0;
      }
      const auto got = pixel_sets(connected_components(layer));
      auto want = test::oracle_components(layer);
      auto got_sorted = got;
      std::sort(got_sorted.begin(), got_sorted.end());
      std::sort(want.begin(), want.end());
      CHECK(got_sorted == want);  // same family of pixel sets, up to relabeling
      for (std::size_t i = 1; i < got.size(); ++i) {
        CHECK(got[i - 1].front() < got[i].front());
      }
    }
  }
}

TEST_CASE("progressive scale expansion") {
  SUBCASE("noiseless single instance recovers the last layer support") {
    const Grid grid(32, 20);
    const auto stack =
        generate_label_stack({{test::rect(2, 2, 29, 17)}}, grid, make_schedule(3, 4));
    const auto b = binarize_stack(stack, 0.3);
    const auto masks = progressive_scale_expansion(b);
    REQUIRE(masks.size() == 1);
    std::vector<Index> support;
    for (Index p = 0; p < grid.size(); ++p) {
      if (b.layers.back().data()[p]) support.push_back(p);
    }
    CHECK(masks[0].pixels == support);
  }
  SUBCASE("handcrafted adjacent instances split by arrival order") {
    // Two seeds inside one shared final band; the contested middle goes to
    // whichever seed's front reaches it first.
    BinarizedStack b;
    b.grid = Grid(16, 5);
    b.layers.push_back(test::layer_from_ascii({
        "................",
        ".##..........##.",
        ".##..........##.",
        ".##..........##.",
        "................",
    }));
    b.layers.push_back(test::layer_from_ascii({
        "................",
        ".##############.",
        ".##############.",
        ".##############.",
        "................",
    }));
    const auto masks = progressive_scale_expansion(b);
    REQUIRE(masks.size() == 2);
    const auto want = test::oracle_pse(b);
    CHECK(masks[0].pixels == want[0]);
    CHECK(masks[1].pixels == want[1]);
    CHECK(masks[0].pixels.size() + masks[1].pixels.size() == 14 * 3);
  }
  SUBCASE("pixels unreachable from any seed stay unclaimed") {
    BinarizedStack b;
    b.grid = Grid(9, 3);
    b.layers.push_back(test::layer_from_ascii({
        "#........",
        ".........",
        ".........",
    }));
    b.layers.push_back(test::layer_from_ascii({
        "##.......",
        ".........",
        "......###",
    }));
    const auto masks = progressive_scale_expansion(b);
    REQUIRE(masks.size() == 1);
    CHECK(masks[0].pixels == std::vector<Index>{0, 1});
  }
  SUBCASE("no seeds, no detections") {
    BinarizedStack b;
    b.grid = Grid(4, 4);
    b.layers.push_back(Array2u8::Zero(4, 4));
    b.layers.push_back(test::layer_from_ascii({"....", ".##.", ".##.", "...."}));
    CHECK(progressive_scale_expansion(b).empty());
  }
  SUBCASE("random scenes match the deque oracle") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
      const Grid grid(96, 96);
      const auto scene = random_scene(grid, 3, ShapeFamily::mixed, 4.0, seed, 250.0);
      const auto stack = generate_label_stack(scene, grid, make_schedule(3, 4));
      const auto b = binarize_stack(stack, 0.3);
      const auto masks = progressive_scale_expansion(b);
      const auto want = test::oracle_pse(b);
      REQUIRE(masks.size() == want.size());
      for (std::size_t i = 0; i < masks.size(); ++i) {
        CHECK(masks[i].pixels == want[i]);
      }
      check_masks_wellformed(masks);
      // every output pixel is in the last layer; every seed pixel belongs to
      // exactly one output mask
      for (const auto& m : masks) {
        for (Index p : m.pixels) CHECK(b.layers.back().data()[p] != 0);
      }
      const auto seeds = connected_components(b.layers.front());
      std::set<Index> covered;
      for (const auto& m : masks) covered.insert(m.pixels.begin(), m.pixels.end());
      for (const auto& s : seeds) {
        for (Index p : s.pixels) CHECK(covered.count(p));
      }
    }
  }
  SUBCASE("determinism across repeated runs") {
    const Grid grid(64, 64);
    const auto scene = random_scene(grid, 2, ShapeFamily::mixed, 4.0, 12, 150.0);
    const auto stack = generate_label_stack(scene, grid, make_schedule(2, 4));
    const auto b = binarize_stack(stack, 0.3);
    const auto a1 = progressive_scale_expansion(b);
    const auto a2 = progressive_scale_expansion(b);
    CHECK(test::checksum_masks(a1) == test::checksum_masks(a2));
  }
}

TEST_CASE("watershed") {
  SUBCASE("noiseless single instance recovers the last layer support") {
    const Grid grid(32, 20);
    const auto stack =
        generate_label_stack({{test::rect(2, 2, 29, 17)}}, grid, make_schedule(3, 4));
    const auto b = binarize_stack(stack, 0.3);
    const auto masks = watershed_aggregate(stack, b);
    REQUIRE(masks.size() == 1);
    std::vector<Index> support;
    for (Index p = 0; p < grid.size(); ++p) {
      if (b.layers.back().data()[p]) support.push_back(p);
    }
    CHECK(masks[0].pixels == support);
  }
  SUBCASE("two bumps split along the valley") {
    // Synthetic 24x24 two-bump stack; the valley ridge goes to whichever
    // marker floods it first in priority order.
    const Grid grid(24, 24);
    ProbabilityStack stack;
    for (double alpha : {1.0, 4.0}) {
      Array2d v(24, 24);
      for (int r = 0; r < 24; ++r) {
        for (int c = 0; c < 24; ++c) {
          const double d1 = std::hypot(c - 6.0, r - 11.0);
          const double d2 = std::hypot(c - 17.0, r - 11.0);
          const double bump = std::max(std::max(0.0, 1.0 - d1 / 7.0),
                                       std::max(0.0, 1.0 - d2 / 7.0));
          v(r, c) = bump > 0 ? saf(bump, 1.0, alpha) : 0.0;
        }
      }
      stack.maps.push_back({grid, alpha, std::move(v)});
    }
    const auto b = binarize_stack(stack, 0.35);
    REQUIRE(connected_components(b.layers.front()).size() == 2);
    const auto masks = watershed_aggregate(stack, b);
    REQUIRE(masks.size() == 2);
    const auto want = test::oracle_watershed(stack, b);
    for (std::size_t i = 0; i < masks.size(); ++i) {
      CHECK(masks[i].pixels == want[i]);
    }
    check_masks_wellformed(masks);
  }
  SUBCASE("marker surrounded by sub-threshold pixels keeps only itself") {
    const Grid grid(7, 7);
    ProbabilityStack stack;
    for (double alpha : {1.0, 4.0}) {
      Array2d v = Array2d::Zero(7, 7);
      v(3, 3) = 0.9;
      stack.maps.push_back({grid, alpha, std::move(v)});
    }
    const auto b = binarize_stack(stack, 0.3);
    const auto masks = watershed_aggregate(stack, b);
    REQUIRE(masks.size() == 1);
    CHECK(masks[0].pixels == std::vector<Index>{grid.index_of(3, 3)});
  }
  SUBCASE("agrees with pse when final supports are disjoint") {
    for (std::uint64_t seed = 40; seed < 44; ++seed) {
      const Grid grid(96, 96);
      const auto scene = random_scene(grid, 3, ShapeFamily::mixed, 4.0, seed, 250.0);
      const auto stack = generate_label_stack(scene, grid, make_schedule(3, 4));
      const auto b = binarize_stack(stack, 0.3);
      const auto pse = progressive_scale_expansion(b);
      const auto ws = watershed_aggregate(stack, b);
      REQUIRE(pse.size() == ws.size());
      for (std::size_t i = 0; i < pse.size(); ++i) {
        CHECK(pse[i].pixels == ws[i].pixels);
      }
    }
  }
  SUBCASE("random stacks match the priority-flood oracle") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
      const Grid grid(32, 32);
      ProbabilityStack stack;
      for (double alpha : {1.0, 4.0, 7.0}) {
        Array2d v(32, 32);
        for (Index i = 0; i < grid.size(); ++i) v.data()[i] = unit(rng);
        stack.maps.push_back({grid, alpha, std::move(v)});
      }
      const auto b = binarize_stack(stack, 0.6);
      const auto masks = watershed_aggregate(stack, b);
      const auto want = test::oracle_watershed(stack, b);
      REQUIRE(masks.size() == want.size());
      for (std::size_t i = 0; i < masks.size(); ++i) {
        CHECK(masks[i].pixels == want[i]);
      }
    }
  }
}

TEST_CASE("round trip recovers instances at high IoU") {
  for (std::uint64_t seed = 60; seed < 66; ++seed) {
    const Grid grid(256, 256);
    const auto scene = random_scene(grid, 3, ShapeFamily::mixed, 4.0, seed);
    const auto stack = generate_label_stack(scene, grid, make_schedule(3, 4));
    const auto masks = grow_instances(stack, 0.3, GrowthAlgorithm::pse);
    REQUIRE(masks.size() == scene.size());
    for (const auto& poly : scene) {
      const auto gt_pixels = rasterize_interior(poly, grid);
      double best = 0.0;
      for (const auto& mask : masks) {
        std::vector<Index> inter;
        std::set_intersection(gt_pixels.begin(), gt_pixels.end(),
                              mask.pixels.begin(), mask.pixels.end(),
                              std::back_inserter(inter));
        const double uni = static_cast<double>(gt_pixels.size()) +
                           static_cast<double>(mask.pixels.size()) -
                           static_cast<double>(inter.size());
        best = std::max(best, static_cast<double>(inter.size()) / uni);
      }
      CHECK(best >= 0.9);
    }
  }
}

TEST_CASE("bench report structure") {
  const auto report =
      bench_region_growth(Grid(256, 256), 4, GrowthAlgorithm::pse, 3, 5);
  CHECK(report.runs == 3);
  CHECK(report.binarize.mean_ms > 0.0);
  CHECK(report.components.mean_ms > 0.0);
  CHECK(report.growth.mean_ms > 0.0);
  CHECK(report.binarize.p95_ms >= 0.0);
  CHECK(report.instances >= 1);
  CHECK(report.total_mean_ms() > 0.0);
}

TEST_CASE("bench growth scaling" * doctest::timeout(120)) {
  // Doubling the pixel count scales growth by well under 4x, and fewer maps
  // mean less expansion work. Machine-dependent, so margins are generous.
  const auto half = bench_region_growth(Grid(724, 724), 4, GrowthAlgorithm::pse, 5, 42);
  const auto full = bench_region_growth(Grid(1024, 1024), 4, GrowthAlgorithm::pse, 5, 42);
  CHECK(full.growth.mean_ms <= 4.0 * half.growth.mean_ms);
  const auto two_maps =
      bench_region_growth(Grid(1024, 1024), 2, GrowthAlgorithm::pse, 5, 42);
  CHECK(two_maps.growth.mean_ms < full.growth.mean_ms);
}

}  // TEST_SUITE
