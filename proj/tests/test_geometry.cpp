#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "pmap/geometry.hpp"
#include "pmap/synth.hpp"

using namespace pmap;

namespace {

TextPolygon random_star(std::mt19937_64& rng, double cx, double cy, double r_outer,
                        int spikes = 7) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Vec2> vs;
  const int n = spikes * 2;
  for (int i = 0; i < n; ++i) {
    const double angle = 2.0 * M_PI * i / n + 0.3 * unit(rng) / n;
    const double radius = (i % 2 == 0 ? 1.0 : 0.45 + 0.2 * unit(rng)) * r_outer;
    vs.emplace_back(cx + radius * std::cos(angle), cy + radius * std::sin(angle));
  }
  return make_polygon(std::move(vs), "star");
}

}  // namespace

TEST_SUITE("geometry") {

TEST_CASE("make_polygon normalization") {
  // Consecutive duplicates (including the closing repeat) are dropped.
  const TextPolygon p = make_polygon(
      {{0, 0}, {0, 0}, {4, 0}, {4, 3}, {4, 3}, {0, 3}, {0, 0}}, "r");
  CHECK(p.vertices.size() == 4);
  CHECK(signed_area(p) == doctest::Approx(12.0));

  CHECK_THROWS_AS(make_polygon({{0, 0}, {1, 1}}), DegeneratePolygon);
  CHECK_THROWS_AS(make_polygon({{0, 0}, {1, 1}, {2, 2}}), DegeneratePolygon);
  CHECK_THROWS_AS(make_polygon({{0, 0}, {0, 0}, {0, 0}, {0, 0}}), DegeneratePolygon);
}

TEST_CASE("rasterize axis-aligned rectangle") {
  const Grid grid(8, 8);
  const auto pixels = rasterize_interior(test::rect(0, 0, 4, 3), grid);
  REQUIRE(pixels.size() == 12);
  for (Index p : pixels) {
    CHECK(grid.col_of(p) <= 3);
    CHECK(grid.row_of(p) <= 2);
  }
}

TEST_CASE("rasterize off-grid polygon is empty") {
  const Grid grid(8, 8);
  const auto pixels = rasterize_interior(
      make_polygon({{20, 20}, {30, 20}, {25, 28}}), grid);
  CHECK(pixels.empty());
}

TEST_CASE("rasterize concave L matches brute force") {
  const Grid grid(10, 10);
  const TextPolygon ell =
      make_polygon({{1, 1}, {8, 1}, {8, 4}, {5, 4}, {5, 8}, {1, 8}}, "L");
  CHECK(rasterize_interior(ell, grid) == test::oracle_rasterize(ell, grid));
}

TEST_CASE("rasterize agrees with winding oracle on random shapes") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    const Grid grid(64, 64);
    TextPolygon poly;
    if (trial % 2 == 0) {
      poly = random_star(rng, 10 + 44 * unit(rng), 10 + 44 * unit(rng),
                         4 + 12 * unit(rng));
    } else {
      const auto scene = random_scene(grid, 1, ShapeFamily::mixed, 2.0, trial, 120.0);
      poly = scene.front();
    }
    const auto got = rasterize_interior(poly, grid);
    const auto want = test::oracle_rasterize(poly, grid);
    REQUIRE(got == want);

    // even-odd parity agrees with nonzero winding away from the boundary
    for (Index p = 0; p < grid.size(); p += 17) {
      const Vec2 c = grid.center(p);
      if (boundary_distance(poly, c) <= 1e-6) continue;
      CHECK(test::even_odd_inside(poly, c) == (winding_number(poly, c) != 0));
    }
  }
}

TEST_CASE("boundary pixels count as inside") {
  // Vertical edge at x = 2.5 passes exactly through the centers of column 2.
  const Grid grid(8, 8);
  const TextPolygon p = make_polygon({{2.5, 1}, {6, 1}, {6, 5}, {2.5, 5}});
  const auto pixels = rasterize_interior(p, grid);
  CHECK(std::find(pixels.begin(), pixels.end(), grid.index_of(2, 2)) != pixels.end());
  CHECK(rasterize_interior(p, grid) == test::oracle_rasterize(p, grid));
}

TEST_CASE("distance to boundary on a 21x21 square") {
  const Grid grid(23, 23);
  const TextPolygon sq = test::square(0, 0, 21);
  const auto pixels = rasterize_interior(sq, grid);
  REQUIRE(pixels.size() == 21 * 21);
  const auto frag = distance_to_boundary(sq, grid, pixels);

  const Index center = grid.index_of(10, 10);
  const Index corner = grid.index_of(0, 0);
  for (std::size_t k = 0; k < frag.size(); ++k) {
    if (frag.pixels[k] == center) CHECK(frag.distance[k] == doctest::Approx(10.5));
    if (frag.pixels[k] == corner) CHECK(frag.distance[k] == doctest::Approx(0.5));
  }
  CHECK(instance_scale(frag) == doctest::Approx(10.5));
}

TEST_CASE("distances match the exhaustive segment oracle on a star") {
  std::mt19937_64 rng(11);
  const Grid grid(48, 48);
  const TextPolygon star = random_star(rng, 24, 24, 18);
  const auto pixels = rasterize_interior(star, grid);
  REQUIRE(pixels.size() > 40);
  const auto frag = distance_to_boundary(star, grid, pixels);

  std::uniform_int_distribution<std::size_t> pick(0, frag.size() - 1);
  double max_dist = 0.0;
  for (int s = 0; s < 20; ++s) {
    const std::size_t k = pick(rng);
    const double want = test::oracle_min_boundary_distance(star, grid.center(frag.pixels[k]));
    CHECK(frag.distance[k] == doctest::Approx(want).epsilon(1e-12));
  }
  for (double d : frag.distance) max_dist = std::max(max_dist, d);
  CHECK(instance_scale(frag) == doctest::Approx(std::max(max_dist, 1.0)));
}

TEST_CASE("instance_scale clamps tiny instances") {
  const Grid grid(4, 4);
  const TextPolygon unit = test::square(0, 0, 1);
  const auto frag = distance_to_boundary(unit, grid, rasterize_interior(unit, grid));
  REQUIRE(frag.size() == 1);
  CHECK(frag.distance[0] == doctest::Approx(0.5));
  CHECK(instance_scale(frag) == 1.0);

  CHECK_THROWS_AS(instance_scale(DistanceFragment{}), EmptyInstance);
}

TEST_CASE("interior distances stay within (0, L]; exterior are zero") {
  const Grid grid(40, 40);
  const auto scene = random_scene(grid, 2, ShapeFamily::rect, 4.0, 3, 60.0);
  const DistanceMap dmap = assemble_distance_map(scene, grid);
  for (Index p = 0; p < grid.size(); ++p) {
    bool inside = false;
    for (const auto& poly : scene) inside |= test::oracle_pixel_inside(poly, grid, p);
    if (!inside) CHECK(dmap.values.data()[p] == 0.0);
  }
  for (const auto& poly : scene) {
    const auto pixels = rasterize_interior(poly, grid);
    const auto frag = distance_to_boundary(poly, grid, pixels);
    const double L = instance_scale(frag);
    for (double d : frag.distance) {
      CHECK(d >= 0.0);
      CHECK(d <= L + 1e-12);
    }
  }
}

TEST_CASE("distance computation is translation-equivariant") {
  // Quarter-pixel vertex lattice keeps the integer shift exact in binary.
  const Grid grid(40, 40);
  const TextPolygon base =
      make_polygon({{4.25, 5.0}, {15.75, 6.25}, {14.0, 14.75}, {5.5, 12.25}});
  std::vector<Vec2> shifted_vs;
  const Vec2 shift(7, 9);
  for (const Vec2& v : base.vertices) shifted_vs.push_back(v + shift);
  const TextPolygon shifted = make_polygon(shifted_vs);

  const auto frag = distance_to_boundary(base, grid, rasterize_interior(base, grid));
  const auto frag2 =
      distance_to_boundary(shifted, grid, rasterize_interior(shifted, grid));
  REQUIRE(frag.size() == frag2.size());
  for (std::size_t k = 0; k < frag.size(); ++k) {
    const Index p = frag.pixels[k];
    const Index q = grid.index_of(grid.col_of(p) + 7, grid.row_of(p) + 9);
    CHECK(frag2.pixels[k] == q);
    CHECK(frag.distance[k] == frag2.distance[k]);
  }
}

TEST_CASE("mask distance map") {
  SUBCASE("1xk line is all boundary") {
    const auto mask = test::mask_from_ascii({"........", ".######.", "........"});
    const auto frag = mask_distance_map(mask);
    for (double d : frag.distance) CHECK(d == 0.0);
  }
  SUBCASE("5x5 square center") {
    const auto mask = test::mask_from_ascii({
        ".......", ".#####.", ".#####.", ".#####.", ".#####.", ".#####.", "......."});
    const auto frag = mask_distance_map(mask);
    const Grid grid = mask.grid;
    for (std::size_t k = 0; k < frag.size(); ++k) {
      if (frag.pixels[k] == grid.index_of(3, 3)) {
        CHECK(frag.distance[k] == doctest::Approx(2.0));
      }
    }
  }
  SUBCASE("empty mask") {
    InstanceMask empty{Grid(4, 4), 1, {}};
    CHECK_THROWS_AS(mask_distance_map(empty), EmptyInstance);
  }
  SUBCASE("grid border counts as outside the mask") {
    // Mask flush against the grid corner: all of it is boundary.
    InstanceMask mask{Grid(2, 2), 1, {0, 1, 2, 3}};
    const auto frag = mask_distance_map(mask);
    for (double d : frag.distance) CHECK(d == 0.0);
  }
  SUBCASE("matches brute force on random blobs") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 10; ++trial) {
      const Grid grid(32, 32);
      const auto scene = random_scene(grid, 1, ShapeFamily::mixed, 2.0, 100 + trial, 40.0);
      InstanceMask mask{grid, 1, rasterize_interior(scene.front(), grid)};
      REQUIRE(!mask.empty());
      const auto frag = mask_distance_map(mask);

      // Brute force: boundary pixels, then min center-to-center distance.
      std::set<Index> in(mask.pixels.begin(), mask.pixels.end());
      std::vector<Vec2> boundary;
      for (Index p : mask.pixels) {
        const int c = grid.col_of(p), r = grid.row_of(p);
        const bool edge = !grid.contains(c - 1, r) || !in.count(grid.index_of(c - 1, r)) ||
                          !grid.contains(c + 1, r) || !in.count(grid.index_of(c + 1, r)) ||
                          !grid.contains(c, r - 1) || !in.count(grid.index_of(c, r - 1)) ||
                          !grid.contains(c, r + 1) || !in.count(grid.index_of(c, r + 1));
        if (edge) boundary.push_back(grid.center(p));
      }
      for (std::size_t k = 0; k < frag.size(); ++k) {
        const Vec2 c = grid.center(frag.pixels[k]);
        double want = std::numeric_limits<double>::infinity();
        for (const Vec2& b : boundary) want = std::min(want, (c - b).norm());
        CHECK(frag.distance[k] == doctest::Approx(want).epsilon(1e-12));
      }
    }
  }
}

}  // TEST_SUITE
