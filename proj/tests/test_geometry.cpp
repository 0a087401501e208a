#include <doctest.h>

#include <cmath>
#include <random>

#include "mtnd/geometry.hpp"

using namespace mtnd;

namespace {
Polygon unit_square(double s) {
  return {{0, 0}, {s, 0}, {s, s}, {0, s}};
}
}  // namespace

TEST_CASE("point primitives") {
  CHECK(dot({1, 2}, {3, 4}) == doctest::Approx(11));
  CHECK(cross({1, 0}, {0, 1}) == doctest::Approx(1));
  CHECK(distance({0, 0}, {3, 4}) == doctest::Approx(5));
  CHECK(squared_distance({0, 0}, {3, 4}) == doctest::Approx(25));
}

TEST_CASE("bounding box inflation") {
  BoundingBox b = bounding_box({{0, 0}, {10, 4}});
  CHECK(b.max_x == doctest::Approx(10));
  BoundingBox big = b.inflated(0.1);
  CHECK(big.min_x == doctest::Approx(-1.0));
  CHECK(big.max_x == doctest::Approx(11.0));
  CHECK(big.min_y == doctest::Approx(-1.0));
  CHECK(big.max_y == doctest::Approx(5.0));
}

TEST_CASE("point in polygon and area") {
  const Polygon sq = unit_square(2.0);
  CHECK(point_in_polygon({1, 1}, sq));
  CHECK_FALSE(point_in_polygon({3, 1}, sq));
  CHECK(polygon_area(sq) == doctest::Approx(4.0));
}

TEST_CASE("distance to boundary") {
  const Polygon sq = unit_square(2.0);
  CHECK(distance_to_boundary({1, 1}, sq) == doctest::Approx(1.0));
  CHECK(distance_to_boundary({0.25, 1}, sq) == doctest::Approx(0.25));
  CHECK(distance_to_boundary({0, 1}, sq) == doctest::Approx(0.0));
}

TEST_CASE("convex polygon clearance") {
  const Polygon a = unit_square(1.0);
  const Polygon b = {{3, 0}, {4, 0}, {4, 1}, {3, 1}};
  CHECK(convex_polygon_distance(a, b) == doctest::Approx(2.0));
  const Polygon touching = {{1, 0}, {2, 0}, {2, 1}, {1, 1}};
  CHECK(convex_polygon_distance(a, touching) == doctest::Approx(0.0));
  const Polygon overlapping = {{0.5, 0.5}, {2, 0.5}, {2, 2}, {0.5, 2}};
  CHECK(convex_polygon_distance(a, overlapping) == doctest::Approx(0.0));
}

TEST_CASE("ray exit distance") {
  const Polygon sq = unit_square(2.0);
  auto d = ray_exit_distance({1, 1}, {1, 0}, sq);
  REQUIRE(d.has_value());
  CHECK(*d == doctest::Approx(1.0));
  d = ray_exit_distance({0.5, 1}, {-1, 0}, sq);
  REQUIRE(d.has_value());
  CHECK(*d == doctest::Approx(0.5));
  CHECK_FALSE(ray_exit_distance({5, 5}, {1, 0}, sq).has_value());
}

TEST_CASE("half-plane clip") {
  Polygon sq = unit_square(2.0);
  // keep x <= 1
  Polygon half = clip_half_plane(sq, {1, 0}, 1.0);
  CHECK(polygon_area(half) == doctest::Approx(2.0));
}

TEST_CASE("two-site Voronoi splits along the perpendicular bisector") {
  BoundingBox box = bounding_box({{0, 0}, {10, 10}});
  VoronoiDiagram vd = bounded_voronoi({{2, 5}, {8, 5}}, box);
  REQUIRE(vd.cells.size() == 2);
  CHECK(polygon_area(vd.cells[0]) == doctest::Approx(50.0));
  CHECK(polygon_area(vd.cells[1]) == doctest::Approx(50.0));
  CHECK(point_in_polygon({4.9, 5}, vd.cells[0]));
  CHECK(point_in_polygon({5.1, 5}, vd.cells[1]));
  CHECK(vd.adjacent(0, 1));
  CHECK(vd.adjacent(1, 0));
}

TEST_CASE("Voronoi cells tile the box and adjacency is symmetric") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 20.0);
  std::vector<Point> sites;
  for (int i = 0; i < 12; ++i) sites.push_back({u(rng), u(rng)});
  BoundingBox box = bounding_box(sites);
  box = box.inflated(0.1);
  VoronoiDiagram vd = bounded_voronoi(sites, box);
  double total = 0.0;
  for (const Polygon& cell : vd.cells) total += polygon_area(cell);
  const double box_area = (box.max_x - box.min_x) * (box.max_y - box.min_y);
  CHECK(total == doctest::Approx(box_area).epsilon(1e-6));
  for (std::size_t i = 0; i < sites.size(); ++i)
    for (int j : vd.neighbors[i]) CHECK(vd.adjacent(j, static_cast<int>(i)));
  // every point's nearest site owns it
  for (int t = 0; t < 200; ++t) {
    Point p{u(rng), u(rng)};
    int nearest = 0;
    for (std::size_t i = 1; i < sites.size(); ++i)
      if (squared_distance(p, sites[i]) <
          squared_distance(p, sites[static_cast<std::size_t>(nearest)]))
        nearest = static_cast<int>(i);
    CHECK(point_in_polygon(p, vd.cells[static_cast<std::size_t>(nearest)]));
  }
}

TEST_CASE("segment traversal reports cells in order") {
  std::vector<Point> sites = {{1, 1}, {5, 1}, {9, 1}};
  BoundingBox box = bounding_box({{0, 0}, {10, 2}});
  VoronoiDiagram vd = bounded_voronoi(sites, box);
  auto seq = traverse_cells({0.5, 1}, {9.5, 1}, vd, sites);
  REQUIRE(seq.size() == 3);
  CHECK(seq[0] == 0);
  CHECK(seq[1] == 1);
  CHECK(seq[2] == 2);
  auto rev = traverse_cells({9.5, 1}, {0.5, 1}, vd, sites);
  REQUIRE(rev.size() == 3);
  CHECK(rev[0] == 2);
  CHECK(rev[2] == 0);
}

TEST_CASE("coincident sites are resolved deterministically") {
  std::vector<Point> sites = {{5, 5}, {5, 5}, {1, 1}};
  BoundingBox box = bounding_box({{0, 0}, {10, 10}});
  VoronoiDiagram a = bounded_voronoi(sites, box);
  VoronoiDiagram b = bounded_voronoi(sites, box);
  REQUIRE(a.cells.size() == 3);
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(polygon_area(a.cells[i]) == doctest::Approx(polygon_area(b.cells[i])));
}
