#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "mtnd/zoning.hpp"

using namespace mtnd;

namespace {

std::vector<Maz> line_mazs(const std::vector<double>& xs,
                           const std::vector<double>& trips) {
  std::vector<Maz> out;
  for (std::size_t i = 0; i < xs.size(); ++i)
    out.push_back({static_cast<std::int64_t>(i + 1), {xs[i], 0.0}, trips[i]});
  return out;
}

}  // namespace

TEST_CASE("single cluster centroid is the trip-squared weighted mean") {
  auto mazs = line_mazs({0, 10}, {1, 3});
  ZonePartition p = cluster_zones(mazs, 1, 42);
  REQUIRE(p.k == 1);
  // weights 1 and 9 -> mean x = 90/10 = 9
  CHECK(p.centroids[0].x == doctest::Approx(9.0));
  CHECK(p.centroids[0].y == doctest::Approx(0.0));
}

TEST_CASE("k equal to point count separates every location") {
  auto mazs = line_mazs({0, 10}, {1, 3});
  ZonePartition p = cluster_zones(mazs, 2, 1);
  REQUIRE(p.k == 2);
  CHECK(p.assignment[0] != p.assignment[1]);
  std::set<double> cx = {p.centroids[0].x, p.centroids[1].x};
  CHECK(cx.count(0.0) == 1);
  CHECK(cx.count(10.0) == 1);
  CHECK(p.objective == doctest::Approx(0.0));
}

TEST_CASE("two natural groups match the brute-force optimum") {
  auto mazs = line_mazs({0, 1, 9, 10}, {1, 1, 1, 1});
  ZonePartition p = cluster_zones(mazs, 2, 7);
  CHECK(p.assignment[0] == p.assignment[1]);
  CHECK(p.assignment[2] == p.assignment[3]);
  CHECK(p.assignment[0] != p.assignment[2]);
  std::vector<double> cx = {p.centroids[0].x, p.centroids[1].x};
  std::sort(cx.begin(), cx.end());
  CHECK(cx[0] == doctest::Approx(0.5));
  CHECK(cx[1] == doctest::Approx(9.5));
  CHECK(p.objective == doctest::Approx(brute_force_cluster_objective(mazs, 2)));
}

TEST_CASE("weighted clustering matches brute force on a random instance") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::uniform_real_distribution<double> t(0.5, 4.0);
  std::vector<Maz> mazs;
  for (int i = 0; i < 9; ++i)
    mazs.push_back({i + 1, {u(rng), u(rng)}, t(rng)});
  ZonePartition p = cluster_zones(mazs, 3, 3);
  const double best = brute_force_cluster_objective(mazs, 3);
  CHECK(p.objective == doctest::Approx(best).epsilon(1e-9));
}

TEST_CASE("clustering is deterministic and errors when k is infeasible") {
  auto mazs = line_mazs({0, 0, 5}, {1, 1, 1});  // two distinct positions
  CHECK_THROWS_AS(cluster_zones(mazs, 3, 1), InfeasibleInput);
  auto a = cluster_zones(mazs, 2, 99);
  auto b = cluster_zones(mazs, 2, 99);
  CHECK(a.assignment == b.assignment);
  CHECK(a.objective == doctest::Approx(b.objective));
}

TEST_CASE("coordinate scaling scales centroids and keeps membership") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::vector<Maz> mazs;
  for (int i = 0; i < 20; ++i) mazs.push_back({i, {u(rng), u(rng)}, 1.0 + i % 3});
  ZonePartition p1 = cluster_zones(mazs, 4, 13);
  std::vector<Maz> scaled = mazs;
  for (Maz& m : scaled) m.position = 3.0 * m.position;
  ZonePartition p2 = cluster_zones(scaled, 4, 13);
  CHECK(p1.assignment == p2.assignment);
  for (int i = 0; i < 4; ++i) {
    CHECK(p2.centroids[i].x == doctest::Approx(3.0 * p1.centroids[i].x));
    CHECK(p2.centroids[i].y == doctest::Approx(3.0 * p1.centroids[i].y));
  }
}

TEST_CASE("uniform square zone has characteristic length half its side") {
  // Oracle: average over a dense uniform grid of the axis-averaged 1-D exit
  // distance, doubled.  For a square of side s this is 2 * s/4 = s/2.
  const double s = 6.0;
  const Polygon cell = {{0, 0}, {s, 0}, {s, s}, {0, s}};
  std::vector<Point> pts;
  std::vector<double> w;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, s);
  double oracle = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    Point p{u(rng), u(rng)};
    pts.push_back(p);
    w.push_back(1.0);
    const double ex = std::min(p.x, s - p.x);
    const double ey = std::min(p.y, s - p.y);
    oracle += (ex + ey) / 2.0;
  }
  oracle = 2.0 * oracle / n;
  const double l = zone_characteristic_length(cell, pts, w);
  CHECK(oracle == doctest::Approx(s / 2.0).epsilon(0.01));
  CHECK(l == doctest::Approx(oracle).epsilon(1e-9));
  CHECK(l == doctest::Approx(s / 2.0).epsilon(0.02));
}

TEST_CASE("zone geometry: city flag and two-centroid bisector") {
  std::vector<Maz> mazs;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int i = 0; i < 30; ++i) mazs.push_back({i, {2 + u(rng), 5 + u(rng)}, 1.0});
  for (int i = 30; i < 60; ++i) mazs.push_back({i, {8 + u(rng), 5 + u(rng)}, 1.0});
  ZonePartition p = cluster_zones(mazs, 2, 17);
  const Polygon city = {{0, 0}, {5, 0}, {5, 10}, {0, 10}};
  std::vector<Zone> zones = derive_zone_geometry(p, city);
  REQUIRE(zones.size() == 2);
  for (const Zone& z : zones) {
    CHECK(z.length > 0.0);
    CHECK_FALSE(z.members.empty());
    const bool inside = point_in_polygon(z.centroid, city);
    CHECK(z.is_city == inside);
    // the bisector between the groups sits near x = 5
    for (const Point& v : z.cell) {
      if (z.centroid.x < 5)
        CHECK(v.x <= 5.1);
      else
        CHECK(v.x >= 4.9);
    }
  }
  CHECK(zones[0].is_city != zones[1].is_city);
}

TEST_CASE("demand aggregation sums, drops the diagonal, and conserves trips") {
  auto mazs = line_mazs({0, 1, 9, 10}, {1, 1, 1, 1});
  ZonePartition p = cluster_zones(mazs, 2, 7);
  const int za = p.assignment[0];
  const int zb = p.assignment[2];

  SUBCASE("empty input") {
    DemandMatrix d = aggregate_demand({}, p, false);
    CHECK(d.total() == doctest::Approx(0.0));
  }
  SUBCASE("cross-zone trips map to the zone pair") {
    DemandMatrix d = aggregate_demand({{1, 3, 100.0}}, p, false);
    CHECK(d.at(za, zb) == doctest::Approx(100.0));
    CHECK(d.at(zb, za) == doctest::Approx(0.0));
  }
  SUBCASE("intrazonal trips are dropped and reported") {
    DemandMatrix d = aggregate_demand({{1, 2, 100.0}}, p, false);
    CHECK(d.at(za, za) == doctest::Approx(0.0));
    CHECK(d.dropped_intrazonal == doctest::Approx(100.0));
  }
  SUBCASE("conservation across a mixed batch") {
    std::vector<MazTrip> trips = {{1, 3, 40}, {3, 1, 25}, {1, 2, 10}, {4, 3, 5}};
    DemandMatrix d = aggregate_demand(trips, p, false);
    double crossing = 0.0;
    for (const auto& [od, v] : d.entries) crossing += v;
    CHECK(crossing + d.dropped_intrazonal + d.peripheral_remapped ==
          doctest::Approx(80.0));
  }
  SUBCASE("unknown origin fails without the peripheral rule") {
    CHECK_THROWS_WITH_AS(static_cast<void>(aggregate_demand({{77, 3, 1.0}}, p, false)),
                         doctest::Contains("77"), InfeasibleInput);
  }
  SUBCASE("peripheral rule maps outside locations to the nearest centroid") {
    // MAZ 77 sits at x=20, closest to the centroid near x=9.5
    const std::vector<Maz> outside = {{77, {20.0, 0.0}, 0.0}};
    DemandMatrix d = aggregate_demand({{77, 1, 12.0}}, p, true, outside);
    CHECK(d.at(zb, za) == doctest::Approx(12.0));
    CHECK(d.peripheral_remapped == doctest::Approx(12.0));
    // without the rule the same input is an error
    CHECK_THROWS_AS(
        static_cast<void>(aggregate_demand({{77, 1, 12.0}}, p, false, outside)),
        InfeasibleInput);
  }
}

TEST_CASE("candidate links from adjacency, demand, and the existing network") {
  // five zones on a line -> Voronoi adjacency is consecutive pairs
  std::vector<Maz> mazs;
  for (int i = 0; i < 5; ++i)
    mazs.push_back({i + 1, {2.0 * i, 0.0}, 1.0});
  // jitter off the axis so cells are proper 2-D
  for (int i =  0; i < 5; ++i) mazs[static_cast<std::size_t>(i)].position.y = (i % 2) * 0.01;
  ZonePartition p = cluster_zones(mazs, 5, 1);
  std::vector<Zone> zones = derive_zone_geometry(p, {});
  VoronoiDiagram vd = zone_voronoi(zones);
  std::vector<Mode> modes = {Mode::LBUS, Mode::RAIL};

  DemandMatrix empty_demand;
  empty_demand.zones = 5;

  SUBCASE("adjacency only") {
    CandidateLinkSet ls = generate_candidate_links(zones, vd, empty_demand, {},
                                                   modes, 0, 0);
    for (Mode m : modes) {
      for (const auto& [ij, exist] : ls.links.at(m)) {
        CHECK(vd.adjacent(ij.first, ij.second));
        CHECK(exist == 0);
        CHECK(ls.contains(m, ij.second, ij.first));
      }
      CHECK(ls.directed_links(m).size() == 8);  // 4 undirected neighbors
    }
  }
  SUBCASE("nearest-neighbor quota links ends through the middle") {
    std::vector<Maz> tri = {{1, {0, 0}, 1}, {2, {4, 0.01}, 1}, {3, {8, 0}, 1}};
    ZonePartition tp = cluster_zones(tri, 3, 1);
    std::vector<Zone> tz = derive_zone_geometry(tp, {});
    VoronoiDiagram tvd = zone_voronoi(tz);
    DemandMatrix dm;
    dm.zones = 3;
    CandidateLinkSet ls =
        generate_candidate_links(tz, tvd, dm, {}, {Mode::LBUS}, 1, 0);
    const int mid = 1;  // centroid order follows input here
    CHECK(ls.contains(Mode::LBUS, 0, mid));
    CHECK(ls.contains(Mode::LBUS, 2, mid));
  }
  SUBCASE("high bidirectional demand adds a direct pair") {
    DemandMatrix dm;
    dm.zones = 5;
    dm.add(0, 4, 500.0);
    dm.add(4, 0, 100.0);
    CandidateLinkSet ls =
        generate_candidate_links(zones, vd, dm, {}, modes, 0, 1);
    CHECK(ls.contains(Mode::RAIL, 0, 4));
    CHECK(ls.contains(Mode::RAIL, 4, 0));
  }
  SUBCASE("existing connections persist with their counts") {
    CandidateLinkSet existing;
    existing.insert(Mode::RAIL, 0, 3, 2);
    existing.insert(Mode::RAIL, 3, 0, 2);
    CandidateLinkSet ls = generate_candidate_links(zones, vd, empty_demand,
                                                   existing, modes, 0, 0);
    CHECK(ls.contains(Mode::RAIL, 0, 3));
    CHECK(ls.exist_count(Mode::RAIL, 0, 3) == 2);
    CHECK(ls.exist_count(Mode::RAIL, 3, 0) == 2);
    CHECK(ls.exist_count(Mode::LBUS, 0, 1) == 0);
  }
  SUBCASE("set is always symmetric") {
    DemandMatrix dm;
    dm.zones = 5;
    dm.add(1, 3, 50.0);
    CandidateLinkSet ls =
        generate_candidate_links(zones, vd, dm, {}, modes, 2, 1);
    for (Mode m : modes)
      for (const auto& [ij, exist] : ls.links.at(m))
        CHECK(ls.contains(m, ij.second, ij.first));
  }
}
