#include "mtnd/route_gen.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "doctest.h"
#include "mtnd/params.hpp"
#include "mtnd/zonal.hpp"
#include "zonal_test_utils.hpp"

using namespace mtnd;

namespace {

// seven-zone network with one trunk mode: corridors 1-2-5-7, 3-2, 4-5, 5-6
struct SevenZone {
  ZonalSolution sol;
  DemandMatrix demand;
  SegmentNetwork net;

  SevenZone() {
    demand.zones = 8;
    demand.add(1, 5, 10);
    demand.add(1, 7, 40);
    demand.add(2, 6, 50);
    demand.add(3, 7, 10);
    demand.add(4, 6, 40);

    const Mode m = Mode::BRT;
    sol.status = milp::SolveStatus::Optimal;
    auto link = [&](int o, int i, int j, double f) {
      sol.link_flows[{o, m, i, j}] = f;
    };
    sol.start_flows[{1, m}] = 50;
    link(1, 1, 2, 50);
    link(1, 2, 5, 50);
    link(1, 5, 7, 40);
    sol.end_flows[{1, m, 5}] = 10;
    sol.end_flows[{1, m, 7}] = 40;
    sol.start_flows[{2, m}] = 50;
    link(2, 2, 5, 50);
    link(2, 5, 6, 50);
    sol.end_flows[{2, m, 6}] = 50;
    sol.start_flows[{3, m}] = 10;
    link(3, 3, 2, 10);
    link(3, 2, 5, 10);
    link(3, 5, 7, 10);
    sol.end_flows[{3, m, 7}] = 10;
    sol.start_flows[{4, m}] = 40;
    link(4, 4, 5, 40);
    link(4, 5, 6, 40);
    sol.end_flows[{4, m, 6}] = 40;

    // headway/occupancy ratio 0.01 -> two parallel segments on the
    // 110-trip link (2,5), one everywhere else
    net = derive_segments(sol, m, 0.5, 50.0);
  }

  std::vector<OdPathFlows> paths() const {
    std::vector<OdPathFlows> out;
    for (int o : {1, 2, 3, 4})
      out.push_back(disaggregate_od_flows(sol, demand, o));
    return out;
  }
};

}  // namespace

TEST_CASE("segment counts follow flow and service parameters") {
  const Mode m = Mode::BRT;
  ZonalSolution sol;
  sol.link_flows[{0, m, 0, 1}] = 100.0;
  sol.link_flows[{0, m, 1, 2}] = 1000.0;
  sol.link_flows[{0, m, 2, 1}] = 10.0;  // lighter direction is ignored
  sol.link_flows[{0, m, 2, 3}] = 0.0;   // zero flow: no segments

  // 5-minute headway, 30 seats -> capacity 360 trips/h per route
  const SegmentNetwork net = derive_segments(sol, m, 5.0 / 60.0, 30.0);
  CHECK(net.segments_on(0, 1).size() == 1);
  CHECK(net.segments_on(1, 2).size() == 3);
  CHECK(net.segments_on(2, 3).empty());
  CHECK_FALSE(net.link_active(2, 3));
  CHECK(net.link_active(2, 1));
  // exact multiples do not round up an extra segment
  ZonalSolution exact;
  exact.link_flows[{0, m, 0, 1}] = 720.0;
  CHECK(derive_segments(exact, m, 5.0 / 60.0, 30.0).segments_on(0, 1).size() ==
        2);
}

TEST_CASE("a single served link becomes one route with no transfers") {
  const Mode m = Mode::BRT;
  ZonalSolution sol;
  sol.status = milp::SolveStatus::Optimal;
  sol.start_flows[{1, m}] = 10;
  sol.link_flows[{1, m, 1, 2}] = 10;
  sol.end_flows[{1, m, 2}] = 10;
  const SegmentNetwork net = derive_segments(sol, m, 0.1, 40.0);
  const RouteGenModel model = build_route_model(net, sol);
  const RouteGenSolution rsol = solve_routes(model);
  REQUIRE(rsol.status == milp::SolveStatus::Optimal);
  CHECK(rsol.objective == doctest::Approx(0.0));
  CHECK(rsol.connections.empty());
  const RoutePlan plan = assemble_routes(rsol, net);
  REQUIRE(plan.routes.size() == 1);
  CHECK(plan.routes[0].zones == std::vector<int>{1, 2});
  CHECK(plan.routes[0].trips == doctest::Approx(10.0));
}

TEST_CASE("two collinear links chain into one through route") {
  const Mode m = Mode::BRT;
  ZonalSolution sol;
  sol.status = milp::SolveStatus::Optimal;
  sol.start_flows[{1, m}] = 10;
  sol.link_flows[{1, m, 1, 2}] = 10;
  sol.link_flows[{1, m, 2, 3}] = 10;
  sol.end_flows[{1, m, 3}] = 10;
  DemandMatrix demand;
  demand.zones = 4;
  demand.add(1, 3, 10);

  const SegmentNetwork net = derive_segments(sol, m, 0.1, 40.0);
  const RouteGenModel model = build_route_model(net, sol);
  const RouteGenSolution rsol = solve_routes(model);
  REQUIRE(rsol.status == milp::SolveStatus::Optimal);
  CHECK(rsol.objective == doctest::Approx(0.0));
  CHECK(rsol.connections ==
        std::set<std::tuple<int, int, int>>{{2, 0, 1}});
  const RoutePlan plan = assemble_routes(rsol, net);
  REQUIRE(plan.routes.size() == 1);
  CHECK(plan.routes[0].zones == std::vector<int>{1, 2, 3});
  std::vector<OdPathFlows> paths{disaggregate_od_flows(sol, demand, 1)};
  const TransferCount tc = count_transfers(plan, paths);
  CHECK(tc.total == doctest::Approx(0.0));

  // greedy baseline finds the same chaining here
  const RoutePlan greedy = myopic_routes(net, sol, demand);
  CHECK(greedy.total_transfers == doctest::Approx(0.0));
  REQUIRE(greedy.routes.size() == 1);
  CHECK(greedy.routes[0].zones == std::vector<int>{1, 2, 3});
}

TEST_CASE("optimized chaining beats the greedy baseline on the seven-zone network") {
  SevenZone fx;

  // an operator extending today's network keeps its existing junctions:
  // at zone 2 the (1,2) segment feeds one (2,5) segment and the (3,2)
  // segment feeds the other, and zone-2 boardings use the first of them
  RouteGenOptions opts;
  opts.fixed_connections = {{2, 0, 3}, {2, 1, 2}};
  opts.fixed_boarding[{2, 2, 5}] = 3;

  const RouteGenModel model = build_route_model(fx.net, fx.sol, opts);
  const RouteGenSolution rsol = solve_routes(model);
  REQUIRE(rsol.status == milp::SolveStatus::Optimal);
  CHECK(rsol.objective == doctest::Approx(60.0));

  const RoutePlan plan = assemble_routes(rsol, fx.net);
  CHECK(plan.routes.size() == 3);
  std::set<std::vector<int>> zone_seqs;
  for (const auto& r : plan.routes) zone_seqs.insert(r.zones);
  CHECK(zone_seqs == std::set<std::vector<int>>{
                         {1, 2, 5, 7}, {3, 2, 5}, {4, 5, 6}});

  const auto paths = fx.paths();
  const TransferCount tc = count_transfers(plan, paths);
  CHECK(tc.total == rsol.objective);
  CHECK(tc.by_od.at({1, 5}) == doctest::Approx(0.0));
  CHECK(tc.by_od.at({1, 7}) == doctest::Approx(0.0));
  CHECK(tc.by_od.at({2, 6}) == doctest::Approx(50.0));
  CHECK(tc.by_od.at({3, 7}) == doctest::Approx(10.0));
  CHECK(tc.by_od.at({4, 6}) == doctest::Approx(0.0));

  // greedy baseline, no pinned structure: worse by 20 trips
  const RoutePlan greedy = myopic_routes(fx.net, fx.sol, fx.demand);
  CHECK(greedy.total_transfers == doctest::Approx(80.0));
  const TransferCount gtc = count_transfers(greedy, paths);
  CHECK(gtc.by_od.at({1, 7}) == doctest::Approx(40.0));
  CHECK(gtc.by_od.at({4, 6}) == doctest::Approx(40.0));
  CHECK(gtc.by_od.at({1, 5}) == doctest::Approx(0.0));
  CHECK(gtc.by_od.at({2, 6}) == doctest::Approx(0.0));
  CHECK(gtc.by_od.at({3, 7}) == doctest::Approx(0.0));

  // without the pinned structure a free redesign does even better
  const RouteGenSolution free_rsol =
      solve_routes(build_route_model(fx.net, fx.sol));
  REQUIRE(free_rsol.status == milp::SolveStatus::Optimal);
  CHECK(free_rsol.objective == doctest::Approx(50.0));
  CHECK(free_rsol.objective <= rsol.objective);
}

TEST_CASE("greedy chaining never beats the optimizer on random networks") {
  std::mt19937_64 rng(424242);
  int exercised = 0;
  for (int trial = 0; trial < 12; ++trial) {
    const zonal_test::Instance inst = zonal_test::random_instance(rng);
    ZonalOptions zopts;
    zopts.budget = 0.0;
    zopts.modes_enabled = inst.modes;
    ZonalSolution sol;
    try {
      sol = solve_zonal(build_zonal_model(inst.costs, inst.demand,
                                          inst.profile, inst.links, zopts));
    } catch (const InfeasibleInput&) {
      continue;
    }
    if (sol.status != milp::SolveStatus::Optimal) continue;
    std::vector<OdPathFlows> paths;
    std::set<int> origins;
    for (const auto& [od, e] : inst.demand.entries)
      if (e > 0) origins.insert(od.first);
    for (int o : origins)
      paths.push_back(disaggregate_od_flows(sol, inst.demand, o));
    for (Mode m : inst.modes) {
      const ModeSpec& spec = inst.profile.mode(m);
      if (!spec.is_transit) continue;
      const SegmentNetwork net =
          derive_segments(sol, m, spec.design_headway, spec.design_occ);
      if (net.segments.empty()) continue;
      const RouteGenModel model = build_route_model(net, sol);
      const RouteGenSolution rsol = solve_routes(model);
      REQUIRE(rsol.status == milp::SolveStatus::Optimal);
      ++exercised;

      // every rounded connection respects the one-per-endpoint rule
      std::map<std::pair<int, int>, int> degree;
      for (const auto& [j, u1, u2] : rsol.connections) {
        degree[{u1, j}] += 1;
        degree[{u2, j}] += 1;
      }
      for (const auto& [uj, d] : degree) CHECK(d <= 1);

      const RoutePlan plan = assemble_routes(rsol, net);
      const TransferCount tc = count_transfers(plan, paths);
      CHECK(tc.total >= rsol.objective - 1e-6);

      const RoutePlan greedy = myopic_routes(net, sol, inst.demand);
      CHECK(greedy.total_transfers >= rsol.objective - 1e-6);

      // every segment belongs to exactly one route
      for (int r : plan.segment_route) CHECK(r >= 0);
    }
  }
  CHECK(exercised >= 5);
}

TEST_CASE("trip totals and boardings stay consistent with the flows") {
  SevenZone fx;
  const RouteGenSolution rsol =
      solve_routes(build_route_model(fx.net, fx.sol));
  REQUIRE(rsol.status == milp::SolveStatus::Optimal);
  const RoutePlan plan = assemble_routes(rsol, fx.net);
  // boardings = starts + received transfers = 150 demand + 50 transfers
  CHECK(plan.total_trips ==
        doctest::Approx(fx.demand.total() + rsol.objective));
  double per_route = 0.0;
  for (const auto& r : plan.routes) per_route += r.trips;
  CHECK(per_route == doctest::Approx(plan.total_trips));
}
