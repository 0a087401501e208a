#pragma once

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "mtnd/cost_model.hpp"
#include "mtnd/milp/model.hpp"
#include "mtnd/zonal.hpp"

namespace mtnd {

struct RouteGenError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One transit mode's flow-bearing links broken into parallel route segments.
struct SegmentNetwork {
  struct Segment {
    int id = 0;
    int a = 0;  // endpoints, a < b
    int b = 0;
  };

  Mode mode = Mode::WALK;
  std::vector<Segment> segments;
  // undirected link (a<b) -> segment ids serving it
  std::map<std::pair<int, int>, std::vector<int>> link_segments;
  // directed link -> flow summed over origins (positive entries only)
  std::map<std::pair<int, int>, double> flow;
  // undirected link -> length, filled when cost tables are supplied
  std::map<std::pair<int, int>, double> length_km;

  bool link_active(int i, int j) const { return flow.count({i, j}) > 0; }
  const std::vector<int>& segments_on(int i, int j) const;
};

// Number of parallel segments per link: flow divided by one route's
// peak-hour capacity (design occupancy over design headway), rounded up.
// For two-way links the heavier direction governs.
SegmentNetwork derive_segments(const ZonalSolution& sol, Mode mode,
                               double design_headway, double design_occ,
                               const CostTables* costs = nullptr);

struct RouteGenOptions {
  // threshold below which a connection counts as carrying no direct flow
  double eps = 1e-7;
  // routes serve both directions; switching this off makes segment
  // connections directional
  bool bidirectional = true;
  // pre-existing route structure: connections pinned closed (junction,
  // segment, segment), e.g. when extending an already-operating network
  std::vector<std::tuple<int, int, int>> fixed_connections;
  // pinned boarding: all start flow of (origin, from, to) uses one segment
  std::map<std::tuple<int, int, int>, int> fixed_boarding;
};

struct RouteGenModel {
  milp::Model model;
  SegmentNetwork net;
  RouteGenOptions opts;
  std::vector<int> origins;

  std::map<std::tuple<int, int, int>, int> connect_var;        // (j,u1,u2)
  std::map<std::tuple<int, int, int, int>, int> start_var;     // (o,i,j,u)
  std::map<std::tuple<int, int, int, int>, int> end_var;       // (o,i,j,u)
  std::map<std::tuple<int, int, int, int>, int> seg_flow_var;  // (o,i,j,u)
  std::map<std::tuple<int, int, int, int>, int> direct_var;    // (o,j,u1,u2)
  std::map<std::tuple<int, int, int, int>, int> transfer_var;  // (o,j,u1,u2)
};

// Minimize within-mode transfers by choosing which segments chain into
// routes, subject to consistency with the zonal flows.
RouteGenModel build_route_model(const SegmentNetwork& net,
                                const ZonalSolution& sol,
                                const RouteGenOptions& opts = {});

struct RouteGenSolution {
  milp::SolveStatus status = milp::SolveStatus::Infeasible;
  double objective = 0.0;  // total within-mode transfers
  double bound = 0.0;
  double gap = 0.0;

  std::set<std::tuple<int, int, int>> connections;  // (j,u1,u2), u1<u2
  std::map<std::tuple<int, int, int, int>, double> start_flows;
  std::map<std::tuple<int, int, int, int>, double> end_flows;
  std::map<std::tuple<int, int, int, int>, double> seg_flows;
  std::map<std::tuple<int, int, int, int>, double> direct_flows;
  std::map<std::tuple<int, int, int, int>, double> transfer_flows;

  bool connected(int j, int u1, int u2) const;
};

RouteGenSolution solve_routes(const RouteGenModel& model,
                              const milp::SolverSettings& settings = {},
                              const MilpSolver& solver = {});

struct RoutePlan {
  struct Route {
    std::vector<int> zones;     // in traversal order
    std::vector<int> segments;  // matching consecutive zone pairs
    double trips = 0.0;         // boardings
    double length_km = 0.0;
  };

  Mode mode = Mode::WALK;
  std::vector<Route> routes;
  std::vector<int> segment_route;  // segment id -> route index
  double total_transfers = 0.0;
  double total_trips = 0.0;
  double avg_length_km = 0.0;
  std::vector<std::string> warnings;
};

// Chain connected segments into routes; a connection cycle is broken at its
// smallest zone with a warning.
RoutePlan assemble_routes(const RouteGenSolution& rsol,
                          const SegmentNetwork& net);

// Greedy baseline: junctions in descending order of total through flow
// (ties by zone id); at each junction connect the free segment pair serving
// the highest remaining through flow (ties by segment ids).
RoutePlan myopic_routes(const SegmentNetwork& net, const ZonalSolution& sol,
                        const DemandMatrix& demand);

struct TransferCount {
  double total = 0.0;
  std::map<std::pair<int, int>, double> by_od;
  std::map<int, double> route_boardings;  // route index -> boardings
};

// Independent recount: walk each decomposed path through the plan, choosing
// segments to minimize route changes; each change adds the path's flow.
TransferCount count_transfers(const RoutePlan& plan,
                              const std::vector<OdPathFlows>& paths);

}  // namespace mtnd
