#pragma once

#include <functional>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "mtnd/cost_model.hpp"
#include "mtnd/milp/model.hpp"
#include "mtnd/params.hpp"
#include "mtnd/zoning.hpp"

namespace mtnd {

struct ZonalOptions {
  double budget = 0.0;
  // Drop the link capacity coupling and post-validate it instead.
  bool include_capacity = true;
  // Lower-bound active links' flow so operating-cost economies hold.
  bool include_min_flow = false;
  // Forbid per-origin flow in both directions of a link (requires the
  // minimum-flow option, whose artifacts it exists to suppress).
  bool include_no_backflow = false;
  std::vector<Mode> modes_enabled;
};

// Model plus the variable index needed to decode a solution.
struct ZonalModel {
  milp::Model model;
  int zones = 0;
  std::vector<Mode> modes;
  ZonalOptions opts;

  std::map<std::pair<int, Mode>, int> start_var;                 // (o,m)
  std::map<std::tuple<int, Mode, int>, int> end_var;             // (o,m,d)
  std::map<std::tuple<int, Mode, int, int>, int> link_var;       // (o,m,i,j)
  std::map<std::tuple<int, Mode, Mode, int>, int> transfer_var;  // (o,m1,m2,i)
  std::map<std::tuple<Mode, int, int>, int> connection_var;      // m, i<j
  std::map<std::tuple<Mode, int, int>, int> build_var;           // m, i<j
  std::map<std::tuple<int, int, int>, int> direction_var;        // (o,i,j)
};

struct ZonalSolution {
  milp::SolveStatus status = milp::SolveStatus::Infeasible;
  double objective = 0.0;
  double bound = 0.0;
  double gap = 0.0;

  std::map<std::pair<int, Mode>, double> start_flows;
  std::map<std::tuple<int, Mode, int>, double> end_flows;
  std::map<std::tuple<int, Mode, int, int>, double> link_flows;
  std::map<std::tuple<int, Mode, Mode, int>, double> transfer_flows;
  std::map<std::tuple<Mode, int, int>, int> connections;  // both directions
  std::map<std::tuple<Mode, int, int>, int> new_links;
  std::map<std::tuple<int, int, int>, int> direction;     // (o,i,j) binary

  double start_flow(int o, Mode m) const;
  double end_flow(int o, Mode m, int d) const;
  double link_flow(int o, Mode m, int i, int j) const;
  double transfer_flow(int o, Mode m1, Mode m2, int i) const;
  int connection(Mode m, int i, int j) const;
};

// One decomposed origin-destination path: interzonal arcs in travel order,
// mode switches implied by consecutive arcs' modes.
struct OdPath {
  struct Arc {
    Mode mode = Mode::WALK;
    int from = 0;
    int to = 0;
  };
  int origin = 0;
  int dest = 0;
  double flow = 0.0;
  std::vector<Arc> arcs;
};

struct OdPathFlows {
  int origin = 0;
  std::map<int, std::vector<OdPath>> by_dest;
};

struct ScenarioMetrics {
  double total_trips = 0.0;
  double avg_generalized_cost = 0.0;  // $/trip
  double avg_journey_min = 0.0;
  double avg_start_min = 0.0;
  double avg_interzonal_min = 0.0;
  double avg_end_min = 0.0;
  double transfers_per_trip = 0.0;
  double op_cost_per_trip = 0.0;
  double em_cost_per_trip = 0.0;

  struct PerMode {
    double trips = 0.0;              // boardings: starts + received transfers
    double passenger_km = 0.0;
    double split_by_trips = 0.0;     // percent
    double split_by_distance = 0.0;  // percent
    double avg_trip_km = 0.0;
    double speed_kmh = 0.0;          // including dwell
    double op_cost_per_pax_km = 0.0;
  };
  std::map<Mode, PerMode> per_mode;
};

struct Violation {
  std::string constraint;
  std::string index;
  double magnitude = 0.0;
};

struct ValidationReport {
  std::vector<Violation> violations;
  std::vector<std::string> notes;  // informational, not failures
  bool ok() const { return violations.empty(); }
};

// Multi-commodity network flow model over the candidate links; commodities
// are origin zones.  Throws InfeasibleInput when a demand pair has no
// multimodal path (checked by per-origin reachability before building).
ZonalModel build_zonal_model(const CostTables& costs, const DemandMatrix& demand,
                             const ParameterProfile& profile,
                             const CandidateLinkSet& links,
                             const ZonalOptions& opts);

using MilpSolver = std::function<milp::Solution(const milp::Model&)>;

ZonalSolution solve_zonal(const ZonalModel& zm,
                          const milp::SolverSettings& settings = {},
                          const MilpSolver& solver = {});

// Deterministic flow decomposition of one origin's flow tree into
// per-destination paths; path flows per destination sum to the demand.
OdPathFlows disaggregate_od_flows(const ZonalSolution& sol,
                                  const DemandMatrix& demand, int origin,
                                  double feas_tol = 1e-6);

ScenarioMetrics summarize(const ZonalSolution& sol, const DemandMatrix& demand,
                          const CostTables& costs,
                          const ParameterProfile& profile);

ValidationReport validate_zonal(const ZonalSolution& sol,
                                const DemandMatrix& demand,
                                const ParameterProfile& profile,
                                const CostTables& costs,
                                const CandidateLinkSet& links,
                                const ZonalOptions& opts,
                                double feas_tol = 1e-6);

}  // namespace mtnd
