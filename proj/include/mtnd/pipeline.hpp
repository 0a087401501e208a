#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "mtnd/cost_model.hpp"
#include "mtnd/params.hpp"
#include "mtnd/route_gen.hpp"
#include "mtnd/zonal.hpp"
#include "mtnd/zoning.hpp"

namespace mtnd {

// Input/configuration problems (CLI exit code 3).  Infeasible scenarios
// raise InfeasibleInput (exit code 2).
struct PipelineError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ScenarioConfig {
  ParameterProfile profile;
  int k = 2;                      // zones to cluster into
  std::vector<Mode> modes;        // interzonal modes enabled
  ZonalOptions zonal;             // budget lives here
  milp::SolverSettings solver;
  std::string solver_command;     // empty: built-in branch and bound
  int n_adjacent = 1;             // candidate links per adjacency ring
  int n_direct = 3;               // extra demand-ranked direct links
  bool peripheral_rule = false;
  double trips_scale = 1.0;       // applied to every O-D entry at load
  std::uint64_t rng_seed = 0;
  int cluster_restarts = 20;
  Polygon city_boundary;          // empty: bounding box of the seed points

  std::string maz_path;           // zone seeds: id, position, trips
  std::string trips_path;         // O-D trip table between seed ids
  std::string network_path;       // optional existing-network GeoJSON
  std::string out_dir = "out";
};

ScenarioConfig parse_scenario_config(const std::string& json_text,
                                     const std::string& base_dir);
ScenarioConfig load_scenario_config(const std::string& path);

std::vector<Maz> load_mazs(const std::string& path);
std::vector<MazTrip> load_maz_trips(const std::string& path,
                                    double scale = 1.0);
ExistingNetwork load_existing_network(const std::string& path);

// Map each polyline to the Voronoi cells it crosses; every consecutive zone
// pair gets one existing connection per line, both directions.  Lines
// touching no cell are skipped with a warning.
CandidateLinkSet import_existing_network(const ExistingNetwork& net,
                                         const std::vector<Zone>& zones,
                                         const VoronoiDiagram& voronoi,
                                         std::vector<std::string>* warnings =
                                             nullptr);

struct ModeRouteResult {
  Mode mode = Mode::WALK;
  SegmentNetwork net;
  RoutePlan optimized;
  RoutePlan greedy;
  double objective = 0.0;         // optimized intramodal transfers
  double gap = 0.0;
};

struct ScenarioBundle {
  ScenarioConfig config;
  std::vector<Maz> mazs;
  ZonePartition partition;
  std::vector<Zone> zones;
  VoronoiDiagram voronoi;
  DemandMatrix demand;
  CandidateLinkSet links;
  std::vector<std::string> import_warnings;
  CostTables costs;
  ZonalSolution solution;
  ValidationReport validation;
  ScenarioMetrics metrics;
  std::vector<OdPathFlows> paths;     // one entry per origin with demand
  std::vector<ModeRouteResult> routes;
  double wall_seconds = 0.0;
};

// cluster -> geometry -> demand -> links -> costs -> zonal MILP ->
// disaggregation -> per-mode routes -> metrics.  Any stage error is
// rethrown with the stage name prefixed.
ScenarioBundle run_scenario(const ScenarioConfig& config);

// Write every artifact (stage documents, GeoJSON, tables, report) plus a
// manifest listing each file with a content hash.
void write_bundle(const ScenarioBundle& bundle);

std::string emit_report(const ScenarioBundle& bundle);

// 64-bit FNV-1a, lower-case hex; used for manifest content hashes.
std::string content_hash(const std::string& data);

int run_cli(int argc, char** argv);

}  // namespace mtnd
