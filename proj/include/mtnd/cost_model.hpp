#pragma once

#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mtnd/params.hpp"
#include "mtnd/zoning.hpp"

namespace mtnd {

struct CostModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// All arc costs of the multimodal network, indexed by mode/zone/link.
struct CostTables {
  struct ZoneCosts {
    double start = 0.0;         // t^alpha, h
    double end = 0.0;           // t^beta, h
    double feeder_share = 0.0;  // eta in [0,1]
    double feeder_dist = 0.0;   // d^f, km
    double feeder_time = 0.0;   // t^f, h
    double through_time = 0.0;  // t^thr, h
  };
  struct LinkCosts {
    double clear_dist = 0.0;    // d^clear, km
    double clear_time = 0.0;    // t^clear, h
    double dist = 0.0;          // d^lambda, km
    double time = 0.0;          // t^lambda, h
  };

  std::map<Mode, std::vector<ZoneCosts>> zone;            // per (mode, zone)
  std::map<std::pair<Mode, Mode>, std::vector<double>> transfer;  // per zone
  std::map<Mode, std::map<std::pair<int, int>, LinkCosts>> link;

  const ZoneCosts& at(Mode m, int zone_id) const;
  double transfer_cost(Mode m1, Mode m2, int zone_id) const;
  const LinkCosts& link_cost(Mode m, int i, int j) const;
};

// Interzonal speed for a link; city/suburb blend is the arithmetic mean of
// the two zones' class speeds.
double link_speed(const ModeSpec& mode, bool city_i, bool city_j);

double clear_time(const ModeSpec& mode, double clear_dist, bool city_i,
                  bool city_j);
double through_time(const ModeSpec& mode, const Zone& zone);
double feeder_share(const ModeSpec& mode, const Zone& zone, double walk_speed);
std::pair<double, double> feeder_dist_time(const ModeSpec& mode,
                                           const Zone& zone);
std::pair<double, double> start_end_costs(const ModeSpec& mode,
                                          const Zone& zone,
                                          const GlobalParams& g);
double transfer_cost(const ModeSpec& from, const ModeSpec& to,
                     const GlobalParams& g);
std::pair<double, double> interzonal(const ModeSpec& mode, const Zone& zi,
                                     const Zone& zj, double clear_dist);

// Minimum Euclidean clearance between the two zones' Voronoi cells.
double clear_distance(const Zone& zi, const Zone& zj);

CostTables build_cost_tables(const std::vector<Zone>& zones,
                             const ParameterProfile& profile,
                             const std::vector<Mode>& modes,
                             const CandidateLinkSet& links);

}  // namespace mtnd
