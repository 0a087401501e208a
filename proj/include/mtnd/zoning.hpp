#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "mtnd/geometry.hpp"
#include "mtnd/params.hpp"

namespace mtnd {

struct InfeasibleInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Maz {
  std::int64_t id = 0;
  Point position;       // km
  double trips = 0.0;   // trips/h starting or ending here
};

struct ZonePartition {
  std::vector<Maz> mazs;
  std::vector<int> assignment;     // mazs[i] -> zone index
  std::vector<Point> centroids;    // trip^2-weighted means
  double objective = 0.0;          // sum w * ||a - mu||^2
  int k = 0;
};

struct Zone {
  int id = 0;
  Point centroid;
  double length = 0.0;             // characteristic length l_i, km
  bool is_city = false;
  std::vector<std::int64_t> members;
  Polygon cell;                    // bounded Voronoi cell
};

struct DemandMatrix {
  int zones = 0;
  std::map<std::pair<int, int>, double> entries;  // (o,d) -> trips/h
  double dropped_intrazonal = 0.0;
  double peripheral_remapped = 0.0;

  double at(int o, int d) const;
  void add(int o, int d, double trips);
  double total() const;
};

struct CandidateLinkSet {
  // Per mode: symmetric set of ordered zone pairs with existing-link counts.
  std::map<Mode, std::map<std::pair<int, int>, int>> links;

  bool contains(Mode m, int i, int j) const;
  int exist_count(Mode m, int i, int j) const;
  void insert(Mode m, int i, int j, int exist = 0);
  std::vector<std::pair<int, int>> directed_links(Mode m) const;
};

struct ExistingNetwork {
  // Per infrastructure mode: polylines in km coordinates.
  std::map<Mode, std::vector<std::vector<Point>>> polylines;
};

// Lloyd's algorithm, trip^2-weighted, k-means++ seeding, multiple restarts
// merged by (objective, seed index).  Deterministic given rng_seed.
ZonePartition cluster_zones(const std::vector<Maz>& mazs, int k,
                            std::uint64_t rng_seed, int restarts = 20);

// Brute-force optimum of the clustering objective over all k-partitions.
// Test oracle; only viable for small inputs.
double brute_force_cluster_objective(const std::vector<Maz>& mazs, int k);

// Voronoi cells from centroids (clipped to the MAZ bounding box inflated by
// 10%), characteristic lengths, and city classification.
std::vector<Zone> derive_zone_geometry(const ZonePartition& partition,
                                       const Polygon& city_boundary);

// Characteristic length rule: twice the trip-weighted mean of the axis-mean
// one-dimensional exit distance of member MAZs (s/2 for a uniform square).
double zone_characteristic_length(const Polygon& cell,
                                  const std::vector<Point>& positions,
                                  const std::vector<double>& weights);

struct MazTrip {
  std::int64_t origin = 0;
  std::int64_t dest = 0;
  double trips = 0.0;
};

// Peripheral MAZs (known location, excluded from clustering) are accepted
// when the peripheral rule is on and mapped to the nearest centroid.
DemandMatrix aggregate_demand(const std::vector<MazTrip>& maz_od,
                              const ZonePartition& partition,
                              bool peripheral_rule,
                              const std::vector<Maz>& peripheral = {});

CandidateLinkSet generate_candidate_links(const std::vector<Zone>& zones,
                                          const VoronoiDiagram& voronoi,
                                          const DemandMatrix& demand,
                                          const CandidateLinkSet& existing,
                                          const std::vector<Mode>& modes,
                                          int n_adj, int n_direct);

VoronoiDiagram zone_voronoi(const std::vector<Zone>& zones);

}  // namespace mtnd
