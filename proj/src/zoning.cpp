#include "mtnd/zoning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <sstream>

namespace mtnd {

double DemandMatrix::at(int o, int d) const {
  const auto it = entries.find({o, d});
  return it == entries.end() ? 0.0 : it->second;
}

void DemandMatrix::add(int o, int d, double trips) {
  if (trips == 0.0) return;
  entries[{o, d}] += trips;
}

double DemandMatrix::total() const {
  double t = 0.0;
  for (const auto& [od, v] : entries) t += v;
  return t;
}

bool CandidateLinkSet::contains(Mode m, int i, int j) const {
  const auto it = links.find(m);
  return it != links.end() && it->second.count({i, j}) > 0;
}

int CandidateLinkSet::exist_count(Mode m, int i, int j) const {
  const auto it = links.find(m);
  if (it == links.end()) return 0;
  const auto jt = it->second.find({i, j});
  return jt == it->second.end() ? 0 : jt->second;
}

void CandidateLinkSet::insert(Mode m, int i, int j, int exist) {
  if (i == j) return;
  int& fwd = links[m][{i, j}];
  int& bwd = links[m][{j, i}];
  fwd = std::max(fwd, exist);
  bwd = std::max(bwd, exist);
}

std::vector<std::pair<int, int>> CandidateLinkSet::directed_links(
    Mode m) const {
  std::vector<std::pair<int, int>> out;
  const auto it = links.find(m);
  if (it == links.end()) return out;
  out.reserve(it->second.size());
  for (const auto& [ij, cnt] : it->second) out.push_back(ij);
  return out;
}

namespace {

double weight_of(const Maz& a) { return a.trips * a.trips; }

struct KmeansRun {
  std::vector<int> assignment;
  std::vector<Point> centroids;
  double objective = std::numeric_limits<double>::max();
};

double assignment_objective(const std::vector<Maz>& mazs,
                            const std::vector<int>& assignment,
                            std::vector<Point>& centroids, int k) {
  std::vector<double> wsum(static_cast<std::size_t>(k), 0.0);
  std::vector<Point> acc(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < mazs.size(); ++i) {
    const double w = weight_of(mazs[i]);
    const auto c = static_cast<std::size_t>(assignment[i]);
    wsum[c] += w;
    acc[c] = acc[c] + w * mazs[i].position;
  }
  for (int c = 0; c < k; ++c) {
    const auto ci = static_cast<std::size_t>(c);
    if (wsum[ci] > 0.0) {
      centroids[ci] = (1.0 / wsum[ci]) * acc[ci];
    } else {
      // All-zero-weight cluster: plain mean of members.
      Point sum{};
      int n = 0;
      for (std::size_t i = 0; i < mazs.size(); ++i)
        if (assignment[i] == c) {
          sum = sum + mazs[i].position;
          ++n;
        }
      if (n > 0) centroids[ci] = (1.0 / n) * sum;
    }
  }
  double obj = 0.0;
  for (std::size_t i = 0; i < mazs.size(); ++i)
    obj += weight_of(mazs[i]) *
           squared_distance(mazs[i].position,
                            centroids[static_cast<std::size_t>(assignment[i])]);
  return obj;
}

KmeansRun lloyd_run(const std::vector<Maz>& mazs, int k, std::mt19937_64& rng) {
  const std::size_t n = mazs.size();
  // k-means++ seeding, weighted by trips^2 (floor at uniform when all zero).
  std::vector<double> base(n);
  double wtot = 0.0;
  for (std::size_t i = 0; i < n; ++i) wtot += weight_of(mazs[i]);
  for (std::size_t i = 0; i < n; ++i)
    base[i] = wtot > 0.0 ? weight_of(mazs[i]) : 1.0;

  std::vector<Point> centroids;
  std::vector<double> d2(n, std::numeric_limits<double>::max());
  {
    std::vector<double> probs = base;
    std::discrete_distribution<std::size_t> first(probs.begin(), probs.end());
    centroids.push_back(mazs[first(rng)].position);
  }
  while (static_cast<int>(centroids.size()) < k) {
    double sum = 0.0;
    std::vector<double> probs(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(mazs[i].position,
                                               centroids.back()));
      probs[i] = base[i] * d2[i];
      sum += probs[i];
    }
    if (sum <= 0.0) {
      // Remaining points coincide with chosen centroids; pick any unused
      // distinct position deterministically.
      std::size_t pick = 0;
      for (std::size_t i = 0; i < n; ++i)
        if (d2[i] > 0.0) { pick = i; break; }
      centroids.push_back(mazs[pick].position);
      continue;
    }
    std::discrete_distribution<std::size_t> dist(probs.begin(), probs.end());
    centroids.push_back(mazs[dist(rng)].position);
  }

  KmeansRun run;
  run.centroids = centroids;
  run.assignment.assign(n, 0);
  std::vector<int> prev(n, -1);
  for (int iter = 0; iter < 500; ++iter) {
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double bd = squared_distance(mazs[i].position, run.centroids[0]);
      for (int c = 1; c < k; ++c) {
        const double d = squared_distance(
            mazs[i].position, run.centroids[static_cast<std::size_t>(c)]);
        if (d < bd - 1e-15) {
          bd = d;
          best = c;
        }
      }
      run.assignment[i] = best;
    }
    // Revive empty clusters at the worst-served point.
    std::vector<int> count(static_cast<std::size_t>(k), 0);
    for (int a : run.assignment) ++count[static_cast<std::size_t>(a)];
    for (int c = 0; c < k; ++c) {
      if (count[static_cast<std::size_t>(c)] > 0) continue;
      std::size_t worst = 0;
      double wd = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (count[static_cast<std::size_t>(run.assignment[i])] <= 1) continue;
        const double d =
            base[i] * squared_distance(
                          mazs[i].position,
                          run.centroids[static_cast<std::size_t>(
                              run.assignment[i])]);
        if (d > wd) {
          wd = d;
          worst = i;
        }
      }
      --count[static_cast<std::size_t>(run.assignment[worst])];
      run.assignment[worst] = c;
      ++count[static_cast<std::size_t>(c)];
      run.centroids[static_cast<std::size_t>(c)] = mazs[worst].position;
    }
    if (run.assignment == prev) break;
    prev = run.assignment;
    run.objective = assignment_objective(mazs, run.assignment, run.centroids, k);
  }
  run.objective = assignment_objective(mazs, run.assignment, run.centroids, k);
  return run;
}

}  // namespace

ZonePartition cluster_zones(const std::vector<Maz>& mazs, int k,
                            std::uint64_t rng_seed, int restarts) {
  if (k < 1) throw InfeasibleInput("k must be positive");
  std::set<std::pair<double, double>> distinct;
  for (const Maz& a : mazs) {
    if (a.trips < 0.0) throw InfeasibleInput("negative trips at MAZ " +
                                             std::to_string(a.id));
    distinct.insert({a.position.x, a.position.y});
  }
  if (static_cast<std::size_t>(k) > distinct.size())
    throw InfeasibleInput("k=" + std::to_string(k) + " exceeds " +
                          std::to_string(distinct.size()) +
                          " distinct MAZ positions");

  KmeansRun best;
  int best_restart = -1;
  for (int r = 0; r < restarts; ++r) {
    std::mt19937_64 rng(rng_seed + static_cast<std::uint64_t>(r) * 0x9e3779b9ULL);
    KmeansRun run = lloyd_run(mazs, k, rng);
    if (run.objective < best.objective - 1e-12 ||
        (std::abs(run.objective - best.objective) <= 1e-12 &&
         best_restart < 0)) {
      best = std::move(run);
      best_restart = r;
    }
  }
  ZonePartition part;
  part.mazs = mazs;
  part.assignment = best.assignment;
  part.centroids = best.centroids;
  part.objective = best.objective;
  part.k = k;
  return part;
}

double brute_force_cluster_objective(const std::vector<Maz>& mazs, int k) {
  const std::size_t n = mazs.size();
  if (n > 12) throw InfeasibleInput("brute force limited to 12 points");
  std::vector<int> assign(n, 0);
  double best = std::numeric_limits<double>::max();
  std::vector<Point> centroids(static_cast<std::size_t>(k));
  const std::size_t total = [&] {
    std::size_t t = 1;
    for (std::size_t i = 0; i < n; ++i) t *= static_cast<std::size_t>(k);
    return t;
  }();
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t c = code;
    std::vector<bool> used(static_cast<std::size_t>(k), false);
    for (std::size_t i = 0; i < n; ++i) {
      assign[i] = static_cast<int>(c % static_cast<std::size_t>(k));
      used[static_cast<std::size_t>(assign[i])] = true;
      c /= static_cast<std::size_t>(k);
    }
    if (std::find(used.begin(), used.end(), false) != used.end()) continue;
    best = std::min(best, assignment_objective(mazs, assign, centroids, k));
  }
  return best;
}

double zone_characteristic_length(const Polygon& cell,
                                  const std::vector<Point>& positions,
                                  const std::vector<double>& weights) {
  if (cell.size() < 3 || positions.empty()) return 1e-6;
  double wsum = 0.0;
  for (double w : weights) wsum += w;
  double acc = 0.0;
  double used_w = 0.0;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const double w = wsum > 0.0 ? weights[i] : 1.0;
    if (w <= 0.0) continue;
    const Point p = positions[i];
    auto axis_exit = [&](Point dir) {
      const auto fwd = ray_exit_distance(p, dir, cell);
      const auto bwd = ray_exit_distance(p, {-dir.x, -dir.y}, cell);
      if (fwd && bwd) return std::min(*fwd, *bwd);
      return distance_to_boundary(p, cell);
    };
    const double d = 0.5 * (axis_exit({1.0, 0.0}) + axis_exit({0.0, 1.0}));
    acc += w * d;
    used_w += w;
  }
  if (used_w <= 0.0) {
    // All weights zero: unweighted over member positions.
    for (const Point& p : positions) {
      const auto fx = ray_exit_distance(p, {1.0, 0.0}, cell);
      const auto bx = ray_exit_distance(p, {-1.0, 0.0}, cell);
      const auto fy = ray_exit_distance(p, {0.0, 1.0}, cell);
      const auto by = ray_exit_distance(p, {0.0, -1.0}, cell);
      double dx = (fx && bx) ? std::min(*fx, *bx)
                             : distance_to_boundary(p, cell);
      double dy = (fy && by) ? std::min(*fy, *by)
                             : distance_to_boundary(p, cell);
      acc += 0.5 * (dx + dy);
      used_w += 1.0;
    }
  }
  const double l = 2.0 * acc / used_w;
  return std::max(l, 1e-6);
}

std::vector<Zone> derive_zone_geometry(const ZonePartition& partition,
                                       const Polygon& city_boundary) {
  std::vector<Point> positions;
  positions.reserve(partition.mazs.size());
  for (const Maz& a : partition.mazs) positions.push_back(a.position);
  const BoundingBox box = bounding_box(positions).inflated(0.10);
  const VoronoiDiagram vd = bounded_voronoi(partition.centroids, box);

  std::vector<Zone> zones(static_cast<std::size_t>(partition.k));
  for (int z = 0; z < partition.k; ++z) {
    const auto zi = static_cast<std::size_t>(z);
    Zone& zone = zones[zi];
    zone.id = z;
    zone.centroid = partition.centroids[zi];
    zone.cell = vd.cells[zi];
    zone.is_city = !city_boundary.empty() &&
                   point_in_polygon(zone.centroid, city_boundary);
    std::vector<Point> pts;
    std::vector<double> w;
    for (std::size_t i = 0; i < partition.mazs.size(); ++i)
      if (partition.assignment[i] == z) {
        zone.members.push_back(partition.mazs[i].id);
        pts.push_back(partition.mazs[i].position);
        w.push_back(partition.mazs[i].trips);
      }
    zone.length = zone_characteristic_length(zone.cell, pts, w);
  }
  return zones;
}

DemandMatrix aggregate_demand(const std::vector<MazTrip>& maz_od,
                              const ZonePartition& partition,
                              bool peripheral_rule,
                              const std::vector<Maz>& peripheral) {
  std::map<std::int64_t, int> zone_of;
  for (std::size_t i = 0; i < partition.mazs.size(); ++i)
    zone_of[partition.mazs[i].id] = partition.assignment[i];

  const auto nearest_zone = [&](Point p) {
    int best = 0;
    double bd = std::numeric_limits<double>::max();
    for (std::size_t c = 0; c < partition.centroids.size(); ++c) {
      const double d = squared_distance(p, partition.centroids[c]);
      if (d < bd) {
        bd = d;
        best = static_cast<int>(c);
      }
    }
    return best;
  };

  std::map<std::int64_t, Point> position_of;
  for (const Maz& a : peripheral) position_of[a.id] = a.position;

  DemandMatrix dm;
  dm.zones = partition.k;
  std::set<std::int64_t> unmapped;
  auto resolve = [&](std::int64_t id, bool& ok) -> int {
    const auto it = zone_of.find(id);
    if (it != zone_of.end()) {
      ok = true;
      return it->second;
    }
    const auto pit = position_of.find(id);
    if (peripheral_rule && pit != position_of.end()) {
      ok = true;
      return nearest_zone(pit->second);
    }
    ok = false;
    unmapped.insert(id);
    return -1;
  };

  for (const MazTrip& t : maz_od) {
    bool ok_o = false, ok_d = false;
    const int o = resolve(t.origin, ok_o);
    const int d = resolve(t.dest, ok_d);
    if (!ok_o || !ok_d) continue;
    const bool remapped = (zone_of.find(t.origin) == zone_of.end() ||
                           zone_of.find(t.dest) == zone_of.end());
    if (o == d) {
      dm.dropped_intrazonal += t.trips;
    } else {
      dm.add(o, d, t.trips);
      if (remapped) dm.peripheral_remapped += t.trips;
    }
  }
  if (!unmapped.empty()) {
    std::ostringstream os;
    os << "unmapped MAZ ids:";
    for (std::int64_t id : unmapped) os << ' ' << id;
    throw InfeasibleInput(os.str());
  }
  return dm;
}

VoronoiDiagram zone_voronoi(const std::vector<Zone>& zones) {
  std::vector<Point> sites;
  std::vector<Point> verts;
  for (const Zone& z : zones) {
    sites.push_back(z.centroid);
    for (const Point& p : z.cell) verts.push_back(p);
  }
  const BoundingBox box = bounding_box(verts.empty() ? sites : verts);
  return bounded_voronoi(sites, box);
}

CandidateLinkSet generate_candidate_links(const std::vector<Zone>& zones,
                                          const VoronoiDiagram& voronoi,
                                          const DemandMatrix& demand,
                                          const CandidateLinkSet& existing,
                                          const std::vector<Mode>& modes,
                                          int n_adj, int n_direct) {
  const int n = static_cast<int>(zones.size());
  CandidateLinkSet out;
  for (Mode m : modes) {
    auto& lm = out.links[m];
    (void)lm;
    for (int i = 0; i < n; ++i) {
      // 1. Proximity: Voronoi-interfacing zones plus nearest n_adj.
      for (int j : voronoi.neighbors[static_cast<std::size_t>(i)])
        out.insert(m, i, j);
      std::vector<std::pair<double, int>> by_dist;
      for (int j = 0; j < n; ++j)
        if (j != i)
          by_dist.push_back({distance(zones[static_cast<std::size_t>(i)].centroid,
                                      zones[static_cast<std::size_t>(j)].centroid),
                             j});
      std::sort(by_dist.begin(), by_dist.end());
      for (int q = 0; q < n_adj && q < static_cast<int>(by_dist.size()); ++q)
        out.insert(m, i, by_dist[static_cast<std::size_t>(q)].second);
      // 2. Demand: n_direct zones with the highest bidirectional O-D.
      std::vector<std::pair<double, int>> by_demand;
      for (int j = 0; j < n; ++j)
        if (j != i) {
          const double e = demand.at(i, j) + demand.at(j, i);
          if (e > 0.0) by_demand.push_back({-e, j});
        }
      std::sort(by_demand.begin(), by_demand.end());
      for (int q = 0; q < n_direct && q < static_cast<int>(by_demand.size());
           ++q)
        out.insert(m, i, by_demand[static_cast<std::size_t>(q)].second);
    }
    // 3. Existing direct transit connections.
    const auto it = existing.links.find(m);
    if (it != existing.links.end())
      for (const auto& [ij, cnt] : it->second)
        out.insert(m, ij.first, ij.second, 0);
  }
  // x^exist counts (infrastructure modes only).
  for (const auto& [m, lm] : existing.links) {
    for (const auto& [ij, cnt] : lm)
      if (cnt > 0 && out.links.count(m) > 0)
        out.links[m][ij] = cnt;
  }
  return out;
}

}  // namespace mtnd
