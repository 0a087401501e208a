#include "mtnd/cost_model.hpp"

#include <algorithm>
#include <cmath>

namespace mtnd {

const CostTables::ZoneCosts& CostTables::at(Mode m, int zone_id) const {
  const auto it = zone.find(m);
  if (it == zone.end() ||
      zone_id >= static_cast<int>(it->second.size()) || zone_id < 0)
    throw CostModelError("no zone costs for mode " + mode_name(m));
  return it->second[static_cast<std::size_t>(zone_id)];
}

double CostTables::transfer_cost(Mode m1, Mode m2, int zone_id) const {
  const auto it = transfer.find({m1, m2});
  if (it == transfer.end() ||
      zone_id >= static_cast<int>(it->second.size()) || zone_id < 0)
    throw CostModelError("no transfer cost " + mode_name(m1) + "->" +
                         mode_name(m2));
  return it->second[static_cast<std::size_t>(zone_id)];
}

const CostTables::LinkCosts& CostTables::link_cost(Mode m, int i, int j) const {
  const auto it = link.find(m);
  if (it != link.end()) {
    const auto jt = it->second.find({i, j});
    if (jt != it->second.end()) return jt->second;
  }
  throw CostModelError("no link cost " + mode_name(m) + " " +
                       std::to_string(i) + "->" + std::to_string(j));
}

double link_speed(const ModeSpec& mode, bool city_i, bool city_j) {
  if (city_i == city_j) return mode.speed(city_i);
  return 0.5 * (mode.speed_city + mode.speed_suburb);
}

double clear_time(const ModeSpec& mode, double clear_dist, bool city_i,
                  bool city_j) {
  if (clear_dist < 0.0) throw CostModelError("negative clear distance");
  return clear_dist / link_speed(mode, city_i, city_j);
}

double through_time(const ModeSpec& mode, const Zone& zone) {
  if (zone.length <= 0.0) return 0.0;
  const double travel = mode.detour * zone.length / mode.speed(zone.is_city);
  // SAV has no station spacing; its dwell applies once per traversal.
  const double stops = mode.station_spacing > 0.0
                           ? zone.length / mode.station_spacing
                           : (mode.mode == Mode::SAV ? 1.0 : 0.0);
  return travel + stops * mode.dwell;
}

double feeder_share(const ModeSpec& mode, const Zone& zone,
                    double walk_speed) {
  if (mode.mode == Mode::SAV) return 1.0;
  if (!mode.is_transit) return 0.0;
  if (zone.length <= 0.0 || mode.station_spacing <= 0.0)
    throw CostModelError("feeder_share needs positive zone length and spacing");
  const double covered = walk_speed * mode.walk_access_time;
  const double eta =
      1.0 - 8.0 * covered * covered / (zone.length * mode.station_spacing);
  return std::clamp(eta, 0.0, 1.0);
}

std::pair<double, double> feeder_dist_time(const ModeSpec& mode,
                                           const Zone& zone) {
  const double dist = mode.feeder_detour * zone.length / 4.0;
  const double time = dist / mode.feeder_speed(zone.is_city) +
                      (mode.feeder_design_occ - 1.0) / 2.0 * mode.feeder_dwell;
  return {dist, time};
}

std::pair<double, double> start_end_costs(const ModeSpec& mode,
                                          const Zone& zone,
                                          const GlobalParams& g) {
  const double eta = feeder_share(mode, zone, g.walk_speed);
  const double feeder_time = feeder_dist_time(mode, zone).second;
  const double walk = (1.0 - eta) * g.walk_coeff * mode.walk_access_time;
  const double feeder = eta * (g.wait_coeff * mode.feeder_wait + feeder_time);
  const double start = walk + feeder + g.wait_coeff * mode.wait;
  const double end = walk + feeder;
  if (start < 0.0 || end < 0.0)
    throw CostModelError("negative start/end cost for " + mode_name(mode.mode));
  return {start, end};
}

double transfer_cost(const ModeSpec& from, const ModeSpec& to,
                     const GlobalParams& g) {
  if (from.mode == to.mode)
    throw CostModelError("intramodal transfer requested for " +
                         mode_name(from.mode));
  return g.walk_coeff * g.transfer_time(from.mode, to.mode) +
         g.wait_coeff * to.wait;
}

std::pair<double, double> interzonal(const ModeSpec& mode, const Zone& zi,
                                     const Zone& zj, double clear_dist) {
  const double dist =
      0.5 * (zi.length + zj.length) * mode.detour + clear_dist;
  const double time =
      0.5 * (through_time(mode, zi) + through_time(mode, zj)) +
      clear_time(mode, clear_dist, zi.is_city, zj.is_city);
  return {dist, time};
}

double clear_distance(const Zone& zi, const Zone& zj) {
  if (zi.cell.empty() || zj.cell.empty())
    return std::max(0.0, distance(zi.centroid, zj.centroid));
  return convex_polygon_distance(zi.cell, zj.cell);
}

CostTables build_cost_tables(const std::vector<Zone>& zones,
                             const ParameterProfile& profile,
                             const std::vector<Mode>& modes,
                             const CandidateLinkSet& links) {
  CostTables t;
  const GlobalParams& g = profile.globals;
  for (Mode m : modes) {
    const ModeSpec& spec = profile.mode(m);
    auto& zc = t.zone[m];
    zc.resize(zones.size());
    for (std::size_t z = 0; z < zones.size(); ++z) {
      const Zone& zone = zones[z];
      auto [d_f, t_f] = feeder_dist_time(spec, zone);
      auto [alpha, beta] = start_end_costs(spec, zone, g);
      zc[z].feeder_share = feeder_share(spec, zone, g.walk_speed);
      zc[z].feeder_dist = d_f;
      zc[z].feeder_time = t_f;
      zc[z].through_time = through_time(spec, zone);
      zc[z].start = alpha;
      zc[z].end = beta;
    }
  }
  for (Mode m1 : modes)
    for (Mode m2 : modes) {
      if (m1 == m2) continue;
      auto& tc = t.transfer[{m1, m2}];
      tc.resize(zones.size());
      const double c = transfer_cost(profile.mode(m1), profile.mode(m2), g);
      std::fill(tc.begin(), tc.end(), c);
    }
  for (Mode m : modes) {
    const ModeSpec& spec = profile.mode(m);
    auto& lm = t.link[m];
    for (const auto& [i, j] : links.directed_links(m)) {
      const Zone& zi = zones[static_cast<std::size_t>(i)];
      const Zone& zj = zones[static_cast<std::size_t>(j)];
      CostTables::LinkCosts lc;
      lc.clear_dist = clear_distance(zi, zj);
      lc.clear_time = clear_time(spec, lc.clear_dist, zi.is_city, zj.is_city);
      auto [d, tt] = interzonal(spec, zi, zj, lc.clear_dist);
      lc.dist = d;
      lc.time = tt;
      lm[{i, j}] = lc;
    }
  }
  return t;
}

}  // namespace mtnd
