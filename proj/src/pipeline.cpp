#include "mtnd/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mtnd/milp/io.hpp"
#include "mtnd/milp/solver.hpp"

namespace mtnd {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PipelineError("cannot read file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw PipelineError("cannot write file: " + path);
  out << data;
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw PipelineError("malformed " + what + ": " + e.what());
  }
}

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.10g", v == 0.0 ? 0.0 : v);
  return buf;
}

Mode parse_mode(const std::string& name, const std::string& where) {
  const auto m = mode_from_name(name);
  if (!m) throw PipelineError("unknown mode '" + name + "' in " + where);
  return *m;
}

milp::SolveStatus status_from_name(const std::string& name) {
  for (const auto s :
       {milp::SolveStatus::Optimal, milp::SolveStatus::FeasibleWithGap,
        milp::SolveStatus::Infeasible, milp::SolveStatus::Unbounded,
        milp::SolveStatus::TimeLimit})
    if (milp::status_name(s) == name) return s;
  throw PipelineError("unknown solver status '" + name + "'");
}

std::string resolve(const std::string& base, const std::string& p) {
  if (p.empty()) return p;
  const fs::path path(p);
  return path.is_absolute() ? p : (fs::path(base) / path).string();
}

MilpSolver make_solver(const ScenarioConfig& cfg) {
  if (cfg.solver_command.empty()) return {};
  return [cmd = cfg.solver_command](const milp::Model& m) {
    return milp::solve_external(m, cmd);
  };
}

// ---------------------------------------------------------------- stages --

struct ZonesStage {
  std::vector<Maz> mazs;
  ZonePartition partition;
  std::vector<Zone> zones;
  VoronoiDiagram voronoi;
  DemandMatrix demand;
};

ZonesStage stage_zones(const ScenarioConfig& cfg) {
  ZonesStage out;
  out.mazs = load_mazs(cfg.maz_path);
  const auto trips = load_maz_trips(cfg.trips_path, cfg.trips_scale);
  out.partition =
      cluster_zones(out.mazs, cfg.k, cfg.rng_seed, cfg.cluster_restarts);
  Polygon boundary = cfg.city_boundary;
  if (boundary.empty()) {
    std::vector<Point> pts;
    for (const auto& m : out.mazs) pts.push_back(m.position);
    boundary = bounding_box(pts).inflated(0.0).as_polygon();
  }
  out.zones = derive_zone_geometry(out.partition, boundary);
  out.voronoi = zone_voronoi(out.zones);
  out.demand = aggregate_demand(trips, out.partition, cfg.peripheral_rule);
  return out;
}

json zones_to_json(const ZonesStage& z) {
  json j;
  j["k"] = z.partition.k;
  j["objective"] = z.partition.objective;
  json mazs = json::array();
  for (const auto& m : z.mazs)
    mazs.push_back({m.id, m.position.x, m.position.y, m.trips});
  j["mazs"] = std::move(mazs);
  j["assignment"] = z.partition.assignment;
  json cents = json::array();
  for (const auto& c : z.partition.centroids) cents.push_back({c.x, c.y});
  j["centroids"] = std::move(cents);
  json zones = json::array();
  for (const auto& zo : z.zones) {
    json cell = json::array();
    for (const auto& p : zo.cell) cell.push_back({p.x, p.y});
    zones.push_back({{"id", zo.id},
                     {"centroid", {zo.centroid.x, zo.centroid.y}},
                     {"length_km", zo.length},
                     {"is_city", zo.is_city},
                     {"members", zo.members},
                     {"cell", std::move(cell)}});
  }
  j["zones"] = std::move(zones);
  json entries = json::array();
  for (const auto& [od, v] : z.demand.entries)
    entries.push_back({od.first, od.second, v});
  j["demand"] = {{"zones", z.demand.zones},
                 {"entries", std::move(entries)},
                 {"dropped_intrazonal", z.demand.dropped_intrazonal},
                 {"peripheral_remapped", z.demand.peripheral_remapped}};
  return j;
}

ZonesStage zones_from_json(const json& j) {
  ZonesStage z;
  z.partition.k = j.at("k").get<int>();
  z.partition.objective = j.at("objective").get<double>();
  for (const auto& m : j.at("mazs"))
    z.mazs.push_back({m.at(0).get<std::int64_t>(),
                      {m.at(1).get<double>(), m.at(2).get<double>()},
                      m.at(3).get<double>()});
  z.partition.mazs = z.mazs;
  z.partition.assignment = j.at("assignment").get<std::vector<int>>();
  for (const auto& c : j.at("centroids"))
    z.partition.centroids.push_back({c.at(0).get<double>(),
                                     c.at(1).get<double>()});
  for (const auto& zo : j.at("zones")) {
    Zone zone;
    zone.id = zo.at("id").get<int>();
    zone.centroid = {zo.at("centroid").at(0).get<double>(),
                     zo.at("centroid").at(1).get<double>()};
    zone.length = zo.at("length_km").get<double>();
    zone.is_city = zo.at("is_city").get<bool>();
    zone.members = zo.at("members").get<std::vector<std::int64_t>>();
    for (const auto& p : zo.at("cell"))
      zone.cell.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    z.zones.push_back(std::move(zone));
  }
  const auto& d = j.at("demand");
  z.demand.zones = d.at("zones").get<int>();
  for (const auto& e : d.at("entries"))
    z.demand.add(e.at(0).get<int>(), e.at(1).get<int>(),
                 e.at(2).get<double>());
  z.demand.dropped_intrazonal = d.at("dropped_intrazonal").get<double>();
  z.demand.peripheral_remapped = d.at("peripheral_remapped").get<double>();
  z.voronoi = zone_voronoi(z.zones);
  return z;
}

CandidateLinkSet stage_links(const ScenarioConfig& cfg, const ZonesStage& z,
                             std::vector<std::string>* warnings) {
  CandidateLinkSet existing;
  if (!cfg.network_path.empty()) {
    const ExistingNetwork net = load_existing_network(cfg.network_path);
    existing = import_existing_network(net, z.zones, z.voronoi, warnings);
  }
  return generate_candidate_links(z.zones, z.voronoi, z.demand, existing,
                                  cfg.modes, cfg.n_adjacent, cfg.n_direct);
}

json links_to_json(const CandidateLinkSet& links) {
  json j;
  for (const auto& [m, lm] : links.links) {
    json arr = json::array();
    for (const auto& [ij, exist] : lm)
      arr.push_back({ij.first, ij.second, exist});
    j[mode_name(m)] = std::move(arr);
  }
  return j;
}

CandidateLinkSet links_from_json(const json& j) {
  CandidateLinkSet links;
  for (const auto& [name, arr] : j.items()) {
    const Mode m = parse_mode(name, "link document");
    for (const auto& e : arr)
      links.links[m][{e.at(0).get<int>(), e.at(1).get<int>()}] =
          e.at(2).get<int>();
  }
  return links;
}

json costs_to_json(const CostTables& costs) {
  json j;
  json zone = json::object();
  for (const auto& [m, v] : costs.zone) {
    json arr = json::array();
    for (const auto& zc : v)
      arr.push_back({zc.start, zc.end, zc.feeder_share, zc.feeder_dist,
                     zc.feeder_time, zc.through_time});
    zone[mode_name(m)] = std::move(arr);
  }
  j["zone"] = std::move(zone);
  json transfer = json::array();
  for (const auto& [mm, v] : costs.transfer)
    transfer.push_back({mode_name(mm.first), mode_name(mm.second), v});
  j["transfer"] = std::move(transfer);
  json link = json::object();
  for (const auto& [m, lm] : costs.link) {
    json arr = json::array();
    for (const auto& [ij, lc] : lm)
      arr.push_back({ij.first, ij.second, lc.clear_dist, lc.clear_time,
                     lc.dist, lc.time});
    link[mode_name(m)] = std::move(arr);
  }
  j["link"] = std::move(link);
  return j;
}

CostTables costs_from_json(const json& j) {
  CostTables costs;
  for (const auto& [name, arr] : j.at("zone").items()) {
    const Mode m = parse_mode(name, "cost document");
    for (const auto& e : arr)
      costs.zone[m].push_back({e.at(0).get<double>(), e.at(1).get<double>(),
                               e.at(2).get<double>(), e.at(3).get<double>(),
                               e.at(4).get<double>(), e.at(5).get<double>()});
  }
  for (const auto& e : j.at("transfer"))
    costs.transfer[{parse_mode(e.at(0).get<std::string>(), "cost document"),
                    parse_mode(e.at(1).get<std::string>(), "cost document")}] =
        e.at(2).get<std::vector<double>>();
  for (const auto& [name, arr] : j.at("link").items()) {
    const Mode m = parse_mode(name, "cost document");
    for (const auto& e : arr)
      costs.link[m][{e.at(0).get<int>(), e.at(1).get<int>()}] = {
          e.at(2).get<double>(), e.at(3).get<double>(), e.at(4).get<double>(),
          e.at(5).get<double>()};
  }
  return costs;
}

json solution_to_json(const ZonalSolution& sol) {
  json j;
  j["status"] = milp::status_name(sol.status);
  j["objective"] = sol.objective;
  j["bound"] = sol.bound;
  j["gap"] = sol.gap;
  json arr = json::array();
  for (const auto& [k, v] : sol.start_flows)
    arr.push_back({k.first, mode_name(k.second), v});
  j["start_flows"] = std::move(arr);
  arr = json::array();
  for (const auto& [k, v] : sol.end_flows)
    arr.push_back({std::get<0>(k), mode_name(std::get<1>(k)), std::get<2>(k),
                   v});
  j["end_flows"] = std::move(arr);
  arr = json::array();
  for (const auto& [k, v] : sol.link_flows)
    arr.push_back({std::get<0>(k), mode_name(std::get<1>(k)), std::get<2>(k),
                   std::get<3>(k), v});
  j["link_flows"] = std::move(arr);
  arr = json::array();
  for (const auto& [k, v] : sol.transfer_flows)
    arr.push_back({std::get<0>(k), mode_name(std::get<1>(k)),
                   mode_name(std::get<2>(k)), std::get<3>(k), v});
  j["transfer_flows"] = std::move(arr);
  arr = json::array();
  for (const auto& [k, v] : sol.connections)
    arr.push_back({mode_name(std::get<0>(k)), std::get<1>(k), std::get<2>(k),
                   v});
  j["connections"] = std::move(arr);
  arr = json::array();
  for (const auto& [k, v] : sol.new_links)
    arr.push_back({mode_name(std::get<0>(k)), std::get<1>(k), std::get<2>(k),
                   v});
  j["new_links"] = std::move(arr);
  arr = json::array();
  for (const auto& [k, v] : sol.direction)
    arr.push_back({std::get<0>(k), std::get<1>(k), std::get<2>(k), v});
  j["direction"] = std::move(arr);
  return j;
}

ZonalSolution solution_from_json(const json& j) {
  ZonalSolution sol;
  sol.status = status_from_name(j.at("status").get<std::string>());
  sol.objective = j.at("objective").get<double>();
  sol.bound = j.at("bound").get<double>();
  sol.gap = j.at("gap").get<double>();
  const auto m = [](const json& e) {
    return parse_mode(e.get<std::string>(), "solution document");
  };
  for (const auto& e : j.at("start_flows"))
    sol.start_flows[{e.at(0).get<int>(), m(e.at(1))}] = e.at(2).get<double>();
  for (const auto& e : j.at("end_flows"))
    sol.end_flows[{e.at(0).get<int>(), m(e.at(1)), e.at(2).get<int>()}] =
        e.at(3).get<double>();
  for (const auto& e : j.at("link_flows"))
    sol.link_flows[{e.at(0).get<int>(), m(e.at(1)), e.at(2).get<int>(),
                    e.at(3).get<int>()}] = e.at(4).get<double>();
  for (const auto& e : j.at("transfer_flows"))
    sol.transfer_flows[{e.at(0).get<int>(), m(e.at(1)), m(e.at(2)),
                        e.at(3).get<int>()}] = e.at(4).get<double>();
  for (const auto& e : j.at("connections"))
    sol.connections[{m(e.at(0)), e.at(1).get<int>(), e.at(2).get<int>()}] =
        e.at(3).get<int>();
  for (const auto& e : j.at("new_links"))
    sol.new_links[{m(e.at(0)), e.at(1).get<int>(), e.at(2).get<int>()}] =
        e.at(3).get<int>();
  for (const auto& e : j.at("direction"))
    sol.direction[{e.at(0).get<int>(), e.at(1).get<int>(),
                   e.at(2).get<int>()}] = e.at(3).get<int>();
  return sol;
}

json plan_to_json(const RoutePlan& plan) {
  json j;
  j["total_transfers"] = plan.total_transfers;
  j["total_trips"] = plan.total_trips;
  j["avg_length_km"] = plan.avg_length_km;
  j["warnings"] = plan.warnings;
  json routes = json::array();
  for (const auto& r : plan.routes)
    routes.push_back({{"zones", r.zones},
                      {"segments", r.segments},
                      {"trips", r.trips},
                      {"length_km", r.length_km}});
  j["routes"] = std::move(routes);
  return j;
}

RoutePlan plan_from_json(const json& j, Mode mode) {
  RoutePlan plan;
  plan.mode = mode;
  plan.total_transfers = j.at("total_transfers").get<double>();
  plan.total_trips = j.at("total_trips").get<double>();
  plan.avg_length_km = j.at("avg_length_km").get<double>();
  plan.warnings = j.at("warnings").get<std::vector<std::string>>();
  int max_seg = -1;
  for (const auto& r : j.at("routes")) {
    RoutePlan::Route route;
    route.zones = r.at("zones").get<std::vector<int>>();
    route.segments = r.at("segments").get<std::vector<int>>();
    route.trips = r.at("trips").get<double>();
    route.length_km = r.at("length_km").get<double>();
    for (int s : route.segments) max_seg = std::max(max_seg, s);
    plan.routes.push_back(std::move(route));
  }
  plan.segment_route.assign(static_cast<std::size_t>(max_seg + 1), -1);
  for (std::size_t r = 0; r < plan.routes.size(); ++r)
    for (int s : plan.routes[r].segments)
      plan.segment_route[static_cast<std::size_t>(s)] = static_cast<int>(r);
  return plan;
}

json routes_to_json(const std::vector<ModeRouteResult>& results) {
  json j = json::array();
  for (const auto& r : results) {
    json e;
    e["mode"] = mode_name(r.mode);
    e["objective"] = r.objective;
    e["gap"] = r.gap;
    json segs = json::array();
    for (const auto& s : r.net.segments) segs.push_back({s.id, s.a, s.b});
    e["segments"] = std::move(segs);
    json flow = json::array();
    for (const auto& [ij, f] : r.net.flow)
      flow.push_back({ij.first, ij.second, f});
    e["flow"] = std::move(flow);
    json lens = json::array();
    for (const auto& [ij, km] : r.net.length_km)
      lens.push_back({ij.first, ij.second, km});
    e["length_km"] = std::move(lens);
    e["optimized"] = plan_to_json(r.optimized);
    e["greedy"] = plan_to_json(r.greedy);
    j.push_back(std::move(e));
  }
  return j;
}

std::vector<ModeRouteResult> routes_from_json(const json& j) {
  std::vector<ModeRouteResult> out;
  for (const auto& e : j) {
    ModeRouteResult r;
    r.mode = parse_mode(e.at("mode").get<std::string>(), "route document");
    r.objective = e.at("objective").get<double>();
    r.gap = e.at("gap").get<double>();
    r.net.mode = r.mode;
    for (const auto& s : e.at("segments")) {
      const SegmentNetwork::Segment seg{s.at(0).get<int>(), s.at(1).get<int>(),
                                        s.at(2).get<int>()};
      r.net.segments.push_back(seg);
      r.net.link_segments[{seg.a, seg.b}].push_back(seg.id);
    }
    for (const auto& f : e.at("flow"))
      r.net.flow[{f.at(0).get<int>(), f.at(1).get<int>()}] =
          f.at(2).get<double>();
    for (const auto& f : e.at("length_km"))
      r.net.length_km[{f.at(0).get<int>(), f.at(1).get<int>()}] =
          f.at(2).get<double>();
    r.optimized = plan_from_json(e.at("optimized"), r.mode);
    r.greedy = plan_from_json(e.at("greedy"), r.mode);
    out.push_back(std::move(r));
  }
  return out;
}

// --------------------------------------------------------------- geometry --

json zones_geojson(const std::vector<Zone>& zones) {
  json features = json::array();
  for (const auto& z : zones) {
    json ring = json::array();
    for (const auto& p : z.cell) ring.push_back({p.x, p.y});
    if (!z.cell.empty()) ring.push_back({z.cell.front().x, z.cell.front().y});
    features.push_back(
        {{"type", "Feature"},
         {"properties",
          {{"zone", z.id}, {"is_city", z.is_city}, {"length_km", z.length}}},
         {"geometry",
          {{"type", "Polygon"}, {"coordinates", json::array({ring})}}}});
  }
  return {{"type", "FeatureCollection"}, {"features", features}};
}

json network_geojson(const ZonalSolution& sol, const std::vector<Zone>& zones,
                     Mode mode) {
  json features = json::array();
  std::set<std::pair<int, int>> done;
  for (const auto& [k, n] : sol.connections) {
    if (std::get<0>(k) != mode || n <= 0) continue;
    const int i = std::get<1>(k), j = std::get<2>(k);
    const auto und = std::minmax(i, j);
    if (!done.insert({und.first, und.second}).second) continue;
    double flow = 0.0;
    for (const auto& [lk, v] : sol.link_flows)
      if (std::get<1>(lk) == mode &&
          std::minmax(std::get<2>(lk), std::get<3>(lk)) == und)
        flow += v;
    int built = 0;
    const auto nl = sol.new_links.find({mode, und.first, und.second});
    if (nl != sol.new_links.end()) built = nl->second;
    const Point a = zones[static_cast<std::size_t>(und.first)].centroid;
    const Point b = zones[static_cast<std::size_t>(und.second)].centroid;
    features.push_back(
        {{"type", "Feature"},
         {"properties",
          {{"mode", mode_name(mode)},
           {"from", und.first},
           {"to", und.second},
           {"connections", n},
           {"new", built},
           {"flow", flow}}},
         {"geometry",
          {{"type", "LineString"},
           {"coordinates", json::array({{a.x, a.y}, {b.x, b.y}})}}}});
  }
  return {{"type", "FeatureCollection"}, {"features", features}};
}

json routes_geojson(const ModeRouteResult& r, const std::vector<Zone>& zones) {
  json features = json::array();
  for (std::size_t idx = 0; idx < r.optimized.routes.size(); ++idx) {
    const auto& route = r.optimized.routes[idx];
    json coords = json::array();
    for (int z : route.zones) {
      const Point c = zones[static_cast<std::size_t>(z)].centroid;
      coords.push_back({c.x, c.y});
    }
    features.push_back({{"type", "Feature"},
                        {"properties",
                         {{"mode", mode_name(r.mode)},
                          {"route", static_cast<int>(idx)},
                          {"trips", route.trips},
                          {"length_km", route.length_km}}},
                        {"geometry",
                         {{"type", "LineString"}, {"coordinates", coords}}}});
  }
  return {{"type", "FeatureCollection"}, {"features", features}};
}

// ----------------------------------------------------------------- tables --

std::string metrics_table(const ScenarioMetrics& m) {
  std::ostringstream t;
  t << "metric\tvalue\n";
  t << "total_trips\t" << fmt(m.total_trips) << "\n";
  t << "avg_generalized_cost_usd\t" << fmt(m.avg_generalized_cost) << "\n";
  t << "avg_journey_min\t" << fmt(m.avg_journey_min) << "\n";
  t << "avg_start_min\t" << fmt(m.avg_start_min) << "\n";
  t << "avg_interzonal_min\t" << fmt(m.avg_interzonal_min) << "\n";
  t << "avg_end_min\t" << fmt(m.avg_end_min) << "\n";
  t << "transfers_per_trip\t" << fmt(m.transfers_per_trip) << "\n";
  t << "op_cost_per_trip_usd\t" << fmt(m.op_cost_per_trip) << "\n";
  t << "em_cost_per_trip_usd\t" << fmt(m.em_cost_per_trip) << "\n";
  t << "\nmode\ttrips\tsplit_trips_pct\tsplit_distance_pct\tpassenger_km\t"
       "avg_trip_km\tspeed_kmh\top_cost_per_pax_km\n";
  for (const auto& [mode, pm] : m.per_mode) {
    if (pm.split_by_trips < 1.0) continue;  // omit sub-1% modes
    t << mode_name(mode) << "\t" << fmt(pm.trips) << "\t"
      << fmt(pm.split_by_trips) << "\t" << fmt(pm.split_by_distance) << "\t"
      << fmt(pm.passenger_km) << "\t" << fmt(pm.avg_trip_km) << "\t"
      << fmt(pm.speed_kmh) << "\t" << fmt(pm.op_cost_per_pax_km) << "\n";
  }
  return t.str();
}

std::string routes_table(const std::vector<ModeRouteResult>& results) {
  std::ostringstream t;
  t << "mode\troutes\tavg_length_km\ttotal_trips\ttransfers_optimized\t"
       "transfers_greedy\n";
  for (const auto& r : results)
    t << mode_name(r.mode) << "\t" << r.optimized.routes.size() << "\t"
      << fmt(r.optimized.avg_length_km) << "\t"
      << fmt(r.optimized.total_trips) << "\t"
      << fmt(r.optimized.total_transfers) << "\t"
      << fmt(r.greedy.total_transfers) << "\n";
  return t.str();
}

std::string origin_splits_table(const ZonalSolution& sol) {
  // boardings per (origin, mode): starts plus received transfers
  std::map<std::pair<int, Mode>, double> trips;
  std::map<int, double> totals;
  for (const auto& [k, v] : sol.start_flows) {
    trips[k] += v;
    totals[k.first] += v;
  }
  for (const auto& [k, v] : sol.transfer_flows) {
    trips[{std::get<0>(k), std::get<2>(k)}] += v;
    totals[std::get<0>(k)] += v;
  }
  std::ostringstream t;
  t << "origin\tmode\ttrips\tsplit_pct\n";
  for (const auto& [k, v] : trips) {
    const double tot = totals[k.first];
    t << k.first << "\t" << mode_name(k.second) << "\t" << fmt(v) << "\t"
      << fmt(tot > 0 ? 100.0 * v / tot : 0.0) << "\n";
  }
  return t.str();
}

template <typename Fn>
auto run_stage(const std::string& name, Fn&& fn) {
  try {
    return fn();
  } catch (const PipelineError& e) {
    throw PipelineError("stage " + name + ": " + e.what());
  } catch (const InfeasibleInput&) {
    throw;  // infeasibility keeps its own category (exit code 2)
  } catch (const std::exception& e) {
    throw PipelineError("stage " + name + ": " + e.what());
  }
}

}  // namespace

// ------------------------------------------------------------------ input --

std::vector<Maz> load_mazs(const std::string& path) {
  const json j = parse_json(read_file(path), "seed-point file " + path);
  std::vector<Maz> out;
  for (const auto& e : j)
    out.push_back({e.at("id").get<std::int64_t>(),
                   {e.at("x").get<double>(), e.at("y").get<double>()},
                   e.at("trips").get<double>()});
  if (out.empty()) throw PipelineError("no seed points in " + path);
  return out;
}

std::vector<MazTrip> load_maz_trips(const std::string& path, double scale) {
  const json j = parse_json(read_file(path), "trip file " + path);
  std::vector<MazTrip> out;
  for (const auto& e : j)
    out.push_back({e.at("from").get<std::int64_t>(),
                   e.at("to").get<std::int64_t>(),
                   e.at("trips").get<double>() * scale});
  return out;
}

ExistingNetwork load_existing_network(const std::string& path) {
  const json j = parse_json(read_file(path), "network file " + path);
  ExistingNetwork net;
  for (const auto& f : j.at("features")) {
    const auto& geom = f.at("geometry");
    if (geom.at("type").get<std::string>() != "LineString")
      throw PipelineError("network features must be LineStrings (" + path +
                          ")");
    const Mode m = parse_mode(
        f.at("properties").at("mode").get<std::string>(), path);
    std::vector<Point> line;
    for (const auto& c : geom.at("coordinates"))
      line.push_back({c.at(0).get<double>(), c.at(1).get<double>()});
    if (line.size() < 2)
      throw PipelineError("network polyline with fewer than 2 points in " +
                          path);
    net.polylines[m].push_back(std::move(line));
  }
  return net;
}

CandidateLinkSet import_existing_network(const ExistingNetwork& net,
                                         const std::vector<Zone>& zones,
                                         const VoronoiDiagram& voronoi,
                                         std::vector<std::string>* warnings) {
  std::vector<Point> sites;
  for (const auto& z : zones) sites.push_back(z.centroid);
  std::map<Mode, std::map<std::pair<int, int>, int>> counts;
  for (const auto& [mode, lines] : net.polylines) {
    for (std::size_t li = 0; li < lines.size(); ++li) {
      const auto& line = lines[li];
      std::vector<int> seq;
      for (std::size_t p = 0; p + 1 < line.size(); ++p) {
        const auto part =
            traverse_cells(line[p], line[p + 1], voronoi, sites);
        for (int z : part)
          if (seq.empty() || seq.back() != z) seq.push_back(z);
      }
      if (seq.empty()) {
        if (warnings)
          warnings->push_back("polyline " + std::to_string(li) + " (" +
                              mode_name(mode) +
                              ") lies outside every zone; skipped");
        continue;
      }
      std::set<std::pair<int, int>> pairs;  // once per line
      for (std::size_t p = 0; p + 1 < seq.size(); ++p)
        pairs.insert({std::min(seq[p], seq[p + 1]),
                      std::max(seq[p], seq[p + 1])});
      for (const auto& [a, b] : pairs) counts[mode][{a, b}] += 1;
    }
  }
  CandidateLinkSet out;
  for (const auto& [mode, cm] : counts)
    for (const auto& [ab, n] : cm)
      out.insert(mode, ab.first, ab.second, n);
  return out;
}

// ------------------------------------------------------------------ config --

ScenarioConfig parse_scenario_config(const std::string& json_text,
                                     const std::string& base_dir) {
  const json j = parse_json(json_text, "scenario config");
  ScenarioConfig cfg;
  try {
    if (j.contains("profile"))
      cfg.profile = load_profile(resolve(base_dir, j.at("profile").get<std::string>()));
    else
      cfg.profile = default_profile();
    cfg.k = j.value("k", 2);
    cfg.rng_seed = j.value("seed", std::uint64_t{0});
    cfg.trips_scale = j.value("trips_scale", 1.0);
    cfg.peripheral_rule = j.value("peripheral_rule", false);
    cfg.cluster_restarts = j.value("cluster_restarts", 20);
    if (!j.contains("modes") || j.at("modes").empty())
      throw PipelineError("scenario config needs a non-empty 'modes' list");
    for (const auto& m : j.at("modes"))
      cfg.modes.push_back(parse_mode(m.get<std::string>(), "config modes"));
    cfg.zonal.modes_enabled = cfg.modes;
    cfg.zonal.budget = j.value("budget", 0.0);
    if (j.contains("options")) {
      const auto& o = j.at("options");
      cfg.zonal.include_capacity = o.value("capacity", true);
      cfg.zonal.include_min_flow = o.value("min_flow", false);
      cfg.zonal.include_no_backflow = o.value("no_backflow", false);
    }
    if (j.contains("solver")) {
      const auto& s = j.at("solver");
      cfg.solver.rel_gap = s.value("gap", cfg.solver.rel_gap);
      cfg.solver.time_limit_s = s.value("time_limit_s", cfg.solver.time_limit_s);
      cfg.solver_command = s.value("command", std::string());
    }
    if (j.contains("candidate")) {
      const auto& c = j.at("candidate");
      cfg.n_adjacent = c.value("adjacent", cfg.n_adjacent);
      cfg.n_direct = c.value("direct", cfg.n_direct);
    }
    if (j.contains("city_boundary"))
      for (const auto& p : j.at("city_boundary"))
        cfg.city_boundary.push_back({p.at(0).get<double>(),
                                     p.at(1).get<double>()});
    const auto& in = j.at("inputs");
    cfg.maz_path = resolve(base_dir, in.at("mazs").get<std::string>());
    cfg.trips_path = resolve(base_dir, in.at("trips").get<std::string>());
    cfg.network_path = resolve(base_dir, in.value("network", std::string()));
    cfg.out_dir = resolve(base_dir, j.value("out", std::string("out")));
  } catch (const json::exception& e) {
    throw PipelineError(std::string("scenario config: ") + e.what());
  }
  if (cfg.k < 2) throw PipelineError("scenario config: k must be >= 2");
  if (cfg.zonal.budget < 0)
    throw PipelineError("scenario config: budget must be >= 0");
  for (const std::string& p : {cfg.maz_path, cfg.trips_path})
    if (!fs::exists(p)) throw PipelineError("input file missing: " + p);
  if (!cfg.network_path.empty() && !fs::exists(cfg.network_path))
    throw PipelineError("input file missing: " + cfg.network_path);
  return cfg;
}

ScenarioConfig load_scenario_config(const std::string& path) {
  return parse_scenario_config(read_file(path),
                               fs::path(path).parent_path().string());
}

// ------------------------------------------------------------------- runs --

ScenarioBundle run_scenario(const ScenarioConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  ScenarioBundle b;
  b.config = config;

  ZonesStage z = run_stage("cluster", [&] { return stage_zones(config); });
  b.mazs = z.mazs;
  b.partition = z.partition;
  b.zones = z.zones;
  b.voronoi = z.voronoi;
  b.demand = z.demand;

  b.links = run_stage("links",
                      [&] { return stage_links(config, z, &b.import_warnings); });
  b.costs = run_stage("costs", [&] {
    return build_cost_tables(b.zones, config.profile, config.modes, b.links);
  });

  b.solution = run_stage("optimize", [&] {
    const ZonalModel zm = build_zonal_model(b.costs, b.demand, config.profile,
                                            b.links, config.zonal);
    return solve_zonal(zm, config.solver, make_solver(config));
  });
  if (b.solution.status != milp::SolveStatus::Optimal &&
      b.solution.status != milp::SolveStatus::FeasibleWithGap)
    throw InfeasibleInput("zonal optimization ended with status " +
                          milp::status_name(b.solution.status));
  b.validation =
      validate_zonal(b.solution, b.demand, config.profile, b.costs, b.links,
                     config.zonal);
  b.metrics = summarize(b.solution, b.demand, b.costs, config.profile);

  run_stage("disaggregate", [&] {
    std::set<int> origins;
    for (const auto& [od, e] : b.demand.entries)
      if (e > 0) origins.insert(od.first);
    for (int o : origins)
      b.paths.push_back(disaggregate_od_flows(b.solution, b.demand, o));
    return 0;
  });

  run_stage("routes", [&] {
    for (Mode m : config.modes) {
      const ModeSpec& spec = config.profile.mode(m);
      if (!spec.is_transit) continue;
      ModeRouteResult r;
      r.mode = m;
      r.net = derive_segments(b.solution, m, spec.design_headway,
                              spec.design_occ, &b.costs);
      if (r.net.segments.empty()) continue;
      const RouteGenModel model = build_route_model(r.net, b.solution);
      const RouteGenSolution rsol =
          solve_routes(model, config.solver, make_solver(config));
      if (rsol.status != milp::SolveStatus::Optimal &&
          rsol.status != milp::SolveStatus::FeasibleWithGap)
        throw InfeasibleInput("route generation for " + mode_name(m) +
                              " ended with status " +
                              milp::status_name(rsol.status));
      r.objective = rsol.objective;
      r.gap = rsol.gap;
      r.optimized = assemble_routes(rsol, r.net);
      r.greedy = myopic_routes(r.net, b.solution, b.demand);
      b.routes.push_back(std::move(r));
    }
    return 0;
  });

  b.wall_seconds = std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - t0)
                       .count();
  return b;
}

std::string content_hash(const std::string& data) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

std::string emit_report(const ScenarioBundle& bundle) {
  // recomputed from the solution, not copied from the bundle
  const ScenarioMetrics m = summarize(bundle.solution, bundle.demand,
                                      bundle.costs, bundle.config.profile);
  std::ostringstream r;
  r << "Scenario report\n";
  r << "===============\n\n";
  r << "Zones: " << bundle.zones.size() << ", demand pairs: "
    << bundle.demand.entries.size() << ", trips/h: "
    << fmt(bundle.demand.total()) << "\n";
  r << "Objective: " << fmt(bundle.solution.objective) << " $/h (bound "
    << fmt(bundle.solution.bound) << ", gap " << fmt(bundle.solution.gap)
    << ")\n";
  r << "Validation: "
    << (bundle.validation.ok()
            ? "clean"
            : std::to_string(bundle.validation.violations.size()) +
                  " violation(s)")
    << "\n\n";
  r << "Network performance\n-------------------\n" << metrics_table(m);
  r << "\nRoutes\n------\n" << routes_table(bundle.routes);
  if (bundle.routes.empty()) r << "(no transit routes in this scenario)\n";
  for (const auto& w : bundle.import_warnings) r << "note: " << w << "\n";
  for (const auto& mr : bundle.routes)
    for (const auto& w : mr.optimized.warnings)
      r << "note (" << mode_name(mr.mode) << "): " << w << "\n";
  return r.str();
}

void write_bundle(const ScenarioBundle& bundle) {
  const fs::path dir(bundle.config.out_dir);
  fs::create_directories(dir);
  const auto path = [&](const std::string& name) {
    return (dir / name).string();
  };
  // mark outputs stale until the final manifest lands
  write_file(path("manifest.json"),
             json{{"complete", false}}.dump(2) + "\n");

  std::map<std::string, std::string> files;
  const auto emit = [&](const std::string& name, const std::string& data) {
    write_file(path(name), data);
    files[name] = content_hash(data);
  };

  ZonesStage z{bundle.mazs, bundle.partition, bundle.zones, bundle.voronoi,
               bundle.demand};
  emit("zones.json", zones_to_json(z).dump(2) + "\n");
  emit("zones.geojson", zones_geojson(bundle.zones).dump(2) + "\n");
  emit("links.json", links_to_json(bundle.links).dump(2) + "\n");
  emit("costs.json", costs_to_json(bundle.costs).dump(2) + "\n");
  emit("solution.json", solution_to_json(bundle.solution).dump(2) + "\n");
  emit("metrics.tsv", metrics_table(bundle.metrics));
  for (Mode m : bundle.config.modes)
    emit("network_" + mode_name(m) + ".geojson",
         network_geojson(bundle.solution, bundle.zones, m).dump(2) + "\n");
  emit("routes.json", routes_to_json(bundle.routes).dump(2) + "\n");
  for (const auto& r : bundle.routes)
    emit("routes_" + mode_name(r.mode) + ".geojson",
         routes_geojson(r, bundle.zones).dump(2) + "\n");
  emit("routes.tsv", routes_table(bundle.routes));
  emit("splits_by_origin.tsv", origin_splits_table(bundle.solution));
  emit("report.txt", emit_report(bundle));

  json manifest;
  manifest["complete"] = true;
  manifest["toolkit_version"] = "0.1.0";
  manifest["seed"] = bundle.config.rng_seed;
  manifest["solver"] = {{"status", milp::status_name(bundle.solution.status)},
                        {"objective", bundle.solution.objective},
                        {"bound", bundle.solution.bound},
                        {"gap", bundle.solution.gap}};
  manifest["wall_seconds"] = bundle.wall_seconds;
  json fl = json::object();
  for (const auto& [name, hash] : files) fl[name] = hash;
  manifest["files"] = std::move(fl);
  write_file(path("manifest.json"), manifest.dump(2) + "\n");
}

// -------------------------------------------------------------------- CLI --

namespace {

ZonesStage load_zones_stage(const std::string& out_dir) {
  return zones_from_json(parse_json(
      read_file((fs::path(out_dir) / "zones.json").string()),
      "zones document"));
}

CandidateLinkSet load_links_stage(const std::string& out_dir) {
  return links_from_json(parse_json(
      read_file((fs::path(out_dir) / "links.json").string()),
      "link document"));
}

CostTables load_costs_stage(const std::string& out_dir) {
  return costs_from_json(parse_json(
      read_file((fs::path(out_dir) / "costs.json").string()),
      "cost document"));
}

ZonalSolution load_solution_stage(const std::string& out_dir) {
  return solution_from_json(parse_json(
      read_file((fs::path(out_dir) / "solution.json").string()),
      "solution document"));
}

void write_doc(const std::string& out_dir, const std::string& name,
               const std::string& data) {
  fs::create_directories(out_dir);
  write_file((fs::path(out_dir) / name).string(), data);
}

}  // namespace

}  // namespace mtnd

#include "CLI11.hpp"

namespace mtnd {

int run_cli(int argc, char** argv) {
  CLI::App app{"multimodal transit network design toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_override, solver_flag;
  double budget_override = -1.0, gap_override = -1.0, time_override = -1.0;
  std::int64_t seed_override = -1;
  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "scenario config file")
        ->required();
    cmd->add_option("--seed", seed_override, "override the rng seed");
    cmd->add_option("--budget", budget_override, "override the budget");
    cmd->add_option("--gap", gap_override, "relative MIP gap target");
    cmd->add_option("--time-limit", time_override, "solver time limit, s");
    cmd->add_option("--solver", solver_flag,
                    "builtin or external:CMD solver selection");
    cmd->add_option("--out", out_override, "output directory");
  };

  CLI::App* cluster = app.add_subcommand("cluster", "zones and demand");
  CLI::App* links = app.add_subcommand("links", "candidate link set");
  CLI::App* costs = app.add_subcommand("costs", "cost tables");
  CLI::App* optimize = app.add_subcommand("optimize", "zonal network MILP");
  CLI::App* routes = app.add_subcommand("routes", "route generation");
  CLI::App* report = app.add_subcommand("report", "scenario report");
  CLI::App* pipeline = app.add_subcommand("pipeline", "run every stage");
  for (CLI::App* c :
       {cluster, links, costs, optimize, routes, report, pipeline})
    add_common(c);

  CLI::App* solve = app.add_subcommand("solve", "solve a model file");
  std::string model_path, solution_path, format_flag = "lp";
  double solve_gap = -1.0, solve_time = -1.0;
  solve->add_option("model", model_path, "model file")->required();
  solve->add_option("solution", solution_path, "solution output file")
      ->required();
  solve->add_option("--format", format_flag, "lp or mps");
  solve->add_option("--gap", solve_gap, "relative MIP gap target");
  solve->add_option("--time-limit", solve_time, "time limit, s");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 3;
  }

  try {
    if (solve->parsed()) {
      const auto format = format_flag == "mps" ? milp::ExportFormat::MpsText
                                               : milp::ExportFormat::LpText;
      const milp::Model model =
          milp::parse_model(read_file(model_path), format);
      milp::SolverSettings settings;
      if (solve_gap >= 0) settings.rel_gap = solve_gap;
      if (solve_time >= 0) settings.time_limit_s = solve_time;
      const milp::Solution sol = milp::solve(model, settings);
      write_file(solution_path, milp::serialize_solution(model, sol));
      return 0;
    }

    ScenarioConfig cfg = load_scenario_config(config_path);
    if (seed_override >= 0)
      cfg.rng_seed = static_cast<std::uint64_t>(seed_override);
    if (budget_override >= 0) cfg.zonal.budget = budget_override;
    if (gap_override >= 0) cfg.solver.rel_gap = gap_override;
    if (time_override >= 0) cfg.solver.time_limit_s = time_override;
    if (!solver_flag.empty()) {
      if (solver_flag == "builtin")
        cfg.solver_command.clear();
      else if (solver_flag.rfind("external:", 0) == 0)
        cfg.solver_command = solver_flag.substr(9);
      else
        throw PipelineError("--solver expects builtin or external:CMD");
    }
    if (!out_override.empty()) cfg.out_dir = out_override;

    if (pipeline->parsed()) {
      const ScenarioBundle bundle = run_scenario(cfg);
      write_bundle(bundle);
      for (const auto& w : bundle.import_warnings)
        std::fprintf(stderr, "warning: %s\n", w.c_str());
      if (!bundle.validation.ok()) {
        std::fprintf(stderr, "validation failed with %zu violation(s)\n",
                     bundle.validation.violations.size());
        return 2;
      }
      return 0;
    }
    if (cluster->parsed()) {
      const ZonesStage z =
          run_stage("cluster", [&] { return stage_zones(cfg); });
      write_doc(cfg.out_dir, "zones.json", zones_to_json(z).dump(2) + "\n");
      write_doc(cfg.out_dir, "zones.geojson",
                zones_geojson(z.zones).dump(2) + "\n");
      return 0;
    }
    if (links->parsed()) {
      const ZonesStage z = load_zones_stage(cfg.out_dir);
      std::vector<std::string> warnings;
      const CandidateLinkSet ls =
          run_stage("links", [&] { return stage_links(cfg, z, &warnings); });
      for (const auto& w : warnings)
        std::fprintf(stderr, "warning: %s\n", w.c_str());
      write_doc(cfg.out_dir, "links.json", links_to_json(ls).dump(2) + "\n");
      return 0;
    }
    if (costs->parsed()) {
      const ZonesStage z = load_zones_stage(cfg.out_dir);
      const CandidateLinkSet ls = load_links_stage(cfg.out_dir);
      const CostTables ct = run_stage("costs", [&] {
        return build_cost_tables(z.zones, cfg.profile, cfg.modes, ls);
      });
      write_doc(cfg.out_dir, "costs.json", costs_to_json(ct).dump(2) + "\n");
      return 0;
    }
    if (optimize->parsed()) {
      const ZonesStage z = load_zones_stage(cfg.out_dir);
      const CandidateLinkSet ls = load_links_stage(cfg.out_dir);
      const CostTables ct = load_costs_stage(cfg.out_dir);
      const ZonalSolution sol = run_stage("optimize", [&] {
        return solve_zonal(
            build_zonal_model(ct, z.demand, cfg.profile, ls, cfg.zonal),
            cfg.solver, make_solver(cfg));
      });
      if (sol.status != milp::SolveStatus::Optimal &&
          sol.status != milp::SolveStatus::FeasibleWithGap) {
        std::fprintf(stderr, "zonal optimization: %s\n",
                     milp::status_name(sol.status).c_str());
        return 2;
      }
      write_doc(cfg.out_dir, "solution.json",
                solution_to_json(sol).dump(2) + "\n");
      write_doc(cfg.out_dir, "metrics.tsv",
                metrics_table(summarize(sol, z.demand, ct, cfg.profile)));
      for (Mode m : cfg.modes)
        write_doc(cfg.out_dir, "network_" + mode_name(m) + ".geojson",
                  network_geojson(sol, z.zones, m).dump(2) + "\n");
      return 0;
    }
    if (routes->parsed()) {
      const ZonesStage z = load_zones_stage(cfg.out_dir);
      const CostTables ct = load_costs_stage(cfg.out_dir);
      const ZonalSolution sol = load_solution_stage(cfg.out_dir);
      std::vector<ModeRouteResult> results;
      run_stage("routes", [&] {
        for (Mode m : cfg.modes) {
          const ModeSpec& spec = cfg.profile.mode(m);
          if (!spec.is_transit) continue;
          ModeRouteResult r;
          r.mode = m;
          r.net = derive_segments(sol, m, spec.design_headway,
                                  spec.design_occ, &ct);
          if (r.net.segments.empty()) continue;
          const RouteGenSolution rsol = solve_routes(
              build_route_model(r.net, sol), cfg.solver, make_solver(cfg));
          if (rsol.status != milp::SolveStatus::Optimal &&
              rsol.status != milp::SolveStatus::FeasibleWithGap)
            throw InfeasibleInput("route generation for " + mode_name(m) +
                                  " ended with status " +
                                  milp::status_name(rsol.status));
          r.objective = rsol.objective;
          r.gap = rsol.gap;
          r.optimized = assemble_routes(rsol, r.net);
          r.greedy = myopic_routes(r.net, sol, z.demand);
          results.push_back(std::move(r));
        }
        return 0;
      });
      write_doc(cfg.out_dir, "routes.json",
                routes_to_json(results).dump(2) + "\n");
      for (const auto& r : results)
        write_doc(cfg.out_dir, "routes_" + mode_name(r.mode) + ".geojson",
                  routes_geojson(r, z.zones).dump(2) + "\n");
      write_doc(cfg.out_dir, "routes.tsv", routes_table(results));
      return 0;
    }
    if (report->parsed()) {
      ScenarioBundle b;
      b.config = cfg;
      ZonesStage z = load_zones_stage(cfg.out_dir);
      b.mazs = z.mazs;
      b.partition = z.partition;
      b.zones = z.zones;
      b.demand = z.demand;
      b.links = load_links_stage(cfg.out_dir);
      b.costs = load_costs_stage(cfg.out_dir);
      b.solution = load_solution_stage(cfg.out_dir);
      b.validation =
          validate_zonal(b.solution, b.demand, cfg.profile, b.costs, b.links,
                         cfg.zonal);
      b.metrics = summarize(b.solution, b.demand, b.costs, cfg.profile);
      b.routes = routes_from_json(parse_json(
          read_file((fs::path(cfg.out_dir) / "routes.json").string()),
          "route document"));
      write_doc(cfg.out_dir, "report.txt", emit_report(b));
      write_doc(cfg.out_dir, "splits_by_origin.tsv",
                origin_splits_table(b.solution));
      return 0;
    }
  } catch (const InfeasibleInput& e) {
    std::fprintf(stderr, "infeasible: %s\n", e.what());
    return 2;
  } catch (const PipelineError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}

}  // namespace mtnd
