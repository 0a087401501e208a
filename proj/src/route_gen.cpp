#include "mtnd/route_gen.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

#include "mtnd/milp/solver.hpp"

namespace mtnd {

namespace {

constexpr double kFlowTol = 1e-9;

std::pair<int, int> undirected(int i, int j) {
  return {std::min(i, j), std::max(i, j)};
}

std::string zs(int z) { return std::to_string(z); }

// Union-find over segment ids, used for cycle prevention.
struct Components {
  std::vector<int> parent;
  explicit Components(std::size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] =
          parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  }
  void unite(int a, int b) { parent[static_cast<std::size_t>(find(a))] = find(b); }
};

// Shared chain assembly from a set of (junction, u1, u2) connections.
RoutePlan plan_from_connections(
    const SegmentNetwork& net,
    const std::set<std::tuple<int, int, int>>& connections) {
  RoutePlan plan;
  plan.mode = net.mode;
  plan.segment_route.assign(net.segments.size(), -1);

  // partner of each segment at each of its endpoints
  std::map<std::pair<int, int>, int> partner;  // (segment, zone) -> segment
  auto link = [&](int j, int u1, int u2) {
    for (const auto& [u, v] : {std::pair<int, int>{u1, u2}, {u2, u1}}) {
      const auto key = std::make_pair(u, j);
      if (partner.count(key))
        throw RouteGenError("segment " + zs(u) + " has two connections at zone " +
                            zs(j));
      partner[key] = v;
    }
  };
  std::set<std::tuple<int, int, int>> conns = connections;

  // break connection cycles at their smallest zone before chaining
  {
    // a cycle component has every segment with exactly two connections;
    // drop its smallest-zone connection so it chains like an open route
    std::map<int, int> degree;  // segment -> number of connections
    for (const auto& [j, u1, u2] : conns) {
      degree[u1] += 1;
      degree[u2] += 1;
    }
    // A cycle component has every segment with degree 2.
    std::map<int, std::vector<std::tuple<int, int, int>>> by_comp;
    Components comp2(net.segments.size());
    for (const auto& c : conns) comp2.unite(std::get<1>(c), std::get<2>(c));
    for (const auto& c : conns)
      by_comp[comp2.find(std::get<1>(c))].push_back(c);
    for (auto& [root, cs] : by_comp) {
      bool cycle = true;
      std::set<int> segs;
      for (const auto& c : cs) {
        segs.insert(std::get<1>(c));
        segs.insert(std::get<2>(c));
      }
      for (int s : segs)
        if (degree[s] != 2) cycle = false;
      if (!cycle || cs.size() != segs.size()) continue;
      const auto drop = *std::min_element(
          cs.begin(), cs.end(), [](const auto& a, const auto& b) {
            return std::get<0>(a) < std::get<0>(b);
          });
      conns.erase(drop);
      plan.warnings.push_back("connection cycle broken at zone " +
                              zs(std::get<0>(drop)));
    }
  }
  for (const auto& [j, u1, u2] : conns) link(j, u1, u2);

  std::vector<char> visited(net.segments.size(), 0);
  auto other_end = [&](int u, int z) {
    const auto& s = net.segments[static_cast<std::size_t>(u)];
    return s.a == z ? s.b : s.a;
  };
  for (std::size_t s0 = 0; s0 < net.segments.size(); ++s0) {
    if (visited[s0]) continue;
    const auto& seg = net.segments[s0];
    int start_zone = -1;
    if (!partner.count({seg.id, seg.a}))
      start_zone = seg.a;
    else if (!partner.count({seg.id, seg.b}))
      start_zone = seg.b;
    if (start_zone < 0) continue;  // mid-chain; reached from an end
    RoutePlan::Route route;
    int zone = start_zone;
    int cur = seg.id;
    route.zones.push_back(zone);
    while (true) {
      visited[static_cast<std::size_t>(cur)] = 1;
      route.segments.push_back(cur);
      zone = other_end(cur, zone);
      route.zones.push_back(zone);
      const auto next = partner.find({cur, zone});
      if (next == partner.end()) break;
      cur = next->second;
    }
    if (route.zones.front() > route.zones.back()) {
      std::reverse(route.zones.begin(), route.zones.end());
      std::reverse(route.segments.begin(), route.segments.end());
    }
    for (std::size_t t = 0; t + 1 < route.zones.size(); ++t) {
      const auto it = net.length_km.find(
          undirected(route.zones[t], route.zones[t + 1]));
      if (it != net.length_km.end()) route.length_km += it->second;
    }
    plan.routes.push_back(std::move(route));
  }
  for (std::size_t r = 0; r < plan.routes.size(); ++r)
    for (int s : plan.routes[r].segments)
      plan.segment_route[static_cast<std::size_t>(s)] = static_cast<int>(r);
  double len = 0.0;
  for (const auto& r : plan.routes) len += r.length_km;
  plan.avg_length_km = plan.routes.empty()
                           ? 0.0
                           : len / static_cast<double>(plan.routes.size());
  return plan;
}

}  // namespace

const std::vector<int>& SegmentNetwork::segments_on(int i, int j) const {
  static const std::vector<int> empty;
  const auto it = link_segments.find(undirected(i, j));
  return it == link_segments.end() ? empty : it->second;
}

SegmentNetwork derive_segments(const ZonalSolution& sol, Mode mode,
                               double design_headway, double design_occ,
                               const CostTables* costs) {
  if (design_headway <= 0.0 || design_occ <= 0.0)
    throw RouteGenError("segment sizing needs positive design headway and occupancy");
  SegmentNetwork net;
  net.mode = mode;
  for (const auto& [key, v] : sol.link_flows) {
    const auto& [o, m, i, j] = key;
    if (m != mode || v <= kFlowTol) continue;
    net.flow[{i, j}] += v;
  }
  for (auto it = net.flow.begin(); it != net.flow.end();) {
    if (it->second <= kFlowTol)
      it = net.flow.erase(it);
    else
      ++it;
  }
  std::set<std::pair<int, int>> pairs;
  for (const auto& [ij, f] : net.flow) pairs.insert(undirected(ij.first, ij.second));
  int next_id = 0;
  for (const auto& [a, b] : pairs) {
    double fmax = 0.0;
    const auto fwd = net.flow.find({a, b});
    const auto bwd = net.flow.find({b, a});
    if (fwd != net.flow.end()) fmax = std::max(fmax, fwd->second);
    if (bwd != net.flow.end()) fmax = std::max(fmax, bwd->second);
    const int n = std::max(
        1, static_cast<int>(std::ceil(fmax * design_headway / design_occ -
                                      1e-9)));
    auto& ids = net.link_segments[{a, b}];
    for (int s = 0; s < n; ++s) {
      net.segments.push_back({next_id, a, b});
      ids.push_back(next_id);
      ++next_id;
    }
    if (costs) net.length_km[{a, b}] = costs->link_cost(mode, a, b).dist;
  }
  return net;
}

RouteGenModel build_route_model(const SegmentNetwork& net,
                                const ZonalSolution& sol,
                                const RouteGenOptions& opts) {
  RouteGenModel rm;
  rm.net = net;
  rm.opts = opts;
  milp::Model& M = rm.model;
  const Mode mode = net.mode;

  // origins touching this mode
  std::set<int> origin_set;
  for (const auto& [k, v] : sol.link_flows)
    if (std::get<1>(k) == mode && v > kFlowTol) origin_set.insert(std::get<0>(k));
  for (const auto& [k, v] : sol.start_flows)
    if (k.second == mode && v > kFlowTol) origin_set.insert(k.first);
  rm.origins.assign(origin_set.begin(), origin_set.end());

  // per-origin helpers against the zonal solution
  auto fl = [&](int o, int i, int j) { return sol.link_flow(o, mode, i, j); };
  auto in_transfers = [&](int o, int i) {
    double t = 0.0;
    for (const auto& [k, v] : sol.transfer_flows)
      if (std::get<0>(k) == o && std::get<2>(k) == mode && std::get<3>(k) == i)
        t += v;
    return t;
  };
  auto out_transfers = [&](int o, int j) {
    double t = 0.0;
    for (const auto& [k, v] : sol.transfer_flows)
      if (std::get<0>(k) == o && std::get<1>(k) == mode && std::get<3>(k) == j)
        t += v;
    return t;
  };

  for (const auto& [k, v] : sol.link_flows) {
    if (std::get<1>(k) != mode || v <= kFlowTol) continue;
    if (!net.link_active(std::get<2>(k), std::get<3>(k)))
      throw RouteGenError("zonal flow on link (" + zs(std::get<2>(k)) + "," +
                          zs(std::get<3>(k)) + ") missing from the segment network");
  }

  // ---- variables ---------------------------------------------------------
  for (int o : rm.origins) {
    for (const auto& [ij, fagg] : net.flow) {
      const auto& [i, j] = ij;
      if (fl(o, i, j) <= kFlowTol) continue;
      for (int u : net.segments_on(i, j)) {
        const std::string suffix =
            zs(o) + "_" + zs(i) + "_" + zs(j) + "_" + zs(u);
        rm.seg_flow_var[{o, i, j, u}] =
            M.add_variable("flw_" + suffix, 0.0, milp::kInf);
        rm.start_var[{o, i, j, u}] =
            M.add_variable("fs_" + suffix, 0.0, milp::kInf);
        rm.end_var[{o, i, j, u}] =
            M.add_variable("fe_" + suffix, 0.0, milp::kInf);
      }
    }
    // junction pair flows where the origin uses both sides
    for (const auto& [in_ij, fin] : net.flow) {
      const auto& [i, j] = in_ij;
      if (fl(o, i, j) <= kFlowTol) continue;
      for (const auto& [out_jk, fout] : net.flow) {
        const auto& [j2, k] = out_jk;
        if (j2 != j || fl(o, j, k) <= kFlowTol) continue;
        const bool same_link = undirected(i, j) == undirected(j, k);
        for (int u1 : net.segments_on(i, j))
          for (int u2 : net.segments_on(j, k)) {
            const std::string suffix =
                zs(o) + "_" + zs(j) + "_" + zs(u1) + "_" + zs(u2);
            if (!rm.transfer_var.count({o, j, u1, u2})) {
              const int var = M.add_variable("ft_" + suffix, 0.0, milp::kInf);
              rm.transfer_var[{o, j, u1, u2}] = var;
              M.add_objective(var, 1.0);
            }
            if (!same_link && !rm.direct_var.count({o, j, u1, u2}))
              rm.direct_var[{o, j, u1, u2}] =
                  M.add_variable("fd_" + suffix, 0.0, milp::kInf);
          }
      }
    }
  }
  // connection binaries where some direct flow is even possible
  std::set<std::tuple<int, int, int>> pair_keys;
  for (const auto& [k, var] : rm.direct_var) {
    const auto& [o, j, u1, u2] = k;
    if (opts.bidirectional)
      pair_keys.insert({j, std::min(u1, u2), std::max(u1, u2)});
    else
      pair_keys.insert({j, u1, u2});
  }
  for (const auto& [j, u1, u2] : opts.fixed_connections) {
    if (opts.bidirectional)
      pair_keys.insert({j, std::min(u1, u2), std::max(u1, u2)});
    else
      pair_keys.insert({j, u1, u2});
  }
  std::set<std::tuple<int, int, int>> fixed;
  for (const auto& [j, u1, u2] : opts.fixed_connections)
    fixed.insert({j, opts.bidirectional ? std::min(u1, u2) : u1,
                  opts.bidirectional ? std::max(u1, u2) : u2});
  for (const auto& [j, u1, u2] : pair_keys) {
    const double lb = fixed.count({j, u1, u2}) ? 1.0 : 0.0;
    rm.connect_var[{j, u1, u2}] = M.add_variable(
        "x_" + zs(j) + "_" + zs(u1) + "_" + zs(u2), lb, 1.0,
        milp::VarKind::Binary);
  }

  // ---- flow consistency with the zonal solution --------------------------
  for (int o : rm.origins) {
    std::map<int, std::vector<int>> starts_at, ends_at;  // zone -> vars
    for (const auto& [k, var] : rm.start_var)
      if (std::get<0>(k) == o) starts_at[std::get<1>(k)].push_back(var);
    for (const auto& [k, var] : rm.end_var)
      if (std::get<0>(k) == o) ends_at[std::get<2>(k)].push_back(var);

    std::set<int> zones;
    for (const auto& [z, v] : starts_at) zones.insert(z);
    for (const auto& [z, v] : ends_at) zones.insert(z);
    const double fa = sol.start_flow(o, mode);
    for (int z : zones) {
      const double rhs_start = (z == o) ? fa : in_transfers(o, z);
      const double rhs_end = sol.end_flow(o, mode, z) + out_transfers(o, z);
      if (starts_at.count(z)) {
        std::vector<std::pair<int, double>> row;
        for (int var : starts_at[z]) row.push_back({var, 1.0});
        M.add_constraint("board_" + zs(o) + "_" + zs(z), std::move(row),
                         milp::Relation::Equal, rhs_start);
      } else if (rhs_start > 1e-6) {
        throw RouteGenError("origin " + zs(o) + " boards at zone " + zs(z) +
                            " with no active outgoing link");
      }
      if (ends_at.count(z)) {
        std::vector<std::pair<int, double>> row;
        for (int var : ends_at[z]) row.push_back({var, 1.0});
        M.add_constraint("alight_" + zs(o) + "_" + zs(z), std::move(row),
                         milp::Relation::Equal, rhs_end);
      } else if (rhs_end > 1e-6) {
        throw RouteGenError("origin " + zs(o) + " alights at zone " + zs(z) +
                            " with no active inbound link");
      }
    }
    // segment flows sum to the zonal link flow
    for (const auto& [ij, fagg] : net.flow) {
      const auto& [i, j] = ij;
      const double f = fl(o, i, j);
      if (f <= kFlowTol) continue;
      std::vector<std::pair<int, double>> row;
      for (int u : net.segments_on(i, j))
        row.push_back({rm.seg_flow_var.at({o, i, j, u}), 1.0});
      M.add_constraint("link_split_" + zs(o) + "_" + zs(i) + "_" + zs(j),
                       std::move(row), milp::Relation::Equal, f);
      // inbound balance of each segment in this direction of travel
      for (int u : net.segments_on(i, j)) {
        std::vector<std::pair<int, double>> in_row;
        in_row.push_back({rm.seg_flow_var.at({o, i, j, u}), 1.0});
        in_row.push_back({rm.start_var.at({o, i, j, u}), -1.0});
        for (const auto& [k, var] : rm.transfer_var)
          if (std::get<0>(k) == o && std::get<1>(k) == i && std::get<3>(k) == u)
            in_row.push_back({var, -1.0});
        for (const auto& [k, var] : rm.direct_var)
          if (std::get<0>(k) == o && std::get<1>(k) == i && std::get<3>(k) == u)
            in_row.push_back({var, -1.0});
        M.add_constraint("seg_in_" + zs(o) + "_" + zs(i) + "_" + zs(j) + "_" +
                             zs(u),
                         std::move(in_row), milp::Relation::Equal, 0.0);
        std::vector<std::pair<int, double>> out_row;
        out_row.push_back({rm.seg_flow_var.at({o, i, j, u}), 1.0});
        out_row.push_back({rm.end_var.at({o, i, j, u}), -1.0});
        for (const auto& [k, var] : rm.transfer_var)
          if (std::get<0>(k) == o && std::get<1>(k) == j && std::get<2>(k) == u)
            out_row.push_back({var, -1.0});
        for (const auto& [k, var] : rm.direct_var)
          if (std::get<0>(k) == o && std::get<1>(k) == j && std::get<2>(k) == u)
            out_row.push_back({var, -1.0});
        M.add_constraint("seg_out_" + zs(o) + "_" + zs(i) + "_" + zs(j) + "_" +
                             zs(u),
                         std::move(out_row), milp::Relation::Equal, 0.0);
      }
    }
  }

  // pinned boarding: all start flow of (origin, i, j) rides one segment
  for (const auto& [key, seg] : opts.fixed_boarding) {
    const auto& [o, i, j] = key;
    for (int u : net.segments_on(i, j)) {
      if (u == seg) continue;
      const auto it = rm.start_var.find({o, i, j, u});
      if (it != rm.start_var.end() && o == i)
        M.variable(it->second).upper = 0.0;
    }
  }

  // ---- connection linking, degree limits ---------------------------------
  std::map<int, double> junction_flow;
  for (const auto& [ij, f] : net.flow) junction_flow[ij.second] += f;
  for (const auto& [key, xvar] : rm.connect_var) {
    const auto& [j, u1, u2] = key;
    std::vector<std::pair<int, double>> bigm{{xvar, junction_flow[j] + 1.0}};
    std::vector<std::pair<int, double>> support{{xvar, -1.0}};
    for (int o : rm.origins) {
      for (const auto& [a, b] :
           opts.bidirectional
               ? std::vector<std::pair<int, int>>{{u1, u2}, {u2, u1}}
               : std::vector<std::pair<int, int>>{{u1, u2}}) {
        const auto it = rm.direct_var.find({o, j, a, b});
        if (it != rm.direct_var.end()) {
          bigm.push_back({it->second, -1.0});
          support.push_back({it->second, 1.0 / opts.eps});
        }
      }
    }
    M.add_constraint("direct_needs_connection_" + zs(j) + "_" + zs(u1) + "_" +
                         zs(u2),
                     std::move(bigm), milp::Relation::GreaterEqual, 0.0);
    if (!fixed.count(key))
      M.add_constraint("connection_needs_direct_" + zs(j) + "_" + zs(u1) +
                           "_" + zs(u2),
                       std::move(support), milp::Relation::GreaterEqual, 0.0);
  }
  // at most one connection per segment endpoint
  std::map<std::pair<int, int>, std::vector<int>> at_end;  // (u, zone) -> x
  for (const auto& [key, xvar] : rm.connect_var) {
    const auto& [j, u1, u2] = key;
    at_end[{u1, j}].push_back(xvar);
    at_end[{u2, j}].push_back(xvar);
  }
  for (const auto& [uj, vars] : at_end) {
    std::vector<std::pair<int, double>> row;
    for (int v : vars) row.push_back({v, 1.0});
    M.add_constraint("one_connection_" + zs(uj.first) + "_" + zs(uj.second),
                     std::move(row), milp::Relation::LessEqual, 1.0);
  }

  M.finalize();
  return rm;
}

bool RouteGenSolution::connected(int j, int u1, int u2) const {
  return connections.count({j, std::min(u1, u2), std::max(u1, u2)}) > 0 ||
         connections.count({j, u1, u2}) > 0;
}

RouteGenSolution solve_routes(const RouteGenModel& model,
                              const milp::SolverSettings& settings,
                              const MilpSolver& solver) {
  RouteGenSolution out;
  if (model.model.num_variables() == 0) {
    out.status = milp::SolveStatus::Optimal;
    return out;
  }
  const milp::Solution raw =
      solver ? solver(model.model) : milp::solve(model.model, settings);
  out.status = raw.status;
  out.objective = raw.objective;
  out.bound = raw.best_bound;
  out.gap = raw.gap;
  if (raw.status != milp::SolveStatus::Optimal &&
      raw.status != milp::SolveStatus::FeasibleWithGap)
    return out;
  const auto value = [&](int var) {
    const double v = raw.values[static_cast<std::size_t>(var)];
    return std::abs(v) < kFlowTol ? 0.0 : v;
  };
  for (const auto& [k, var] : model.connect_var)
    if (value(var) > 0.5) out.connections.insert(k);
  for (const auto& [k, var] : model.start_var)
    if (value(var) > 0.0) out.start_flows[k] = value(var);
  for (const auto& [k, var] : model.end_var)
    if (value(var) > 0.0) out.end_flows[k] = value(var);
  for (const auto& [k, var] : model.seg_flow_var)
    if (value(var) > 0.0) out.seg_flows[k] = value(var);
  for (const auto& [k, var] : model.direct_var)
    if (value(var) > 0.0) out.direct_flows[k] = value(var);
  for (const auto& [k, var] : model.transfer_var)
    if (value(var) > 0.0) out.transfer_flows[k] = value(var);
  return out;
}

RoutePlan assemble_routes(const RouteGenSolution& rsol,
                          const SegmentNetwork& net) {
  RoutePlan plan = plan_from_connections(net, rsol.connections);
  plan.total_transfers = rsol.objective;
  for (const auto& [k, v] : rsol.start_flows) {
    const int route = plan.segment_route[static_cast<std::size_t>(std::get<3>(k))];
    if (route >= 0) plan.routes[static_cast<std::size_t>(route)].trips += v;
  }
  for (const auto& [k, v] : rsol.transfer_flows) {
    const int route = plan.segment_route[static_cast<std::size_t>(std::get<3>(k))];
    if (route >= 0) plan.routes[static_cast<std::size_t>(route)].trips += v;
  }
  for (const auto& r : plan.routes) plan.total_trips += r.trips;
  return plan;
}

TransferCount count_transfers(const RoutePlan& plan,
                              const std::vector<OdPathFlows>& paths) {
  TransferCount tc;
  // connected pairs keyed by (junction, u1, u2) in both orders
  std::set<std::tuple<int, int, int>> connected;
  for (const auto& r : plan.routes)
    for (std::size_t t = 0; t + 1 < r.segments.size(); ++t) {
      const int j = r.zones[t + 1];
      connected.insert({j, r.segments[t], r.segments[t + 1]});
      connected.insert({j, r.segments[t + 1], r.segments[t]});
    }

  // plan.mode segments per undirected link
  std::map<std::pair<int, int>, std::vector<int>> segs;
  for (const auto& r : plan.routes)
    for (std::size_t t = 0; t + 1 < r.zones.size(); ++t)
      segs[undirected(r.zones[t], r.zones[t + 1])].push_back(
          r.segments[t]);
  for (auto& [ij, v] : segs) std::sort(v.begin(), v.end());

  for (const OdPathFlows& pf : paths) {
    for (const auto& [dest, plist] : pf.by_dest) {
      for (const OdPath& p : plist) {
        double path_transfers = 0.0;
        // process maximal same-mode runs of consecutive arcs
        std::size_t a = 0;
        while (a < p.arcs.size()) {
          if (p.arcs[a].mode != plan.mode) {
            ++a;
            continue;
          }
          std::size_t b = a;
          while (b + 1 < p.arcs.size() && p.arcs[b + 1].mode == plan.mode &&
                 p.arcs[b + 1].from == p.arcs[b].to)
            ++b;
          // DP over segment choices along arcs [a, b]
          struct State {
            double cost = 0.0;
            int parent = -1;  // index into previous column
          };
          std::vector<std::vector<int>> cols;
          for (std::size_t t = a; t <= b; ++t) {
            const auto it = segs.find(undirected(p.arcs[t].from, p.arcs[t].to));
            if (it == segs.end() || it->second.empty())
              throw RouteGenError("path uses link (" + zs(p.arcs[t].from) +
                                  "," + zs(p.arcs[t].to) +
                                  ") not covered by any route");
            cols.push_back(it->second);
          }
          std::vector<std::vector<State>> dp(cols.size());
          dp[0].assign(cols[0].size(), {0.0, -1});
          for (std::size_t t = 1; t < cols.size(); ++t) {
            dp[t].assign(cols[t].size(), {std::numeric_limits<double>::max(), -1});
            const int junction = p.arcs[a + t].from;
            for (std::size_t c = 0; c < cols[t].size(); ++c) {
              for (std::size_t cp = 0; cp < cols[t - 1].size(); ++cp) {
                const int u_prev = cols[t - 1][cp];
                const int u = cols[t][c];
                const bool direct =
                    u_prev == u ||
                    connected.count({junction, u_prev, u}) > 0;
                const double cost = dp[t - 1][cp].cost + (direct ? 0.0 : 1.0);
                if (cost < dp[t][c].cost) {
                  dp[t][c].cost = cost;
                  dp[t][c].parent = static_cast<int>(cp);
                }
              }
            }
          }
          std::size_t best = 0;
          for (std::size_t c = 1; c < dp.back().size(); ++c)
            if (dp.back()[c].cost < dp.back()[best].cost) best = c;
          const double run_transfers = dp.back()[best].cost;
          path_transfers += run_transfers;
          // reconstruct for boarding attribution
          std::vector<int> chosen(cols.size());
          int cur = static_cast<int>(best);
          for (std::size_t t = cols.size(); t-- > 0;) {
            chosen[t] = cols[t][static_cast<std::size_t>(cur)];
            cur = dp[t][static_cast<std::size_t>(cur)].parent;
          }
          int cur_route = plan.segment_route[static_cast<std::size_t>(chosen[0])];
          tc.route_boardings[cur_route] += p.flow;
          for (std::size_t t = 1; t < chosen.size(); ++t) {
            const int junction = p.arcs[a + t].from;
            const bool direct =
                chosen[t - 1] == chosen[t] ||
                connected.count({junction, chosen[t - 1], chosen[t]}) > 0;
            if (!direct) {
              cur_route = plan.segment_route[static_cast<std::size_t>(chosen[t])];
              tc.route_boardings[cur_route] += p.flow;
            }
          }
          a = b + 1;
        }
        if (path_transfers > 0.0) {
          tc.total += p.flow * path_transfers;
          tc.by_od[{p.origin, p.dest}] += p.flow * path_transfers;
        } else {
          tc.by_od[{p.origin, p.dest}] += 0.0;
        }
      }
    }
  }
  return tc;
}

RoutePlan myopic_routes(const SegmentNetwork& net, const ZonalSolution& sol,
                        const DemandMatrix& demand) {
  // decomposed paths drive both the through flows and the final recount
  std::vector<OdPathFlows> paths;
  std::set<int> origins;
  for (const auto& [od, e] : demand.entries)
    if (e > 0.0) origins.insert(od.first);
  for (int o : origins) paths.push_back(disaggregate_od_flows(sol, demand, o));

  // through flow per junction between unordered link pairs
  std::map<int, std::map<std::pair<std::pair<int, int>, std::pair<int, int>>,
                         double>>
      through;
  for (const OdPathFlows& pf : paths)
    for (const auto& [dest, plist] : pf.by_dest)
      for (const OdPath& p : plist)
        for (std::size_t t = 0; t + 1 < p.arcs.size(); ++t) {
          const auto& a1 = p.arcs[t];
          const auto& a2 = p.arcs[t + 1];
          if (a1.mode != net.mode || a2.mode != net.mode) continue;
          if (a1.to != a2.from) continue;
          const auto l1 = undirected(a1.from, a1.to);
          const auto l2 = undirected(a2.from, a2.to);
          if (l1 == l2) continue;
          through[a1.to][{std::min(l1, l2), std::max(l1, l2)}] += p.flow;
        }

  std::vector<std::pair<double, int>> junctions;  // (-total flow, zone)
  for (const auto& [j, pairs] : through) {
    double total = 0.0;
    for (const auto& [lp, f] : pairs) total += f;
    junctions.push_back({-total, j});
  }
  std::sort(junctions.begin(), junctions.end());

  std::set<std::tuple<int, int, int>> connections;
  std::set<std::pair<int, int>> used_end;  // (segment, zone)
  Components comp(net.segments.size());

  for (const auto& [neg_total, j] : junctions) {
    auto remaining = through.at(j);
    while (true) {
      // best still-connectable pair: highest remaining flow, then lowest
      // candidate segment ids
      double best_flow = 0.0;
      std::pair<int, int> best_segs{-1, -1};
      for (const auto& [lp, f] : remaining) {
        if (f <= kFlowTol || f < best_flow - 1e-12) continue;
        const auto its1 = net.link_segments.find(lp.first);
        const auto its2 = net.link_segments.find(lp.second);
        if (its1 == net.link_segments.end() || its2 == net.link_segments.end())
          continue;
        std::pair<int, int> cand{-1, -1};
        for (int s1 : its1->second) {
          if (used_end.count({s1, j})) continue;
          for (int s2 : its2->second) {
            if (used_end.count({s2, j})) continue;
            if (comp.find(s1) == comp.find(s2)) continue;  // would cycle
            cand = {s1, s2};
            break;
          }
          if (cand.first >= 0) break;
        }
        if (cand.first < 0) continue;
        const std::pair<int, int> key{std::min(cand.first, cand.second),
                                      std::max(cand.first, cand.second)};
        std::pair<int, int> best_key{std::numeric_limits<int>::max(),
                                     std::numeric_limits<int>::max()};
        if (best_segs.first >= 0)
          best_key = {std::min(best_segs.first, best_segs.second),
                      std::max(best_segs.first, best_segs.second)};
        if (f > best_flow + 1e-12 ||
            (std::abs(f - best_flow) <= 1e-12 && key < best_key)) {
          best_flow = f;
          best_segs = cand;
        }
      }
      if (best_segs.first < 0) break;
      // find and clear the entry that produced this pair
      for (auto& [lp, f] : remaining) {
        const auto& s1l =
            net.segments[static_cast<std::size_t>(best_segs.first)];
        const auto& s2l =
            net.segments[static_cast<std::size_t>(best_segs.second)];
        const auto l1 = std::make_pair(s1l.a, s1l.b);
        const auto l2 = std::make_pair(s2l.a, s2l.b);
        if ((lp.first == l1 && lp.second == l2) ||
            (lp.first == l2 && lp.second == l1))
          f = 0.0;
      }
      connections.insert({j, std::min(best_segs.first, best_segs.second),
                          std::max(best_segs.first, best_segs.second)});
      used_end.insert({best_segs.first, j});
      used_end.insert({best_segs.second, j});
      comp.unite(best_segs.first, best_segs.second);
    }
  }

  RoutePlan plan = plan_from_connections(net, connections);
  const TransferCount tc = count_transfers(plan, paths);
  plan.total_transfers = tc.total;
  for (const auto& [route, boardings] : tc.route_boardings) {
    if (route >= 0) plan.routes[static_cast<std::size_t>(route)].trips += boardings;
    plan.total_trips += boardings;
  }
  return plan;
}

}  // namespace mtnd
