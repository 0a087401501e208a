#include "mtnd/zonal.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <sstream>

#include "mtnd/milp/solver.hpp"

namespace mtnd {

namespace {

std::string zs(int z) { return std::to_string(z); }

// Per-origin reachability over the multimodal arc graph: interzonal moves
// along candidate links (never back into the origin) and mode switches at
// any non-origin zone.
void check_reachability(const DemandMatrix& demand,
                        const CandidateLinkSet& links,
                        const std::vector<Mode>& modes, int n) {
  const int nm = static_cast<int>(modes.size());
  for (int o = 0; o < n; ++o) {
    std::vector<int> dests;
    for (const auto& [od, e] : demand.entries)
      if (od.first == o && e > 0.0) dests.push_back(od.second);
    if (dests.empty()) continue;
    std::vector<char> seen(static_cast<std::size_t>(nm * n), 0);
    std::deque<std::pair<int, int>> queue;  // (mode idx, zone)
    for (int mi = 0; mi < nm; ++mi) {
      seen[static_cast<std::size_t>(mi * n + o)] = 1;
      queue.push_back({mi, o});
    }
    while (!queue.empty()) {
      const auto [mi, i] = queue.front();
      queue.pop_front();
      const Mode m = modes[static_cast<std::size_t>(mi)];
      const auto it = links.links.find(m);
      if (it != links.links.end()) {
        for (const auto& [ij, cnt] : it->second) {
          if (ij.first != i || ij.second == o) continue;
          const auto idx = static_cast<std::size_t>(mi * n + ij.second);
          if (!seen[idx]) {
            seen[idx] = 1;
            queue.push_back({mi, ij.second});
          }
        }
      }
      if (i != o) {
        for (int mj = 0; mj < nm; ++mj) {
          const auto idx = static_cast<std::size_t>(mj * n + i);
          if (!seen[idx]) {
            seen[idx] = 1;
            queue.push_back({mj, i});
          }
        }
      }
    }
    for (int d : dests) {
      bool ok = false;
      for (int mi = 0; mi < nm && !ok; ++mi)
        ok = seen[static_cast<std::size_t>(mi * n + d)] != 0;
      if (!ok)
        throw InfeasibleInput("no multimodal path for demand pair (" + zs(o) +
                              "," + zs(d) + ") in the candidate network");
    }
  }
}

}  // namespace

double ZonalSolution::start_flow(int o, Mode m) const {
  const auto it = start_flows.find({o, m});
  return it == start_flows.end() ? 0.0 : it->second;
}
double ZonalSolution::end_flow(int o, Mode m, int d) const {
  const auto it = end_flows.find({o, m, d});
  return it == end_flows.end() ? 0.0 : it->second;
}
double ZonalSolution::link_flow(int o, Mode m, int i, int j) const {
  const auto it = link_flows.find({o, m, i, j});
  return it == link_flows.end() ? 0.0 : it->second;
}
double ZonalSolution::transfer_flow(int o, Mode m1, Mode m2, int i) const {
  const auto it = transfer_flows.find({o, m1, m2, i});
  return it == transfer_flows.end() ? 0.0 : it->second;
}
int ZonalSolution::connection(Mode m, int i, int j) const {
  const auto it = connections.find({m, i, j});
  return it == connections.end() ? 0 : it->second;
}

ZonalModel build_zonal_model(const CostTables& costs,
                             const DemandMatrix& demand,
                             const ParameterProfile& profile,
                             const CandidateLinkSet& links,
                             const ZonalOptions& opts) {
  if (opts.modes_enabled.empty())
    throw InfeasibleInput("no modes enabled for the zonal model");
  if (opts.include_no_backflow && !opts.include_min_flow)
    throw InfeasibleInput(
        "the one-way-flow option requires the minimum-link-flow option");
  const int n = demand.zones;
  const std::vector<Mode>& modes = opts.modes_enabled;
  check_reachability(demand, links, modes, n);

  ZonalModel zm;
  zm.zones = n;
  zm.modes = modes;
  zm.opts = opts;
  milp::Model& M = zm.model;
  const GlobalParams& g = profile.globals;

  const double total_demand = demand.total();
  std::vector<double> dem_o(static_cast<std::size_t>(n), 0.0);
  for (const auto& [od, e] : demand.entries)
    dem_o[static_cast<std::size_t>(od.first)] += e;

  // ---- variables ---------------------------------------------------------
  for (int o = 0; o < n; ++o) {
    if (dem_o[static_cast<std::size_t>(o)] <= 0.0) continue;
    for (Mode m : modes) {
      const std::string mo = mode_name(m);
      double start_ub = milp::kInf;
      if (m == Mode::SAV) start_ub = g.sav_start_cap;
      zm.start_var[{o, m}] =
          M.add_variable("fa_" + zs(o) + "_" + mo, 0.0, start_ub);
      for (const auto& [od, e] : demand.entries) {
        if (od.first != o || e <= 0.0) continue;
        zm.end_var[{o, m, od.second}] = M.add_variable(
            "fb_" + zs(o) + "_" + mo + "_" + zs(od.second), 0.0, milp::kInf);
      }
      const auto it = links.links.find(m);
      if (it != links.links.end()) {
        for (const auto& [ij, cnt] : it->second) {
          if (ij.second == o) continue;
          zm.link_var[{o, m, ij.first, ij.second}] = M.add_variable(
              "fl_" + zs(o) + "_" + mo + "_" + zs(ij.first) + "_" +
                  zs(ij.second),
              0.0, milp::kInf);
        }
      }
    }
    for (Mode m1 : modes)
      for (Mode m2 : modes) {
        if (m1 == m2) continue;
        for (int i = 0; i < n; ++i) {
          if (i == o) continue;
          zm.transfer_var[{o, m1, m2, i}] = M.add_variable(
              "fx_" + zs(o) + "_" + mode_name(m1) + "_" + mode_name(m2) + "_" +
                  zs(i),
              0.0, milp::kInf);
        }
      }
  }
  for (Mode m : modes) {
    const ModeSpec& spec = profile.mode(m);
    if (!spec.is_transit) continue;
    const auto it = links.links.find(m);
    if (it == links.links.end()) continue;
    for (const auto& [ij, exist] : it->second) {
      if (ij.first >= ij.second) continue;
      const double peak =
          std::ceil(total_demand * spec.design_headway / spec.design_occ);
      const double ub = peak + exist;
      zm.connection_var[{m, ij.first, ij.second}] = M.add_variable(
          "xl_" + mode_name(m) + "_" + zs(ij.first) + "_" + zs(ij.second), 0.0,
          std::max(ub, 1.0), milp::VarKind::Integer);
      if (spec.is_infrastructure) {
        zm.build_var[{m, ij.first, ij.second}] = M.add_variable(
            "xw_" + mode_name(m) + "_" + zs(ij.first) + "_" + zs(ij.second),
            0.0, std::max(ub, 1.0), milp::VarKind::Integer);
      }
    }
  }
  if (opts.include_no_backflow) {
    // direction indicators per origin over the union of candidate links
    std::set<std::pair<int, int>> all_links;
    for (Mode m : modes) {
      const auto it = links.links.find(m);
      if (it != links.links.end())
        for (const auto& [ij, cnt] : it->second) all_links.insert(ij);
    }
    for (int o = 0; o < n; ++o) {
      if (dem_o[static_cast<std::size_t>(o)] <= 0.0) continue;
      for (const auto& ij : all_links) {
        if (ij.second == o) continue;
        zm.direction_var[{o, ij.first, ij.second}] = M.add_variable(
            "xphi_" + zs(o) + "_" + zs(ij.first) + "_" + zs(ij.second), 0.0,
            1.0, milp::VarKind::Binary);
      }
    }
  }

  // ---- objective ---------------------------------------------------------
  for (const auto& [key, var] : zm.start_var) {
    const auto& [o, m] = key;
    const ModeSpec& spec = profile.mode(m);
    const auto& zc = costs.at(m, o);
    double coeff = g.vot * zc.start;
    coeff += zc.feeder_share / spec.feeder_design_occ *
             (spec.feeder_op_cost * zc.feeder_time +
              spec.feeder_em_cost * zc.feeder_dist);
    M.add_objective(var, coeff);
  }
  for (const auto& [key, var] : zm.end_var) {
    const auto& [o, m, d] = key;
    const ModeSpec& spec = profile.mode(m);
    const auto& zc = costs.at(m, d);
    double coeff = g.vot * zc.end;
    coeff += zc.feeder_share / spec.feeder_design_occ *
             (spec.feeder_op_cost * zc.feeder_time +
              spec.feeder_em_cost * zc.feeder_dist);
    M.add_objective(var, coeff);
  }
  for (const auto& [key, var] : zm.link_var) {
    const auto& [o, m, i, j] = key;
    const ModeSpec& spec = profile.mode(m);
    const auto& lc = costs.link_cost(m, i, j);
    double coeff = g.vot * lc.time;
    coeff += (spec.op_cost * lc.time + spec.em_cost * lc.dist) / spec.design_occ;
    M.add_objective(var, coeff);
  }
  for (const auto& [key, var] : zm.transfer_var) {
    const auto& [o, m1, m2, i] = key;
    M.add_objective(var, g.vot * costs.transfer_cost(m1, m2, i));
  }

  // ---- per-origin flow balance ------------------------------------------
  for (int o = 0; o < n; ++o) {
    const double d_o = dem_o[static_cast<std::size_t>(o)];
    if (d_o <= 0.0) continue;
    {
      std::vector<std::pair<int, double>> row;
      for (Mode m : modes) row.push_back({zm.start_var.at({o, m}), 1.0});
      M.add_constraint("start_demand_" + zs(o), std::move(row),
                       milp::Relation::Equal, d_o);
    }
    for (const auto& [od, e] : demand.entries) {
      if (od.first != o || e <= 0.0) continue;
      std::vector<std::pair<int, double>> row;
      for (Mode m : modes)
        row.push_back({zm.end_var.at({o, m, od.second}), 1.0});
      M.add_constraint("end_demand_" + zs(o) + "_" + zs(od.second),
                       std::move(row), milp::Relation::Equal, e);
    }
    for (Mode m : modes) {
      // outflow at the origin equals the start flow
      std::vector<std::pair<int, double>> row;
      row.push_back({zm.start_var.at({o, m}), 1.0});
      const auto it = links.links.find(m);
      if (it != links.links.end())
        for (const auto& [ij, cnt] : it->second)
          if (ij.first == o && ij.second != o)
            row.push_back({zm.link_var.at({o, m, o, ij.second}), -1.0});
      M.add_constraint("origin_balance_" + zs(o) + "_" + mode_name(m),
                       std::move(row), milp::Relation::Equal, 0.0);
      // balance at every other zone: inbound + received transfers =
      // outbound + given transfers + ending flow
      for (int i = 0; i < n; ++i) {
        if (i == o) continue;
        std::vector<std::pair<int, double>> bal;
        if (it != links.links.end()) {
          for (const auto& [ij, cnt] : it->second) {
            if (ij.second == i)
              bal.push_back({zm.link_var.at({o, m, ij.first, i}), 1.0});
            if (ij.first == i && ij.second != o)
              bal.push_back({zm.link_var.at({o, m, i, ij.second}), -1.0});
          }
        }
        for (Mode m1 : modes) {
          if (m1 == m) continue;
          bal.push_back({zm.transfer_var.at({o, m1, m, i}), 1.0});
          bal.push_back({zm.transfer_var.at({o, m, m1, i}), -1.0});
        }
        const auto ev = zm.end_var.find({o, m, i});
        if (ev != zm.end_var.end()) bal.push_back({ev->second, -1.0});
        if (!bal.empty())
          M.add_constraint(
              "node_balance_" + zs(o) + "_" + mode_name(m) + "_" + zs(i),
              std::move(bal), milp::Relation::Equal, 0.0);
      }
    }
  }

  // ---- link counts, budget, capacity ------------------------------------
  {
    std::vector<std::pair<int, double>> budget_row;
    for (const auto& [key, xw] : zm.build_var) {
      const auto& [m, i, j] = key;
      const ModeSpec& spec = profile.mode(m);
      budget_row.push_back({xw, spec.infra_cost * costs.link_cost(m, i, j).dist});
      // new links cover whatever the connection count needs beyond existing
      const int xl = zm.connection_var.at({m, i, j});
      M.add_constraint(
          "link_build_" + mode_name(m) + "_" + zs(i) + "_" + zs(j),
          {{xl, 1.0}, {xw, -1.0}}, milp::Relation::LessEqual,
          static_cast<double>(links.exist_count(m, i, j)));
    }
    M.add_constraint("budget", std::move(budget_row), milp::Relation::LessEqual,
                     opts.budget);
  }
  for (const auto& [key, xl] : zm.connection_var) {
    const auto& [m, i, j] = key;
    const ModeSpec& spec = profile.mode(m);
    for (const auto& dir : {std::pair<int, int>{i, j}, std::pair<int, int>{j, i}}) {
      std::vector<std::pair<int, double>> row;
      for (int o = 0; o < n; ++o) {
        const auto it = zm.link_var.find({o, m, dir.first, dir.second});
        if (it != zm.link_var.end()) row.push_back({it->second, 1.0});
      }
      if (opts.include_capacity) {
        row.push_back({xl, -spec.max_occ / spec.min_headway});
        M.add_constraint("link_capacity_" + mode_name(m) + "_" +
                             zs(dir.first) + "_" + zs(dir.second),
                         std::move(row), milp::Relation::LessEqual, 0.0);
      } else if (spec.is_infrastructure) {
        // keep the budget binding: flow needs at least one built link
        row.push_back({xl, -(total_demand + 1.0)});
        M.add_constraint("link_activation_" + mode_name(m) + "_" +
                             zs(dir.first) + "_" + zs(dir.second),
                         std::move(row), milp::Relation::LessEqual, 0.0);
      }
    }
    if (opts.include_min_flow) {
      std::vector<std::pair<int, double>> row;
      for (int o = 0; o < n; ++o) {
        const auto fwd = zm.link_var.find({o, m, i, j});
        const auto bwd = zm.link_var.find({o, m, j, i});
        if (fwd != zm.link_var.end()) row.push_back({fwd->second, 0.5});
        if (bwd != zm.link_var.end()) row.push_back({bwd->second, 0.5});
      }
      row.push_back({xl, -spec.min_occ / spec.max_headway});
      M.add_constraint("link_min_flow_" + mode_name(m) + "_" + zs(i) + "_" +
                           zs(j),
                       std::move(row), milp::Relation::GreaterEqual, 0.0);
    }
  }

  // ---- fleet and demand caps for the on-demand mode ----------------------
  if (std::find(modes.begin(), modes.end(), Mode::SAV) != modes.end()) {
    const ModeSpec& sav = profile.mode(Mode::SAV);
    const auto it = links.links.find(Mode::SAV);
    if (it != links.links.end()) {
      for (const auto& [ij, cnt] : it->second) {
        std::vector<std::pair<int, double>> row;
        for (int o = 0; o < n; ++o) {
          const auto lv = zm.link_var.find({o, Mode::SAV, ij.first, ij.second});
          if (lv != zm.link_var.end())
            row.push_back({lv->second, 1.0 / sav.design_occ});
        }
        if (!row.empty())
          M.add_constraint("sav_link_cap_" + zs(ij.first) + "_" + zs(ij.second),
                           std::move(row), milp::Relation::LessEqual,
                           g.sav_link_cap);
      }
    }
    for (int d = 0; d < n; ++d) {
      std::vector<std::pair<int, double>> row;
      for (int o = 0; o < n; ++o) {
        const auto ev = zm.end_var.find({o, Mode::SAV, d});
        if (ev != zm.end_var.end()) row.push_back({ev->second, 1.0});
      }
      if (!row.empty())
        M.add_constraint("sav_end_cap_" + zs(d), std::move(row),
                         milp::Relation::LessEqual, g.sav_end_cap);
    }
    std::vector<std::pair<int, double>> fleet;
    for (const auto& [key, var] : zm.link_var) {
      const auto& [o, m, i, j] = key;
      if (m != Mode::SAV) continue;
      fleet.push_back({var, costs.link_cost(Mode::SAV, i, j).time /
                                (sav.design_occ * g.sav_util)});
    }
    if (!fleet.empty())
      M.add_constraint("sav_fleet", std::move(fleet),
                       milp::Relation::LessEqual, g.sav_fleet);
  }

  // ---- per-origin one-way flow restriction -------------------------------
  if (opts.include_no_backflow) {
    std::set<std::pair<int, std::pair<int, int>>> done;
    for (const auto& [key, phi] : zm.direction_var) {
      const auto& [o, i, j] = key;
      std::vector<std::pair<int, double>> row;
      for (Mode m : modes) {
        const auto lv = zm.link_var.find({o, m, i, j});
        if (lv != zm.link_var.end()) row.push_back({lv->second, 1.0});
      }
      row.push_back({phi, -dem_o[static_cast<std::size_t>(o)]});
      M.add_constraint("one_way_link_" + zs(o) + "_" + zs(i) + "_" + zs(j),
                       std::move(row), milp::Relation::LessEqual, 0.0);
      const auto rev = zm.direction_var.find({o, j, i});
      if (rev != zm.direction_var.end() &&
          !done.count({o, {std::min(i, j), std::max(i, j)}})) {
        done.insert({o, {std::min(i, j), std::max(i, j)}});
        M.add_constraint("one_way_choice_" + zs(o) + "_" + zs(std::min(i, j)) +
                             "_" + zs(std::max(i, j)),
                         {{phi, 1.0}, {rev->second, 1.0}},
                         milp::Relation::LessEqual, 1.0);
      }
    }
  }

  M.finalize();
  return zm;
}

ZonalSolution solve_zonal(const ZonalModel& zm,
                          const milp::SolverSettings& settings,
                          const MilpSolver& solver) {
  const milp::Solution raw =
      solver ? solver(zm.model) : milp::solve(zm.model, settings);
  ZonalSolution sol;
  sol.status = raw.status;
  sol.objective = raw.objective;
  sol.bound = raw.best_bound;
  sol.gap = raw.gap;
  if (raw.status != milp::SolveStatus::Optimal &&
      raw.status != milp::SolveStatus::FeasibleWithGap)
    return sol;
  const auto value = [&](int var) {
    const double v = raw.values[static_cast<std::size_t>(var)];
    return std::abs(v) < 1e-9 ? 0.0 : v;
  };
  for (const auto& [key, var] : zm.start_var)
    if (value(var) > 0.0) sol.start_flows[key] = value(var);
  for (const auto& [key, var] : zm.end_var)
    if (value(var) > 0.0) sol.end_flows[key] = value(var);
  for (const auto& [key, var] : zm.link_var)
    if (value(var) > 0.0) sol.link_flows[key] = value(var);
  for (const auto& [key, var] : zm.transfer_var)
    if (value(var) > 0.0) sol.transfer_flows[key] = value(var);
  for (const auto& [key, var] : zm.connection_var) {
    const int x = static_cast<int>(std::lround(value(var)));
    if (x != 0) {
      const auto& [m, i, j] = key;
      sol.connections[{m, i, j}] = x;
      sol.connections[{m, j, i}] = x;
    }
  }
  for (const auto& [key, var] : zm.build_var) {
    const int x = static_cast<int>(std::lround(value(var)));
    if (x != 0) {
      const auto& [m, i, j] = key;
      sol.new_links[{m, i, j}] = x;
      sol.new_links[{m, j, i}] = x;
    }
  }
  for (const auto& [key, var] : zm.direction_var) {
    const int x = static_cast<int>(std::lround(value(var)));
    if (x != 0) sol.direction[key] = x;
  }
  return sol;
}

OdPathFlows disaggregate_od_flows(const ZonalSolution& sol,
                                  const DemandMatrix& demand, int origin,
                                  double feas_tol) {
  OdPathFlows out;
  out.origin = origin;

  std::map<std::pair<int, Mode>, double> fa;
  std::map<std::tuple<int, Mode, int>, double> fb;  // keyed like sol
  std::map<std::tuple<int, Mode, int, int>, double> fl;
  std::map<std::tuple<int, Mode, Mode, int>, double> fx;
  for (const auto& [k, v] : sol.start_flows)
    if (k.first == origin) fa[k] = v;
  for (const auto& [k, v] : sol.end_flows)
    if (std::get<0>(k) == origin) fb[k] = v;
  for (const auto& [k, v] : sol.link_flows)
    if (std::get<0>(k) == origin) fl[k] = v;
  for (const auto& [k, v] : sol.transfer_flows)
    if (std::get<0>(k) == origin) fx[k] = v;

  const double tol = feas_tol;
  auto remaining_starts = [&]() {
    double t = 0.0;
    for (const auto& [k, v] : fa) t += v;
    return t;
  };

  // A step is either a link arc or a transfer at a zone.
  struct Step {
    bool transfer = false;
    Mode mode = Mode::WALK;  // link mode, or source mode for a transfer
    Mode to_mode = Mode::WALK;
    int from = 0, to = 0;    // zones (equal for a transfer)
  };

  int guard = 0;
  while (remaining_starts() > tol) {
    if (++guard > 1000000)
      throw InfeasibleInput("flow decomposition did not converge at origin " +
                            zs(origin));
    // start on the first mode with remaining start flow
    Mode cur_mode = Mode::WALK;
    bool found = false;
    for (const auto& [k, v] : fa)
      if (v > tol) {
        cur_mode = k.second;
        found = true;
        break;
      }
    if (!found) break;
    int cur_zone = origin;
    std::vector<Step> steps;
    std::vector<std::pair<Mode, int>> states = {{cur_mode, cur_zone}};
    int dest = -1;
    while (true) {
      // prefer terminating when the current state carries ending flow
      const auto eb = fb.find({origin, cur_mode, cur_zone});
      if (cur_zone != origin && eb != fb.end() && eb->second > tol) {
        dest = cur_zone;
        break;
      }
      // otherwise take the first arc with residual flow: links before
      // transfers, each in key order for determinism
      bool advanced = false;
      for (auto& [k, v] : fl) {
        if (v <= tol) continue;
        if (std::get<1>(k) != cur_mode || std::get<2>(k) != cur_zone) continue;
        steps.push_back({false, cur_mode, cur_mode, cur_zone, std::get<3>(k)});
        cur_zone = std::get<3>(k);
        advanced = true;
        break;
      }
      if (!advanced && cur_zone != origin) {
        for (auto& [k, v] : fx) {
          if (v <= tol) continue;
          if (std::get<1>(k) != cur_mode || std::get<3>(k) != cur_zone)
            continue;
          steps.push_back({true, cur_mode, std::get<2>(k), cur_zone, cur_zone});
          cur_mode = std::get<2>(k);
          advanced = true;
          break;
        }
      }
      if (!advanced)
        throw InfeasibleInput(
            "flow decomposition stalled at origin " + zs(origin) + ", zone " +
            zs(cur_zone) + ", mode " + mode_name(cur_mode));
      // cancel any cycle (state revisit) without emitting a path
      const std::pair<Mode, int> state = {cur_mode, cur_zone};
      const auto seen = std::find(states.begin(), states.end(), state);
      if (seen != states.end()) {
        const auto first = static_cast<std::size_t>(seen - states.begin());
        double q = milp::kInf;
        for (std::size_t s = first; s < steps.size(); ++s) {
          const Step& st = steps[s];
          q = std::min(q, st.transfer
                              ? fx.at({origin, st.mode, st.to_mode, st.from})
                              : fl.at({origin, st.mode, st.from, st.to}));
        }
        for (std::size_t s = first; s < steps.size(); ++s) {
          const Step& st = steps[s];
          if (st.transfer)
            fx.at({origin, st.mode, st.to_mode, st.from}) -= q;
          else
            fl.at({origin, st.mode, st.from, st.to}) -= q;
        }
        steps.resize(first);
        states.resize(first + 1);
        cur_mode = states.back().first;
        cur_zone = states.back().second;
        continue;
      }
      states.push_back(state);
    }
    // bottleneck over start, every step, and the ending flow
    const Mode start_mode = states.front().first;
    double q = std::min(fa.at({origin, start_mode}),
                        fb.at({origin, cur_mode, dest}));
    for (const Step& st : steps)
      q = std::min(q, st.transfer
                          ? fx.at({origin, st.mode, st.to_mode, st.from})
                          : fl.at({origin, st.mode, st.from, st.to}));
    fa.at({origin, start_mode}) -= q;
    fb.at({origin, cur_mode, dest}) -= q;
    for (const Step& st : steps) {
      if (st.transfer)
        fx.at({origin, st.mode, st.to_mode, st.from}) -= q;
      else
        fl.at({origin, st.mode, st.from, st.to}) -= q;
    }
    OdPath path;
    path.origin = origin;
    path.dest = dest;
    path.flow = q;
    for (const Step& st : steps)
      if (!st.transfer) path.arcs.push_back({st.mode, st.from, st.to});
    out.by_dest[dest].push_back(std::move(path));
  }

  // the decomposition must reproduce the demand per destination
  for (const auto& [od, e] : demand.entries) {
    if (od.first != origin) continue;
    double got = 0.0;
    const auto it = out.by_dest.find(od.second);
    if (it != out.by_dest.end())
      for (const OdPath& p : it->second) got += p.flow;
    if (std::abs(got - e) > feas_tol * std::max(1.0, e))
      throw InfeasibleInput("flow decomposition residual " +
                            std::to_string(got - e) + " for pair (" +
                            zs(origin) + "," + zs(od.second) + ")");
  }
  return out;
}

ScenarioMetrics summarize(const ZonalSolution& sol, const DemandMatrix& demand,
                          const CostTables& costs,
                          const ParameterProfile& profile) {
  ScenarioMetrics ms;
  ms.total_trips = demand.total();
  const double T = std::max(ms.total_trips, 1e-12);
  const GlobalParams& g = profile.globals;

  double start_h = 0.0, inter_h = 0.0, end_h = 0.0, transfer_h = 0.0;
  double transfers = 0.0, op_cost = 0.0, em_cost = 0.0;

  for (const auto& [k, v] : sol.start_flows) {
    const auto& [o, m] = k;
    const ModeSpec& spec = profile.mode(m);
    const auto& zc = costs.at(m, o);
    start_h += v * zc.start;
    op_cost += v * zc.feeder_share / spec.feeder_design_occ *
               spec.feeder_op_cost * zc.feeder_time;
    em_cost += v * zc.feeder_share / spec.feeder_design_occ *
               spec.feeder_em_cost * zc.feeder_dist;
    ms.per_mode[m].trips += v;
  }
  for (const auto& [k, v] : sol.end_flows) {
    const auto& [o, m, d] = k;
    const ModeSpec& spec = profile.mode(m);
    const auto& zc = costs.at(m, d);
    end_h += v * zc.end;
    op_cost += v * zc.feeder_share / spec.feeder_design_occ *
               spec.feeder_op_cost * zc.feeder_time;
    em_cost += v * zc.feeder_share / spec.feeder_design_occ *
               spec.feeder_em_cost * zc.feeder_dist;
  }
  std::map<Mode, double> mode_time, mode_op;
  for (const auto& [k, v] : sol.link_flows) {
    const auto& [o, m, i, j] = k;
    const ModeSpec& spec = profile.mode(m);
    const auto& lc = costs.link_cost(m, i, j);
    inter_h += v * lc.time;
    const double op = v / spec.design_occ * spec.op_cost * lc.time;
    const double em = v / spec.design_occ * spec.em_cost * lc.dist;
    op_cost += op;
    em_cost += em;
    ms.per_mode[m].passenger_km += v * lc.dist;
    mode_time[m] += v * lc.time;
    mode_op[m] += op + em;
  }
  for (const auto& [k, v] : sol.transfer_flows) {
    const auto& [o, m1, m2, i] = k;
    transfer_h += v * costs.transfer_cost(m1, m2, i);
    transfers += v;
    ms.per_mode[m2].trips += v;
  }

  ms.avg_start_min = start_h / T * 60.0;
  ms.avg_interzonal_min = (inter_h + transfer_h) / T * 60.0;
  ms.avg_end_min = end_h / T * 60.0;
  ms.avg_journey_min = ms.avg_start_min + ms.avg_interzonal_min + ms.avg_end_min;
  ms.transfers_per_trip = transfers / T;
  ms.op_cost_per_trip = op_cost / T;
  ms.em_cost_per_trip = em_cost / T;
  ms.avg_generalized_cost =
      (g.vot * (start_h + inter_h + end_h + transfer_h) + op_cost + em_cost) /
      T;

  double trip_total = 0.0, km_total = 0.0;
  for (const auto& [m, pm] : ms.per_mode) {
    trip_total += pm.trips;
    km_total += pm.passenger_km;
  }
  for (auto& [m, pm] : ms.per_mode) {
    pm.split_by_trips = trip_total > 0 ? 100.0 * pm.trips / trip_total : 0.0;
    pm.split_by_distance =
        km_total > 0 ? 100.0 * pm.passenger_km / km_total : 0.0;
    pm.avg_trip_km = pm.trips > 0 ? pm.passenger_km / pm.trips : 0.0;
    const double th = mode_time.count(m) ? mode_time.at(m) : 0.0;
    pm.speed_kmh = th > 0 ? pm.passenger_km / th : 0.0;
    pm.op_cost_per_pax_km =
        pm.passenger_km > 0 ? mode_op[m] / pm.passenger_km : 0.0;
  }
  return ms;
}

ValidationReport validate_zonal(const ZonalSolution& sol,
                                const DemandMatrix& demand,
                                const ParameterProfile& profile,
                                const CostTables& costs,
                                const CandidateLinkSet& links,
                                const ZonalOptions& opts, double feas_tol) {
  ValidationReport report;
  const int n = demand.zones;
  const std::vector<Mode>& modes = opts.modes_enabled;
  auto add = [&](const std::string& what, const std::string& idx, double mag) {
    report.violations.push_back({what, idx, mag});
  };
  auto tol_for = [&](double scale) {
    return feas_tol * std::max(1.0, std::abs(scale));
  };

  for (const auto& [k, v] : sol.start_flows)
    if (v < -feas_tol)
      add("nonnegative start flow",
          zs(k.first) + "," + mode_name(k.second), -v);
  for (const auto& [k, v] : sol.link_flows) {
    const auto& [o, m, i, j] = k;
    if (v < -feas_tol)
      add("nonnegative link flow",
          zs(o) + "," + mode_name(m) + "," + zs(i) + "," + zs(j), -v);
    if (j == o && v > feas_tol)
      add("no flow back into the origin",
          zs(o) + "," + mode_name(m) + "," + zs(i) + "," + zs(j), v);
    if (!links.contains(m, i, j) && v > feas_tol)
      add("flow outside the candidate network",
          zs(o) + "," + mode_name(m) + "," + zs(i) + "," + zs(j), v);
  }

  std::vector<double> dem_o(static_cast<std::size_t>(n), 0.0);
  for (const auto& [od, e] : demand.entries)
    dem_o[static_cast<std::size_t>(od.first)] += e;

  for (int o = 0; o < n; ++o) {
    const double d_o = dem_o[static_cast<std::size_t>(o)];
    double started = 0.0;
    for (Mode m : modes) started += sol.start_flow(o, m);
    if (std::abs(started - d_o) > tol_for(d_o))
      add("start flows equal origin demand", zs(o), std::abs(started - d_o));
    for (int d = 0; d < n; ++d) {
      const double e = demand.at(o, d);
      double ended = 0.0;
      for (Mode m : modes) ended += sol.end_flow(o, m, d);
      if (std::abs(ended - e) > tol_for(e))
        add("end flows equal pair demand", zs(o) + "," + zs(d),
            std::abs(ended - e));
    }
    if (d_o <= 0.0) continue;
    for (Mode m : modes) {
      double out_origin = 0.0;
      const auto it = links.links.find(m);
      if (it != links.links.end())
        for (const auto& [ij, cnt] : it->second)
          if (ij.first == o) out_origin += sol.link_flow(o, m, o, ij.second);
      const double fa = sol.start_flow(o, m);
      if (std::abs(fa - out_origin) > tol_for(fa))
        add("origin outflow balance", zs(o) + "," + mode_name(m),
            std::abs(fa - out_origin));
      for (int i = 0; i < n; ++i) {
        if (i == o) continue;
        double in = 0.0, out = 0.0;
        if (it != links.links.end())
          for (const auto& [ij, cnt] : it->second) {
            if (ij.second == i) in += sol.link_flow(o, m, ij.first, i);
            if (ij.first == i) out += sol.link_flow(o, m, i, ij.second);
          }
        for (Mode m1 : modes) {
          if (m1 == m) continue;
          in += sol.transfer_flow(o, m1, m, i);
          out += sol.transfer_flow(o, m, m1, i);
        }
        out += sol.end_flow(o, m, i);
        if (std::abs(in - out) > tol_for(in))
          add("node flow balance",
              zs(o) + "," + mode_name(m) + "," + zs(i), std::abs(in - out));
      }
    }
  }

  // connection symmetry, build sufficiency, budget
  double spent = 0.0;
  for (const auto& [k, x] : sol.connections) {
    const auto& [m, i, j] = k;
    if (sol.connection(m, j, i) != x)
      add("bidirectional connection symmetry",
          mode_name(m) + "," + zs(i) + "," + zs(j),
          std::abs(sol.connection(m, j, i) - x));
    if (i < j && profile.mode(m).is_infrastructure) {
      const auto bw = sol.new_links.find({m, i, j});
      const int built = bw == sol.new_links.end() ? 0 : bw->second;
      const int exist = links.exist_count(m, i, j);
      if (built < x - exist)
        add("built links cover required links",
            mode_name(m) + "," + zs(i) + "," + zs(j),
            static_cast<double>(x - exist - built));
    }
  }
  for (const auto& [k, b] : sol.new_links) {
    const auto& [m, i, j] = k;
    if (i < j) spent += profile.mode(m).infra_cost * costs.link_cost(m, i, j).dist * b;
  }
  if (spent > opts.budget + tol_for(opts.budget))
    add("investment budget", "", spent - opts.budget);

  // capacity / minimum flow per mode-link
  for (Mode m : modes) {
    const ModeSpec& spec = profile.mode(m);
    const auto it = links.links.find(m);
    if (it == links.links.end()) continue;
    for (const auto& [ij, cnt] : it->second) {
      double flow = 0.0, rev = 0.0;
      for (int o = 0; o < n; ++o) {
        flow += sol.link_flow(o, m, ij.first, ij.second);
        rev += sol.link_flow(o, m, ij.second, ij.first);
      }
      if (spec.is_transit) {
        const int x = sol.connection(m, ij.first, ij.second);
        if (opts.include_capacity) {
          const double cap = spec.max_occ / spec.min_headway * x;
          if (flow > cap + tol_for(cap))
            add("link capacity",
                mode_name(m) + "," + zs(ij.first) + "," + zs(ij.second),
                flow - cap);
        } else if (flow > feas_tol && x == 0) {
          add("flow on an unconnected link",
              mode_name(m) + "," + zs(ij.first) + "," + zs(ij.second), flow);
        }
        if (opts.include_min_flow && ij.first < ij.second) {
          const double lb = spec.min_occ / spec.max_headway * x;
          if ((flow + rev) / 2.0 < lb - tol_for(lb))
            add("minimum link flow",
                mode_name(m) + "," + zs(ij.first) + "," + zs(ij.second),
                lb - (flow + rev) / 2.0);
        }
      }
      if (m == Mode::SAV) {
        if (flow / spec.design_occ >
            profile.globals.sav_link_cap + tol_for(profile.globals.sav_link_cap))
          add("on-demand link vehicle cap",
              zs(ij.first) + "," + zs(ij.second),
              flow / spec.design_occ - profile.globals.sav_link_cap);
      }
    }
  }
  if (std::find(modes.begin(), modes.end(), Mode::SAV) != modes.end()) {
    const ModeSpec& sav = profile.mode(Mode::SAV);
    const GlobalParams& g = profile.globals;
    for (int o = 0; o < n; ++o)
      if (sol.start_flow(o, Mode::SAV) > g.sav_start_cap + tol_for(g.sav_start_cap))
        add("on-demand start cap", zs(o),
            sol.start_flow(o, Mode::SAV) - g.sav_start_cap);
    for (int d = 0; d < n; ++d) {
      double ended = 0.0;
      for (int o = 0; o < n; ++o) ended += sol.end_flow(o, Mode::SAV, d);
      if (ended > g.sav_end_cap + tol_for(g.sav_end_cap))
        add("on-demand end cap", zs(d), ended - g.sav_end_cap);
    }
    double fleet = 0.0;
    for (const auto& [k, v] : sol.link_flows) {
      const auto& [o, m, i, j] = k;
      if (m == Mode::SAV)
        fleet += v * costs.link_cost(Mode::SAV, i, j).time /
                 (sav.design_occ * g.sav_util);
    }
    if (fleet > g.sav_fleet + tol_for(g.sav_fleet))
      add("on-demand fleet size", "", fleet - g.sav_fleet);
  }

  if (opts.include_no_backflow) {
    for (const auto& [k, v] : sol.link_flows) {
      const auto& [o, m, i, j] = k;
      if (v <= feas_tol) continue;
      for (Mode m2 : modes) {
        const double rev = sol.link_flow(o, m2, j, i);
        if (rev > feas_tol && (i < j || m != m2))
          add("one-way flow per origin",
              zs(o) + "," + zs(i) + "," + zs(j), std::min(v, rev));
      }
    }
  }

  // informational: destination-side mode switches that pay off via a
  // cheaper ending leg
  for (const auto& [k, v] : sol.transfer_flows) {
    const auto& [o, m1, m2, i] = k;
    if (v <= feas_tol || demand.at(o, i) <= 0.0) continue;
    const double switched = costs.at(m2, i).end + costs.transfer_cost(m1, m2, i);
    if (switched < costs.at(m1, i).end - feas_tol) {
      std::ostringstream os;
      os << "destination-side switch " << mode_name(m1) << "->" << mode_name(m2)
         << " at zone " << i << " for origin " << o << " reduces ending cost by "
         << (costs.at(m1, i).end - switched) << " h";
      report.notes.push_back(os.str());
    }
  }
  return report;
}

}  // namespace mtnd
