#include "mtnd/params.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace mtnd {

std::string mode_name(Mode m) {
  switch (m) {
    case Mode::RAIL: return "RAIL";
    case Mode::METRO: return "METRO";
    case Mode::BRT: return "BRT";
    case Mode::XBUS: return "XBUS";
    case Mode::LBUS: return "LBUS";
    case Mode::SAV: return "SAV";
    case Mode::WALK: return "WALK";
  }
  return "?";
}

std::optional<Mode> mode_from_name(const std::string& name) {
  for (Mode m : all_modes())
    if (mode_name(m) == name) return m;
  return std::nullopt;
}

std::vector<Mode> all_modes() {
  return {Mode::RAIL, Mode::METRO, Mode::BRT, Mode::XBUS,
          Mode::LBUS, Mode::SAV,  Mode::WALK};
}

double GlobalParams::transfer_time(Mode from, Mode to) const {
  auto it = transfer_times.find({from, to});
  if (it != transfer_times.end()) return it->second;
  it = transfer_times.find({to, from});
  if (it != transfer_times.end()) return it->second;
  return 5.0 / 60.0;
}

const ModeSpec& ParameterProfile::mode(Mode m) const {
  auto it = modes.find(m);
  if (it == modes.end())
    throw ConfigError("no parameters for mode " + mode_name(m));
  return it->second;
}

void ParameterProfile::validate() const {
  for (const auto& [m, spec] : modes) {
    const std::string tag = mode_name(m) + ".";
    auto require = [&](bool ok, const std::string& field) {
      if (!ok) throw ConfigError("invalid parameter " + tag + field);
    };
    require(spec.detour >= 1.0, "detour");
    require(spec.feeder_detour >= 1.0, "feeder_detour");
    require(spec.design_occ > 0.0, "design_occ");
    require(spec.feeder_design_occ > 0.0, "feeder_design_occ");
    require(spec.speed_city > 0.0 && spec.speed_suburb > 0.0, "speed");
    require(spec.feeder_speed_city > 0.0 && spec.feeder_speed_suburb > 0.0,
            "feeder_speed");
    if (spec.is_transit) {
      require(spec.station_spacing > 0.0, "station_spacing");
      require(spec.design_headway > 0.0, "design_headway");
      require(spec.min_headway > 0.0 && spec.min_headway <= spec.design_headway,
              "min_headway");
      require(spec.max_headway >= spec.design_headway, "max_headway");
    }
    if (spec.is_infrastructure) require(spec.infra_cost > 0.0, "infra_cost");
  }
  if (globals.walk_coeff < 1.0) throw ConfigError("globals.walk_coeff < 1");
  if (globals.wait_coeff < 1.0) throw ConfigError("globals.wait_coeff < 1");
  if (globals.budget < 0.0) throw ConfigError("globals.budget < 0");
}

namespace {

ModeSpec make_mode(Mode m, double d_sp, double infra_mkm, double op, double em,
                   double h_design_min, double phi, double r_design,
                   double r_mf, double t_walk_min, double t_stn_min,
                   double t_mf_stn_min, double v_city, double v_suburb) {
  ModeSpec s;
  s.mode = m;
  s.is_transit = (m != Mode::SAV && m != Mode::WALK);
  s.is_infrastructure = (m == Mode::RAIL || m == Mode::METRO || m == Mode::BRT);
  s.station_spacing = d_sp;
  s.infra_cost = infra_mkm > 0 ? infra_mkm * 1e6 : -1.0;
  s.op_cost = op;
  s.em_cost = em;
  s.feeder_op_cost = (m == Mode::WALK) ? 0.0 : 26.4;
  s.feeder_em_cost = (m == Mode::WALK) ? 0.0 : 0.074;
  s.detour = phi;
  s.feeder_detour = (m == Mode::WALK) ? 1.0 : 1.5;
  s.design_occ = r_design;
  s.feeder_design_occ = r_mf;
  s.walk_access_time = t_walk_min / 60.0;
  s.dwell = t_stn_min / 60.0;
  s.feeder_dwell = t_mf_stn_min / 60.0;
  s.speed_city = v_city;
  s.speed_suburb = v_suburb;
  s.feeder_speed_city = (m == Mode::WALK) ? 4.0 : 20.0;
  s.feeder_speed_suburb = (m == Mode::WALK) ? 4.0 : 40.0;
  if (s.is_transit) {
    s.design_headway = h_design_min / 60.0;
    s.min_headway = s.design_headway / 2.0;
    s.max_headway = 3.0 * s.design_headway;
    s.wait = s.design_headway / 2.0;
    s.feeder_wait = 5.0 / 60.0;
    s.min_occ = r_design / 5.0;
    s.max_occ = 1.5 * r_design;
  } else if (m == Mode::SAV) {
    s.wait = 5.0 / 60.0;
    s.feeder_wait = 0.0;  // one seamless SAV trip, no feeder hand-off
    s.min_occ = 1.0;
    s.max_occ = r_design;
  }
  return s;
}

}  // namespace

ParameterProfile default_profile() {
  ParameterProfile p;
  p.modes[Mode::RAIL] = make_mode(Mode::RAIL, 2.0, 575.37, 4764.87, 3.33,
                                  15.0, 1.0, 600.0, 5.0, 7.5, 1.0, 0.5,
                                  50.0, 80.0);
  p.modes[Mode::METRO] = make_mode(Mode::METRO, 1.4, 575.37, 2032.82, 3.33,
                                   5.0, 1.1, 300.0, 5.0, 7.5, 1.0, 0.5,
                                   50.0, 70.0);
  p.modes[Mode::BRT] = make_mode(Mode::BRT, 1.0, 13.34, 477.39, 1.184, 5.0,
                                 1.2, 60.0, 2.0, 5.0, 0.75, 2.0, 40.0, 60.0);
  p.modes[Mode::XBUS] = make_mode(Mode::XBUS, 1.0, -1.0, 338.51, 0.592, 10.0,
                                  1.2, 40.0, 2.0, 5.0, 0.75, 2.0, 20.0, 50.0);
  p.modes[Mode::LBUS] = make_mode(Mode::LBUS, 2.0, -1.0, 42.9, 0.592, 5.0,
                                  1.3, 30.0, 2.0, 5.0, 0.5, 2.0, 20.0, 40.0);
  p.modes[Mode::SAV] = make_mode(Mode::SAV, -1.0, -1.0, 26.4, 0.074, -1.0,
                                 1.3, 2.0, 2.0, -0.0, 2.0, 2.0, 25.0, 60.0);
  p.modes[Mode::WALK] = make_mode(Mode::WALK, -1.0, -1.0, 0.0, 0.0, -1.0, 1.0,
                                  1.0, 1.0, 0.0, 0.0, 0.0, 4.0, 4.0);
  for (Mode a : all_modes())
    for (Mode b : all_modes())
      if (a != b) p.globals.transfer_times[{a, b}] = 5.0 / 60.0;
  // Interlining: XBUS runs on BRT guideway, no transfer walk.
  p.globals.transfer_times[{Mode::BRT, Mode::XBUS}] = 0.0;
  p.globals.transfer_times[{Mode::XBUS, Mode::BRT}] = 0.0;
  return p;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// "7.5 min" -> hours; "4 km/h" -> km/h; "575.37 M$/km" -> $/km; bare -> as-is
double parse_value(const std::string& raw, const std::string& key) {
  std::istringstream is(trim(raw));
  double v = 0.0;
  if (!(is >> v)) throw ConfigError("bad numeric value for " + key);
  std::string unit;
  is >> unit;
  if (unit.empty()) return v;
  if (unit == "min") return v / 60.0;
  if (unit == "s" || unit == "sec") return v / 3600.0;
  if (unit == "h" || unit == "hr") return v;
  if (unit == "m") return v / 1000.0;
  if (unit == "km") return v;
  if (unit == "km/h" || unit == "kph") return v;
  if (unit == "M$" || unit == "M$/km") return v * 1e6;
  if (unit == "B$") return v * 1e9;
  if (unit[0] == '$' || unit == "pax/veh" || unit == "veh/h" ||
      unit == "veh" || unit == "trips/h")
    return v;
  throw ConfigError("unknown unit '" + unit + "' for " + key);
}

void apply_mode_key(ModeSpec& s, const std::string& key, double v,
                    const std::string& where) {
  if (key == "station_spacing") s.station_spacing = v;
  else if (key == "infra_cost") s.infra_cost = v;
  else if (key == "op_cost") s.op_cost = v;
  else if (key == "em_cost") s.em_cost = v;
  else if (key == "feeder_op_cost") s.feeder_op_cost = v;
  else if (key == "feeder_em_cost") s.feeder_em_cost = v;
  else if (key == "design_headway") { s.design_headway = v; s.wait = v / 2.0; }
  else if (key == "min_headway") s.min_headway = v;
  else if (key == "max_headway") s.max_headway = v;
  else if (key == "detour") s.detour = v;
  else if (key == "feeder_detour") s.feeder_detour = v;
  else if (key == "design_occ") s.design_occ = v;
  else if (key == "feeder_design_occ") s.feeder_design_occ = v;
  else if (key == "min_occ") s.min_occ = v;
  else if (key == "max_occ") s.max_occ = v;
  else if (key == "walk_access_time") s.walk_access_time = v;
  else if (key == "dwell") s.dwell = v;
  else if (key == "feeder_dwell") s.feeder_dwell = v;
  else if (key == "speed_city") s.speed_city = v;
  else if (key == "speed_suburb") s.speed_suburb = v;
  else if (key == "feeder_speed_city") s.feeder_speed_city = v;
  else if (key == "feeder_speed_suburb") s.feeder_speed_suburb = v;
  else if (key == "wait") s.wait = v;
  else if (key == "feeder_wait") s.feeder_wait = v;
  else if (key == "is_infrastructure") s.is_infrastructure = v != 0.0;
  else if (key == "is_transit") s.is_transit = v != 0.0;
  else throw ConfigError("unknown key " + where + "." + key);
}

void apply_global_key(GlobalParams& g, const std::string& key, double v) {
  if (key == "walk_coeff") g.walk_coeff = v;
  else if (key == "wait_coeff") g.wait_coeff = v;
  else if (key == "vot") g.vot = v;
  else if (key == "budget") g.budget = v;
  else if (key == "big_m") g.big_m = v;
  else if (key == "sav_start_cap") g.sav_start_cap = v;
  else if (key == "sav_end_cap") g.sav_end_cap = v;
  else if (key == "sav_link_cap") g.sav_link_cap = v;
  else if (key == "sav_fleet") g.sav_fleet = v;
  else if (key == "sav_util") g.sav_util = v;
  else if (key == "walk_speed") g.walk_speed = v;
  else throw ConfigError("unknown key globals." + key);
}

}  // namespace

ParameterProfile parse_profile(const std::string& text) {
  ParameterProfile p = default_profile();
  std::istringstream is(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (section == "globals") {
      if (key.rfind("transfer.", 0) == 0) {
        const auto dot = key.find('.', 9);
        if (dot == std::string::npos)
          throw ConfigError("bad transfer key " + key);
        const auto m1 = mode_from_name(key.substr(9, dot - 9));
        const auto m2 = mode_from_name(key.substr(dot + 1));
        if (!m1 || !m2) throw ConfigError("bad transfer key " + key);
        const double v = parse_value(val, key);
        p.globals.transfer_times[{*m1, *m2}] = v;
        p.globals.transfer_times[{*m2, *m1}] = v;
      } else {
        apply_global_key(p.globals, key, parse_value(val, key));
      }
    } else if (section.rfind("mode.", 0) == 0) {
      const auto m = mode_from_name(section.substr(5));
      if (!m) throw ConfigError("unknown mode section [" + section + "]");
      apply_mode_key(p.modes[*m], key, parse_value(val, key), section);
    } else {
      throw ConfigError("line " + std::to_string(lineno) +
                        ": key outside a [globals] or [mode.*] section");
    }
  }
  p.validate();
  return p;
}

ParameterProfile load_profile(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open profile " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_profile(ss.str());
}

std::string serialize_profile(const ParameterProfile& p) {
  std::ostringstream os;
  os.precision(12);
  os << "# Parameter profile. Internal units: hours, km, $.\n[globals]\n";
  const GlobalParams& g = p.globals;
  os << "walk_coeff = " << g.walk_coeff << "\nwait_coeff = " << g.wait_coeff
     << "\nvot = " << g.vot << "\nbudget = " << g.budget
     << "\nbig_m = " << g.big_m << "\nsav_start_cap = " << g.sav_start_cap
     << "\nsav_end_cap = " << g.sav_end_cap
     << "\nsav_link_cap = " << g.sav_link_cap
     << "\nsav_fleet = " << g.sav_fleet << "\nsav_util = " << g.sav_util
     << "\nwalk_speed = " << g.walk_speed << "\n";
  for (const auto& [pair, v] : g.transfer_times)
    if (pair.first < pair.second)
      os << "transfer." << mode_name(pair.first) << '.'
         << mode_name(pair.second) << " = " << v << "\n";
  for (const auto& [m, s] : p.modes) {
    os << "\n[mode." << mode_name(m) << "]\n";
    os << "is_transit = " << (s.is_transit ? 1 : 0) << "\n";
    os << "is_infrastructure = " << (s.is_infrastructure ? 1 : 0) << "\n";
    auto put = [&](const char* k, double v) { os << k << " = " << v << "\n"; };
    put("station_spacing", s.station_spacing);
    put("infra_cost", s.infra_cost);
    put("op_cost", s.op_cost);
    put("em_cost", s.em_cost);
    put("feeder_op_cost", s.feeder_op_cost);
    put("feeder_em_cost", s.feeder_em_cost);
    put("design_headway", s.design_headway);
    put("min_headway", s.min_headway);
    put("max_headway", s.max_headway);
    put("detour", s.detour);
    put("feeder_detour", s.feeder_detour);
    put("design_occ", s.design_occ);
    put("feeder_design_occ", s.feeder_design_occ);
    put("min_occ", s.min_occ);
    put("max_occ", s.max_occ);
    put("walk_access_time", s.walk_access_time);
    put("dwell", s.dwell);
    put("feeder_dwell", s.feeder_dwell);
    put("speed_city", s.speed_city);
    put("speed_suburb", s.speed_suburb);
    put("feeder_speed_city", s.feeder_speed_city);
    put("feeder_speed_suburb", s.feeder_speed_suburb);
    put("wait", s.wait);
    put("feeder_wait", s.feeder_wait);
  }
  return os.str();
}

}  // namespace mtnd
