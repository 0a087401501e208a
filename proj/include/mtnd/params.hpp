#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mtnd {

enum class Mode { RAIL, METRO, BRT, XBUS, LBUS, SAV, WALK };

std::string mode_name(Mode m);
std::optional<Mode> mode_from_name(const std::string& name);
std::vector<Mode> all_modes();

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Per-mode parameters.  Times in hours, distances in km, costs in $.
// A negative value means "not applicable" for this mode.
struct ModeSpec {
  Mode mode = Mode::WALK;
  double station_spacing = -1.0;  // d^{sp,stn}, km
  double infra_cost = -1.0;       // $/km, infrastructure modes only
  double op_cost = 0.0;           // $/veh-h
  double em_cost = 0.0;           // $/veh-km
  double feeder_op_cost = 0.0;    // $/veh-h
  double feeder_em_cost = 0.0;    // $/veh-km
  double design_headway = -1.0;   // h
  double min_headway = -1.0;      // h
  double max_headway = -1.0;      // h
  double detour = 1.0;            // phi >= 1
  double feeder_detour = 1.0;
  double design_occ = 1.0;        // pax/veh
  double feeder_design_occ = 1.0;
  double min_occ = 1.0;
  double max_occ = 1.0;
  double walk_access_time = 0.0;  // h
  double dwell = 0.0;             // h per stop
  double feeder_dwell = 0.0;      // h per stop
  double speed_city = 1.0;        // km/h
  double speed_suburb = 1.0;
  double feeder_speed_city = 1.0;
  double feeder_speed_suburb = 1.0;
  double wait = 0.0;              // h; h_design/2 for transit
  double feeder_wait = 0.0;       // h; 0 for SAV feeders

  bool is_infrastructure = false;
  bool is_transit = false;

  double speed(bool city) const { return city ? speed_city : speed_suburb; }
  double feeder_speed(bool city) const {
    return city ? feeder_speed_city : feeder_speed_suburb;
  }
};

struct GlobalParams {
  double walk_coeff = 2.0;       // gamma^walk
  double wait_coeff = 1.5;       // gamma^wait
  double vot = 16.5;             // gamma^travel, $/h
  double budget = 0.0;           // Gamma^invest, $
  double big_m = 1e7;
  double sav_start_cap = 5000.0; // trips/h per zone
  double sav_end_cap = 5000.0;
  double sav_link_cap = 2000.0;  // veh/h
  double sav_fleet = 20000.0;    // veh
  double sav_util = 0.7;         // rho^design
  double walk_speed = 4.0;       // km/h
  // Transfer walking times t_{m1m2}^transfer, hours.
  std::map<std::pair<Mode, Mode>, double> transfer_times;

  double transfer_time(Mode from, Mode to) const;
};

struct ParameterProfile {
  GlobalParams globals;
  std::map<Mode, ModeSpec> modes;

  const ModeSpec& mode(Mode m) const;
  void validate() const;  // throws ConfigError naming the offending field
};

// Table-style default profile (weekday peak service).
ParameterProfile default_profile();

// Parse the [globals] / [mode.NAME] key-value document.  Values accept unit
// suffixes (min, h, km, km/h, $...), converted to hours/km at parse time.
// Missing keys keep the default-profile values.
ParameterProfile parse_profile(const std::string& text);
ParameterProfile load_profile(const std::string& path);
std::string serialize_profile(const ParameterProfile& profile);

}  // namespace mtnd
