#include <doctest.h>

#include "mtnd/params.hpp"

using namespace mtnd;

TEST_CASE("default profile carries the published service parameters") {
  ParameterProfile p = default_profile();
  p.validate();
  const ModeSpec& rail = p.mode(Mode::RAIL);
  CHECK(rail.speed_city == doctest::Approx(50.0));
  CHECK(rail.speed_suburb == doctest::Approx(80.0));
  CHECK(rail.station_spacing == doctest::Approx(2.0));
  CHECK(rail.design_headway == doctest::Approx(15.0 / 60.0));
  CHECK(rail.wait == doctest::Approx(7.5 / 60.0));
  CHECK(rail.walk_access_time == doctest::Approx(7.5 / 60.0));
  CHECK(rail.infra_cost == doctest::Approx(575.37e6));
  CHECK(rail.design_occ == doctest::Approx(600.0));
  CHECK(rail.is_infrastructure);
  CHECK(rail.is_transit);

  const ModeSpec& metro = p.mode(Mode::METRO);
  CHECK(metro.design_headway == doctest::Approx(5.0 / 60.0));
  CHECK(metro.detour == doctest::Approx(1.1));
  CHECK(metro.station_spacing == doctest::Approx(1.4));
  CHECK(metro.dwell == doctest::Approx(1.0 / 60.0));

  const ModeSpec& brt = p.mode(Mode::BRT);
  CHECK(brt.infra_cost == doctest::Approx(13.34e6));
  CHECK(brt.design_occ == doctest::Approx(60.0));

  const ModeSpec& xbus = p.mode(Mode::XBUS);
  CHECK_FALSE(xbus.is_infrastructure);
  CHECK(xbus.is_transit);
  CHECK(xbus.design_headway == doctest::Approx(10.0 / 60.0));

  const ModeSpec& sav = p.mode(Mode::SAV);
  CHECK_FALSE(sav.is_transit);
  CHECK(sav.wait == doctest::Approx(5.0 / 60.0));
  CHECK(sav.feeder_wait == doctest::Approx(0.0));
  CHECK(sav.design_occ == doctest::Approx(2.0));
  CHECK(sav.op_cost == doctest::Approx(26.4));
  CHECK(sav.em_cost == doctest::Approx(0.074));

  const ModeSpec& walk = p.mode(Mode::WALK);
  CHECK(walk.op_cost == doctest::Approx(0.0));
  CHECK(walk.em_cost == doctest::Approx(0.0));

  CHECK(p.globals.walk_coeff == doctest::Approx(2.0));
  CHECK(p.globals.wait_coeff == doctest::Approx(1.5));
  CHECK(p.globals.vot == doctest::Approx(16.5));
  CHECK(p.globals.walk_speed == doctest::Approx(4.0));
  CHECK(p.globals.sav_util == doctest::Approx(0.7));
}

TEST_CASE("transit feeder waits default to five minutes, SAV to zero") {
  ParameterProfile p = default_profile();
  for (Mode m : {Mode::RAIL, Mode::METRO, Mode::BRT, Mode::XBUS, Mode::LBUS})
    CHECK(p.mode(m).feeder_wait == doctest::Approx(5.0 / 60.0));
  CHECK(p.mode(Mode::SAV).feeder_wait == doctest::Approx(0.0));
}

TEST_CASE("transfer walking time lookup is symmetric with interlining zero") {
  GlobalParams g = default_profile().globals;
  CHECK(g.transfer_time(Mode::RAIL, Mode::METRO) == doctest::Approx(5.0 / 60.0));
  CHECK(g.transfer_time(Mode::BRT, Mode::XBUS) == doctest::Approx(0.0));
  CHECK(g.transfer_time(Mode::XBUS, Mode::BRT) == doctest::Approx(0.0));
}

TEST_CASE("mode names round-trip") {
  for (Mode m : all_modes()) {
    auto back = mode_from_name(mode_name(m));
    REQUIRE(back.has_value());
    CHECK(*back == m);
  }
  CHECK_FALSE(mode_from_name("TRAM").has_value());
}

TEST_CASE("profile text parsing with unit suffixes") {
  const std::string text = R"(
# comment
[globals]
vot = 20.0
walk_speed = 5 km/h

[mode.RAIL]
design_headway = 12 min
walk_access_time = 6 min
infra_cost = 600 M$/km
)";
  ParameterProfile p = parse_profile(text);
  CHECK(p.globals.vot == doctest::Approx(20.0));
  CHECK(p.globals.walk_speed == doctest::Approx(5.0));
  CHECK(p.mode(Mode::RAIL).design_headway == doctest::Approx(0.2));
  // headway updates pull the expected wait along
  CHECK(p.mode(Mode::RAIL).wait == doctest::Approx(0.1));
  CHECK(p.mode(Mode::RAIL).walk_access_time == doctest::Approx(0.1));
  CHECK(p.mode(Mode::RAIL).infra_cost == doctest::Approx(600e6));
  // untouched modes keep defaults
  CHECK(p.mode(Mode::METRO).design_headway == doctest::Approx(5.0 / 60.0));
}

TEST_CASE("profile parser rejects malformed input") {
  CHECK_THROWS_AS(parse_profile("[globals]\nnada = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_profile("[mode.TRAM]\nop_cost = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_profile("[globals]\nvot = 1 lightyears\n"), ConfigError);
  CHECK_THROWS_AS(parse_profile("vot = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_profile("[mode.RAIL]\ndetour = 0.5\n"), ConfigError);
}

TEST_CASE("serialize and reparse preserves every parameter") {
  ParameterProfile p = default_profile();
  p.globals.budget = 2.5e9;
  p.modes[Mode::LBUS].design_headway = 4.0 / 60.0;
  ParameterProfile q = parse_profile(serialize_profile(p));
  CHECK(q.globals.budget == doctest::Approx(2.5e9));
  for (Mode m : all_modes()) {
    const ModeSpec& a = p.mode(m);
    const ModeSpec& b = q.mode(m);
    CHECK(a.station_spacing == doctest::Approx(b.station_spacing));
    CHECK(a.op_cost == doctest::Approx(b.op_cost));
    CHECK(a.design_headway == doctest::Approx(b.design_headway));
    CHECK(a.detour == doctest::Approx(b.detour));
    CHECK(a.speed_city == doctest::Approx(b.speed_city));
    CHECK(a.feeder_speed_suburb == doctest::Approx(b.feeder_speed_suburb));
    CHECK(a.wait == doctest::Approx(b.wait));
    CHECK(a.is_transit == b.is_transit);
    CHECK(a.is_infrastructure == b.is_infrastructure);
  }
  CHECK(q.globals.transfer_time(Mode::BRT, Mode::XBUS) == doctest::Approx(0.0));
}
