#include <doctest.h>

#include <cmath>

#include "mtnd/cost_model.hpp"

using namespace mtnd;

namespace {

Zone make_zone(int id, double length, bool city) {
  Zone z;
  z.id = id;
  z.length = length;
  z.is_city = city;
  z.members = {1};
  z.cell = {{0, 0}, {length, 0}, {length, length}, {0, length}};
  z.centroid = {length / 2, length / 2};
  return z;
}

}  // namespace

TEST_CASE("clear time blends the two zones' speeds") {
  ParameterProfile p = default_profile();
  const ModeSpec& rail = p.mode(Mode::RAIL);
  CHECK(clear_time(rail, 0.0, true, false) == doctest::Approx(0.0));
  CHECK(clear_time(rail, 10.0, false, false) == doctest::Approx(0.125));
  CHECK(clear_time(rail, 10.0, true, false) == doctest::Approx(10.0 / 65.0));
  CHECK(clear_time(rail, 10.0, false, true) == doctest::Approx(10.0 / 65.0));
}

TEST_CASE("through time combines line haul and station dwell") {
  ParameterProfile p = default_profile();
  const ModeSpec& metro = p.mode(Mode::METRO);
  Zone z = make_zone(0, 10.0, true);
  const double expected = 1.1 * 10.0 / 50.0 + (10.0 / 1.4) * (1.0 / 60.0);
  CHECK(through_time(metro, z) == doctest::Approx(expected));
  CHECK(expected == doctest::Approx(0.3390).epsilon(1e-3));

  Zone tiny = make_zone(0, 1e-12, true);
  CHECK(through_time(metro, tiny) == doctest::Approx(0.0).epsilon(1e-9));

  ModeSpec double_dwell = metro;
  double_dwell.dwell *= 2.0;
  const double base_line = 1.1 * 10.0 / 50.0;
  CHECK(through_time(double_dwell, z) - base_line ==
        doctest::Approx(2.0 * (through_time(metro, z) - base_line)));
}

TEST_CASE("on-demand zone service needs one dwell per traversal") {
  ParameterProfile p = default_profile();
  const ModeSpec& sav = p.mode(Mode::SAV);
  Zone z = make_zone(0, 10.0, true);
  CHECK(through_time(sav, z) ==
        doctest::Approx(1.3 * 10.0 / 25.0 + 2.0 / 60.0));
}

TEST_CASE("feeder share follows walk coverage and clamps") {
  ParameterProfile p = default_profile();
  Zone z = make_zone(0, 10.0, false);
  CHECK(feeder_share(p.mode(Mode::SAV), z, 4.0) == doctest::Approx(1.0));
  // 1 - 8*(4 * 0.125)^2 / (10 * 2) = 0.9
  CHECK(feeder_share(p.mode(Mode::RAIL), z, 4.0) == doctest::Approx(0.9));
  Zone tiny = make_zone(0, 0.2, false);
  CHECK(feeder_share(p.mode(Mode::RAIL), tiny, 4.0) == doctest::Approx(0.0));
}

TEST_CASE("feeder distance and time") {
  ParameterProfile p = default_profile();
  Zone z = make_zone(0, 10.0, true);
  auto [df, tf] = feeder_dist_time(p.mode(Mode::RAIL), z);
  CHECK(df == doctest::Approx(1.5 * 10.0 / 4.0));
  CHECK(tf == doctest::Approx(3.75 / 20.0 + 2.0 * (0.5 / 60.0)));

  ModeSpec solo = p.mode(Mode::RAIL);
  solo.feeder_design_occ = 1.0;
  auto [df2, tf2] = feeder_dist_time(solo, z);
  CHECK(df2 == doctest::Approx(df));
  CHECK(tf2 == doctest::Approx(3.75 / 20.0));
}

TEST_CASE("start and end costs differ by the boarding wait penalty") {
  ParameterProfile p = default_profile();
  const GlobalParams& g = p.globals;
  Zone z = make_zone(0, 10.0, true);
  auto [ta, tb] = start_end_costs(p.mode(Mode::RAIL), z, g);
  // eta 0.9, walk access 7.5 min, feeder 5 min wait + 0.2042 h ride,
  // line wait 7.5 min
  const double expected_ta =
      0.1 * 2.0 * 0.125 + 0.9 * (1.5 * 5.0 / 60.0 + 0.2042) + 1.5 * 0.125;
  CHECK(ta == doctest::Approx(expected_ta).epsilon(1e-3));
  CHECK(ta == doctest::Approx(0.5088).epsilon(1e-3));
  CHECK(tb == doctest::Approx(ta - 1.5 * 0.125));

  SUBCASE("full walk coverage removes the feeder terms") {
    ModeSpec m = p.mode(Mode::RAIL);
    m.walk_access_time = 10.0;  // eta -> 0
    auto [a, b] = start_end_costs(m, z, g);
    CHECK(a == doctest::Approx(2.0 * 10.0 + 1.5 * 0.125));
    CHECK(b == doctest::Approx(2.0 * 10.0));
  }
  SUBCASE("the identity holds for every transit mode") {
    for (Mode mm : {Mode::RAIL, Mode::METRO, Mode::BRT, Mode::XBUS, Mode::LBUS,
                    Mode::SAV}) {
      auto [a, b] = start_end_costs(p.mode(mm), z, g);
      CHECK(a - b == doctest::Approx(g.wait_coeff * p.mode(mm).wait));
    }
  }
}

TEST_CASE("intermodal transfer cost") {
  ParameterProfile p = default_profile();
  const GlobalParams& g = p.globals;
  // 5-minute walk to METRO whose wait is 2.5 min
  CHECK(transfer_cost(p.mode(Mode::RAIL), p.mode(Mode::METRO), g) ==
        doctest::Approx(2.0 * 5.0 / 60.0 + 1.5 * 2.5 / 60.0));
  // interlining: only the receiving wait remains
  CHECK(transfer_cost(p.mode(Mode::BRT), p.mode(Mode::XBUS), g) ==
        doctest::Approx(1.5 * 5.0 / 60.0));
  // transfer onto the on-demand service costs its 5-minute pickup wait
  CHECK(transfer_cost(p.mode(Mode::RAIL), p.mode(Mode::SAV), g) ==
        doctest::Approx(2.0 * 5.0 / 60.0 + 1.5 * 5.0 / 60.0));
  CHECK_THROWS_AS(
      static_cast<void>(transfer_cost(p.mode(Mode::RAIL), p.mode(Mode::RAIL), g)),
      CostModelError);
}

TEST_CASE("interzonal distance and time") {
  ParameterProfile p = default_profile();
  ModeSpec m = p.mode(Mode::METRO);
  Zone zi = make_zone(0, 10.0, true);
  Zone zj = make_zone(1, 10.0, true);
  auto [d, t] = interzonal(m, zi, zj, 0.0);
  CHECK(d == doctest::Approx(11.0));
  CHECK(t == doctest::Approx(through_time(m, zi)));

  Zone z0 = make_zone(0, 1e-12, true);
  Zone z1 = make_zone(1, 1e-12, true);
  auto [d0, t0] = interzonal(m, z0, z1, 0.0);
  CHECK(d0 == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(t0 == doctest::Approx(0.0).epsilon(1e-9));

  SUBCASE("symmetric in the two endpoints") {
    Zone za = make_zone(0, 4.0, true);
    Zone zb = make_zone(1, 9.0, false);
    auto [dab, tab] = interzonal(m, za, zb, 2.0);
    auto [dba, tba] = interzonal(m, zb, za, 2.0);
    CHECK(dab == doctest::Approx(dba));
    CHECK(tab == doctest::Approx(tba));
  }
}

TEST_CASE("length growth raises every length-driven cost") {
  ParameterProfile p = default_profile();
  const ModeSpec& m = p.mode(Mode::LBUS);
  Zone small = make_zone(0, 2.0, false);
  Zone large = make_zone(0, 8.0, false);
  CHECK(through_time(m, small) < through_time(m, large));
  CHECK(feeder_dist_time(m, small).first < feeder_dist_time(m, large).first);
  CHECK(feeder_dist_time(m, small).second < feeder_dist_time(m, large).second);
  CHECK(feeder_share(m, small, 4.0) <= feeder_share(m, large, 4.0));
}

TEST_CASE("assembled tables match the single-arc formulas") {
  ParameterProfile p = default_profile();
  std::vector<Zone> zones = {make_zone(0, 6.0, true), make_zone(1, 4.0, false)};
  zones[1].cell = {{10, 0}, {14, 0}, {14, 4}, {10, 4}};
  zones[1].centroid = {12, 2};
  std::vector<Mode> modes = {Mode::RAIL, Mode::LBUS, Mode::SAV, Mode::WALK};
  CandidateLinkSet links;
  for (Mode m : modes) {
    links.insert(m, 0, 1);
    links.insert(m, 1, 0);
  }
  CostTables ct = build_cost_tables(zones, p, modes, links);

  for (Mode m : modes) {
    for (const Zone& z : zones) {
      const auto& zc = ct.at(m, z.id);
      auto [ta, tb] = start_end_costs(p.mode(m), z, p.globals);
      CHECK(zc.start == doctest::Approx(ta));
      CHECK(zc.end == doctest::Approx(tb));
      CHECK(zc.through_time == doctest::Approx(through_time(p.mode(m), z)));
      CHECK(zc.feeder_share ==
            doctest::Approx(feeder_share(p.mode(m), z, p.globals.walk_speed)));
      CHECK(zc.feeder_share >= 0.0);
      CHECK(zc.feeder_share <= 1.0);
    }
    const auto& lc = ct.link_cost(m, 0, 1);
    const double dc = clear_distance(zones[0], zones[1]);
    CHECK(lc.clear_dist == doctest::Approx(dc));
    auto [d, t] = interzonal(p.mode(m), zones[0], zones[1], dc);
    CHECK(lc.dist == doctest::Approx(d));
    CHECK(lc.time == doctest::Approx(t));
    const auto& rev = ct.link_cost(m, 1, 0);
    CHECK(rev.dist == doctest::Approx(lc.dist));
    CHECK(rev.time == doctest::Approx(lc.time));
  }
  // cells 4 km apart horizontally
  CHECK(ct.link_cost(Mode::RAIL, 0, 1).clear_dist == doctest::Approx(4.0));
  // intermodal transfer entries exist for distinct pairs in every zone
  CHECK(ct.transfer_cost(Mode::RAIL, Mode::LBUS, 0) ==
        doctest::Approx(transfer_cost(p.mode(Mode::RAIL), p.mode(Mode::LBUS),
                                      p.globals)));
  // zero-cost operator rows for walking
  CHECK(p.mode(Mode::WALK).op_cost == doctest::Approx(0.0));
}

TEST_CASE("a single zone and mode yields the minimal table") {
  ParameterProfile p = default_profile();
  std::vector<Zone> zones = {make_zone(0, 5.0, true)};
  CostTables ct = build_cost_tables(zones, p, {Mode::LBUS}, {});
  CHECK(ct.zone.at(Mode::LBUS).size() == 1);
  const bool no_links = ct.link.empty() || ct.link.at(Mode::LBUS).empty();
  CHECK(no_links);
  CHECK(ct.at(Mode::LBUS, 0).start > 0.0);
}
