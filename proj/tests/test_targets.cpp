#include <doctest.h>

#include <cmath>

#include "dmcc/presets.hpp"
#include "dmcc/targets.hpp"

using namespace dmcc;

TEST_SUITE_BEGIN("targets");

TEST_CASE("circular track starts at the documented point") {
  TargetTrack t;
  t.kind = CircularTrack{1.1, 0.0, 0.4, 0.3, 0.0, 0.4};
  const Vec3d p0 = target_position(t, 0.0);
  CHECK(p0[0] == doctest::Approx(1.1));
  CHECK(p0[1] == doctest::Approx(0.4));
  CHECK(p0[2] == doctest::Approx(0.4));
}

TEST_CASE("static tracks have identically zero velocity") {
  TargetTrack t;
  t.kind = StaticTrack{{1.0, 0.0, 0.4}};
  for (double tt : {0.0, 0.7, 3.3, 12.0}) {
    const Vec3d v = target_velocity(t, tt);
    CHECK(dot(v, v) == 0.0);
    const Vec3d p = target_position(t, tt);
    CHECK(p[0] == doctest::Approx(1.0));
  }
  CHECK(target_max_speed(t) == 0.0);
}

TEST_CASE("velocity is the exact derivative of position (finite differences)") {
  std::vector<TargetTrack> tracks(3);
  tracks[0].kind = StaticTrack{{0.3, -0.2, 0.5}};
  tracks[1].kind = LinearTrack{{1.0, 0.0, 0.4}, {0.1, -0.05, 0.02}};
  tracks[2].kind = CircularTrack{1.1, 0.0, 0.4, 0.3, 0.7, 0.4};
  const double h = 1e-6;
  for (const auto& t : tracks) {
    for (double tt : {0.0, 0.9, 4.2, 9.7}) {
      const Vec3d v = target_velocity(t, tt);
      const Vec3d fd = (target_position(t, tt + h) - target_position(t, tt - h)) * (1.0 / (2 * h));
      for (int i = 0; i < 3; ++i) CHECK(std::abs(v[i] - fd[i]) < 1e-6);
    }
  }
}

TEST_CASE("circular speed equals radius times angular rate for all times") {
  TargetTrack t;
  t.kind = CircularTrack{1.1, 0.0, 0.4, 0.3, 0.0, 0.4};
  for (double tt = 0.0; tt < 25.0; tt += 1.7) {
    const Vec3d v = target_velocity(t, tt);
    CHECK(std::sqrt(dot(v, v)) == doctest::Approx(0.4 * 0.3).epsilon(1e-12));
  }
  CHECK(target_max_speed(t) == doctest::Approx(0.12));
}

TEST_CASE("presets carry the documented scenario values") {
  const auto st = std::get<HandoverSpec>(preset("static"));
  for (double tt : {0.0, 2.0, 8.0}) {
    const Vec3d p = target_position(st.target, tt);
    CHECK(p[0] == doctest::Approx(1.0));
    CHECK(p[1] == doctest::Approx(0.0));
    CHECK(p[2] == doctest::Approx(0.4));
  }
  CHECK(st.kappa_init == doctest::Approx(2.0));
  CHECK(st.nu_max == doctest::Approx(0.02));
  CHECK(st.N == 50);
  CHECK(st.q_start[2] == doctest::Approx(0.65));
  CHECK(st.q_end[0] == doctest::Approx(2.5));

  const auto lin = std::get<HandoverSpec>(preset("linear"));
  const Vec3d v = target_velocity(lin.target, 1.23);
  CHECK(v[0] == doctest::Approx(0.1));
  CHECK(v[1] == doctest::Approx(0.0));
  CHECK(v[2] == doctest::Approx(0.0));

  const auto circ = std::get<HandoverSpec>(preset("circle"));
  CHECK(std::holds_alternative<CircularTrack>(circ.target.kind));

  const auto race2 = std::get<RaceSpec>(preset("race-2"));
  CHECK(race2.waypoints.size() == 2);
  CHECK(race2.pass_tolerance > 0.0);

  CHECK_THROWS_AS(preset("nonsense"), UnknownPreset);
}

TEST_CASE("waypoint tracks refuse time evaluation") {
  TargetTrack t;
  t.kind = WaypointsTrack{{{1, 0, 1}}};
  CHECK(!t.time_parameterized());
  CHECK_THROWS_AS(target_position(t, 0.5), ValidationError);
}

TEST_SUITE_END();
