#include "dmcc/presets.hpp"

#include <numbers>

namespace dmcc {

namespace {

constexpr double kPiHalf = std::numbers::pi / 2.0;

HandoverSpec handover_base() {
  HandoverSpec s;
  // hover-to-hover with the arm hanging straight down at both ends
  s.q_start = {0.0, 0.0, 0.65, 0.0, 0.0, 0.0, kPiHalf};
  s.q_end = {2.5, 0.0, 0.65, 0.0, 0.0, 0.0, kPiHalf};
  s.qdot_start = {};
  s.qdot_end = {};
  s.N = 50;
  s.kappa_init = 2.0;
  s.nu_max = 0.02;
  s.c_limit_velocity = 0.01;
  s.c_limit_heading = 0.1;
  s.c_u = 3e-3;
  s.t_min = 0.5;
  s.t_max = 12.0;
  return s;
}

RaceSpec race_base(int n_waypoints) {
  // fixed seeded desk-scale course; race-n takes the first n gates
  static const std::vector<Vec3d> kCourse = {
      {0.8, 0.6, 1.2}, {1.6, -0.6, 0.9}, {2.2, 0.5, 1.3}, {2.7, -0.3, 1.0}};
  RaceSpec s;
  s.q_start = {0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0};
  s.q_end = {3.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0};
  s.pass_tolerance = 0.05;
  s.t_min = 0.5;
  s.t_max = 30.0;
  s.waypoints.assign(kCourse.begin(), kCourse.begin() + n_waypoints);
  s.N = 16 * (n_waypoints + 1);
  return s;
}

}  // namespace

ScenarioSpec preset(const std::string& name) {
  if (name == "static") {
    HandoverSpec s = handover_base();
    s.target.kind = StaticTrack{{1.0, 0.0, 0.4}};
    return s;
  }
  if (name == "linear") {
    HandoverSpec s = handover_base();
    s.target.kind = LinearTrack{{1.0, 0.0, 0.4}, {0.1, 0.0, 0.0}};
    return s;
  }
  if (name == "circle") {
    HandoverSpec s = handover_base();
    s.target.kind = CircularTrack{1.1, 0.0, 0.4, 0.3, 0.0, 0.4};
    return s;
  }
  if (name.rfind("race-", 0) == 0) {
    const int n = std::atoi(name.c_str() + 5);
    if (n >= 1 && n <= 4) return race_base(n);
  }
  throw UnknownPreset("unknown preset '" + name + "'");
}

std::vector<std::string> preset_names() {
  return {"static", "linear", "circle", "race-1", "race-2", "race-3", "race-4"};
}

}  // namespace dmcc
