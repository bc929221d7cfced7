#pragma once

#include <cmath>
#include <variant>
#include <vector>

#include "dmcc/errors.hpp"
#include "dmcc/smallvec.hpp"

namespace dmcc {

// Analytic target tracks. Knot times move while the planner optimizes t_N,
// so tracks must be evaluable at arbitrary real t with exact velocities.
struct StaticTrack {
  Vec3d position{};
};

struct LinearTrack {
  Vec3d start{};
  Vec3d velocity{};
};

struct CircularTrack {
  double center_x = 0.0;
  double center_y = 0.0;
  double radius = 0.0;
  double angular_rate = 0.0;
  double phase = 0.0;
  double altitude = 0.0;
};

struct WaypointsTrack {
  std::vector<Vec3d> waypoints;
};

struct TargetTrack {
  std::variant<StaticTrack, LinearTrack, CircularTrack, WaypointsTrack> kind;

  bool time_parameterized() const { return !std::holds_alternative<WaypointsTrack>(kind); }
};

template <typename T>
Vec3<T> target_position(const TargetTrack& track, const T& t) {
  using std::cos;
  using std::sin;
  if (const auto* s = std::get_if<StaticTrack>(&track.kind)) {
    return to_scalar<T>(s->position);
  }
  if (const auto* l = std::get_if<LinearTrack>(&track.kind)) {
    return to_scalar<T>(l->start) + to_scalar<T>(l->velocity) * t;
  }
  if (const auto* c = std::get_if<CircularTrack>(&track.kind)) {
    const T ang = c->angular_rate * t + c->phase;
    return {c->radius * sin(ang) + c->center_x, c->radius * cos(ang) + c->center_y,
            T(c->altitude)};
  }
  throw ValidationError("target", "waypoint tracks are not time-parameterized");
}

template <typename T>
Vec3<T> target_velocity(const TargetTrack& track, const T& t) {
  using std::cos;
  using std::sin;
  if (std::holds_alternative<StaticTrack>(track.kind)) {
    return {};
  }
  if (const auto* l = std::get_if<LinearTrack>(&track.kind)) {
    return to_scalar<T>(l->velocity);
  }
  if (const auto* c = std::get_if<CircularTrack>(&track.kind)) {
    const T ang = c->angular_rate * t + c->phase;
    const double rw = c->radius * c->angular_rate;
    return {rw * cos(ang), -rw * sin(ang), T(0.0)};
  }
  throw ValidationError("target", "waypoint tracks are not time-parameterized");
}

/// Peak target speed over all t; analytic per kind.
double target_max_speed(const TargetTrack& track);

}  // namespace dmcc
