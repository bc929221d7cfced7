#include "dmcc/targets.hpp"

namespace dmcc {

double target_max_speed(const TargetTrack& track) {
  if (std::holds_alternative<StaticTrack>(track.kind)) return 0.0;
  if (const auto* l = std::get_if<LinearTrack>(&track.kind))
    return std::sqrt(dot(l->velocity, l->velocity));
  if (const auto* c = std::get_if<CircularTrack>(&track.kind))
    return std::abs(c->radius * c->angular_rate);
  return 0.0;
}

}  // namespace dmcc
