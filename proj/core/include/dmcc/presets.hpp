#pragma once

#include <string>
#include <variant>
#include <vector>

#include "dmcc/planner.hpp"

namespace dmcc {

using ScenarioSpec = std::variant<HandoverSpec, RaceSpec>;

/// Canned scenarios: "static", "linear", "circle" handovers and the seeded
/// "race-1".."race-4" waypoint courses. Throws UnknownPreset otherwise.
ScenarioSpec preset(const std::string& name);

std::vector<std::string> preset_names();

}  // namespace dmcc
