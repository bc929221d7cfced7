#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dmcc/presets.hpp"
#include "dmcc/tracking.hpp"
#include "dmcc/version.hpp"

namespace dmcc {

/// A fully described run: model parameters, the planning spec, solver and
/// tracking configuration. Serializes to the documented scenario JSON.
struct Scenario {
  std::string name = "custom";
  std::string params_preset = "table_i";  // table_i | hardware | racing | custom
  ModelParams params = ModelParams::table_i();
  ScenarioSpec spec = HandoverSpec{};
  SolverOptions solver;
  NmpcConfig nmpc;
  double tracking_duration = 20.0;
  Vec3d disturbance_body{};
  bool use_gpr = false;
  GprConfig gpr;

  bool is_handover() const { return std::holds_alternative<HandoverSpec>(spec); }
  const HandoverSpec& handover() const { return std::get<HandoverSpec>(spec); }
  const RaceSpec& race() const { return std::get<RaceSpec>(spec); }
};

Scenario scenario_from_preset(const std::string& name);

/// Canonical (sorted-key) JSON; hashing and the determinism contract rely on
/// this serialization being stable.
std::string scenario_to_json(const Scenario& sc);
Scenario scenario_from_json(const std::string& text);
Scenario load_scenario(const std::filesystem::path& file);
void save_scenario(const Scenario& sc, const std::filesystem::path& file);

/// Applies dotted-path assignments ("constraints.kappa_init=6") on top of a
/// scenario JSON document. Values parse as JSON scalars/arrays.
std::string apply_overrides(const std::string& json_text,
                            const std::vector<std::string>& assignments);

uint64_t fnv1a64(std::string_view data);
std::string config_hash_hex(const Scenario& sc);

// ---------------------------------------------------------------------------
// result files
// ---------------------------------------------------------------------------

struct TrajectoryData {
  std::vector<double> t;
  std::vector<Vec7d> q;
  std::vector<Vec5d> u;
  std::vector<double> epsilon, kappa, nu;  // epsilon/nu carry 0 on the final row
  std::vector<Vec3d> p_ee;

  int knots() const { return static_cast<int>(t.size()); }
  double t_N() const { return t.empty() ? 0.0 : t.back(); }
};

void write_trajectory_csv(const std::filesystem::path& file, const PlanResult& plan);
TrajectoryData read_trajectory_csv(const std::filesystem::path& file);

struct PlanMeta {
  Scenario scenario;
  double t_N = 0.0;
  double objective = 0.0;
  SolveReport report;
  std::string config_hash;
};

void write_plan_meta(const std::filesystem::path& file, const Scenario& sc, const PlanResult& plan);
PlanMeta read_plan_meta(const std::filesystem::path& file);

struct RunManifest {
  std::string command;
  std::string config_hash;
  std::string scenario_snapshot;  // canonical scenario JSON
  std::string solver_status;
  std::vector<std::string> outputs;
  double wall_time_s = 0.0;
  std::string tool_version = kVersion;
};

/// Written atomically (temp file + rename) next to every output set.
void write_manifest(const std::filesystem::path& file, const RunManifest& m);

struct PlanOutputs {
  std::filesystem::path trajectory_csv;
  std::filesystem::path meta_json;
  std::filesystem::path manifest_json;
};

PlanOutputs write_plan_outputs(const std::filesystem::path& outdir, const Scenario& sc,
                               const PlanResult& plan, const std::string& command,
                               double wall_time_s);

void write_race_csv(const std::filesystem::path& file, const RaceResult& race);

struct SweepRow {
  int waypoints = 0;
  std::string mode;
  double t_N = 0.0;
  double wall_time_s = 0.0;
  std::string status;
};
void write_sweep_csv(const std::filesystem::path& file, const std::vector<SweepRow>& rows);

void write_tracking_csv(const std::filesystem::path& file, const ClosedLoopLog& log);

/// Emits tidy per-figure CSVs (poses, end-effector traces, contact-window
/// intervals, heading series) into outdir. Returns written files.
std::vector<std::filesystem::path> emit_figure_data(const std::string& figure,
                                                    const TrajectoryData& traj,
                                                    const Scenario& sc,
                                                    const std::filesystem::path& outdir);

}  // namespace dmcc
