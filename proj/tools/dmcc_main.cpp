// Command-line front end: time-optimal handover planning, racing comparisons,
// variational replay checks, closed-loop tracking runs, and plot-data export.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dmcc/io.hpp"

using namespace dmcc;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;   // validation / parse / unknown id
constexpr int kExitSolver = 2;  // solver did not reach an optimal point

fs::path default_out_dir(const std::string& leaf) {
  if (const char* env = std::getenv("DMCC_OUT_DIR")) return fs::path(env) / leaf;
  return fs::path("runs") / leaf;
}

Scenario load_with_overrides(const std::string& preset_name, const std::string& scenario_file,
                             const std::vector<std::string>& sets) {
  std::string text;
  if (!scenario_file.empty()) {
    text = scenario_to_json(load_scenario(scenario_file));
  } else {
    text = scenario_to_json(scenario_from_preset(preset_name));
  }
  if (!sets.empty()) text = apply_overrides(text, sets);
  return scenario_from_json(text);
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int cmd_plan(const std::string& preset_name, const std::string& scenario_file,
             const std::vector<std::string>& sets, std::string out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  const Scenario sc = load_with_overrides(preset_name, scenario_file, sets);
  if (!sc.is_handover()) throw ValidationError("plan", "scenario is not a handover scenario");
  if (out_dir.empty()) out_dir = default_out_dir("plan_" + sc.name).string();

  const PlanResult plan = plan_handover(sc.handover(), sc.params, sc.solver);
  const PlanOutputs files = write_plan_outputs(out_dir, sc, plan, "plan", seconds_since(t0));
  std::printf("status: %s\n", to_string(plan.report.status).c_str());
  std::printf("t_N: %.6f s  objective: %.6f  eps_sum: %.6f\n", plan.grid.t_N, plan.objective,
              plan.epsilon_sum());
  std::printf("violation: %.3e  kkt: %.3e  iterations: %d  wall: %.1f s\n",
              plan.report.max_violation, plan.report.kkt_residual, plan.report.iterations,
              plan.report.wall_time_s);
  std::printf("wrote %s\n", files.trajectory_csv.string().c_str());
  return plan.report.status == SolveStatus::Optimal ? kExitOk : kExitSolver;
}

int cmd_simulate(const std::string& run_dir) {
  const fs::path dir(run_dir);
  const TrajectoryData traj = read_trajectory_csv(dir / "trajectory.csv");
  const PlanMeta meta = read_plan_meta(dir / "meta.json");
  if (!meta.scenario.is_handover())
    throw ValidationError("simulate", "meta does not describe a handover run");
  const HandoverSpec& spec = meta.scenario.handover();
  const ModelParams& P = meta.scenario.params;

  const int N = traj.knots() - 1;
  const KnotGrid grid{N, traj.t_N()};
  const DiscretePath replay =
      simulate(traj.q[0], spec.qdot_start, std::span<const Vec5d>(traj.u), grid, P);
  double max_dev = 0.0;
  for (int k = 0; k <= N; ++k)
    for (int i = 0; i < 7; ++i)
      max_dev = std::max(max_dev, std::abs(replay.q_knots[k][i] - traj.q[k][i]));
  std::printf("replayed %d knots, max knot deviation: %.3e\n", N + 1, max_dev);
  return kExitOk;
}

int cmd_race(const std::string& preset_name, const std::string& scenario_file,
             const std::string& mode, int sweep_max, const std::vector<std::string>& sets,
             std::string out_dir) {
  const auto t0 = std::chrono::steady_clock::now();

  if (sweep_max > 0) {
    if (out_dir.empty()) out_dir = default_out_dir("race_sweep").string();
    fs::create_directories(out_dir);
    std::vector<SweepRow> rows;
    for (int n = 1; n <= sweep_max; ++n) {
      for (const std::string& m : {std::string("del"), std::string("rk4")}) {
        Scenario sc = load_with_overrides("race-" + std::to_string(n), "", sets);
        RaceSpec spec = sc.race();
        spec.mode = m == "del" ? RaceDynamics::Del : RaceDynamics::Rk4Collocation;
        const auto ts = std::chrono::steady_clock::now();
        const RaceResult res = plan_race(spec, sc.params, sc.solver);
        rows.push_back({n, m, res.grid.t_N, seconds_since(ts), to_string(res.report.status)});
        std::printf("waypoints=%d mode=%s status=%s t_N=%.4f wall=%.1fs\n", n, m.c_str(),
                    to_string(res.report.status).c_str(), res.grid.t_N, rows.back().wall_time_s);
      }
    }
    write_sweep_csv(fs::path(out_dir) / "sweep.csv", rows);
    RunManifest man;
    man.command = "race --sweep";
    man.scenario_snapshot = "{}";
    man.outputs = {(fs::path(out_dir) / "sweep.csv").string()};
    man.wall_time_s = seconds_since(t0);
    write_manifest(fs::path(out_dir) / "manifest.json", man);
    for (const auto& r : rows)
      if (r.status != "optimal") return kExitSolver;
    return kExitOk;
  }

  Scenario sc = load_with_overrides(preset_name, scenario_file, sets);
  if (sc.is_handover()) throw ValidationError("race", "scenario is not a race scenario");
  RaceSpec spec = sc.race();
  if (mode == "del") spec.mode = RaceDynamics::Del;
  else if (mode == "rk4") spec.mode = RaceDynamics::Rk4Collocation;
  else if (!mode.empty()) throw ValidationError("race.mode", "expected del or rk4");
  sc.spec = spec;

  if (out_dir.empty()) out_dir = default_out_dir("race_" + sc.name).string();
  fs::create_directories(out_dir);
  const RaceResult res = plan_race(spec, sc.params, sc.solver);
  write_race_csv(fs::path(out_dir) / "race.csv", res);
  RunManifest man;
  man.command = "race";
  man.config_hash = config_hash_hex(sc);
  man.scenario_snapshot = scenario_to_json(sc);
  man.solver_status = to_string(res.report.status);
  man.outputs = {(fs::path(out_dir) / "race.csv").string()};
  man.wall_time_s = seconds_since(t0);
  write_manifest(fs::path(out_dir) / "manifest.json", man);
  std::printf("status: %s  t_N: %.6f s  wall: %.1f s\n", to_string(res.report.status).c_str(),
              res.grid.t_N, res.report.wall_time_s);
  return res.report.status == SolveStatus::Optimal ? kExitOk : kExitSolver;
}

int cmd_track(const std::string& plan_dir, bool gpr_on, const std::vector<double>& disturbance,
              double duration, std::string out_dir) {
  const auto t0 = std::chrono::steady_clock::now();

  Scenario sc;
  std::vector<ReferencePoint> ref;
  if (!plan_dir.empty()) {
    const fs::path dir(plan_dir);
    const TrajectoryData traj = read_trajectory_csv(dir / "trajectory.csv");
    const PlanMeta meta = read_plan_meta(dir / "meta.json");
    sc = meta.scenario;
    PlanResult plan;
    const int N = traj.knots() - 1;
    plan.grid = {N, traj.t_N()};
    plan.path.q_knots = traj.q;
    plan.path.u_knots = traj.u;
    ref = reference_from_plan(plan, sc.params, sc.nmpc.period,
                              duration > traj.t_N() ? duration - traj.t_N() : 1.0);
  } else {
    sc = scenario_from_preset("static");
    ref = hover_reference({0.0, 0.0, 0.8}, duration + 1.0, sc.nmpc.period);
  }

  TrackingOptions opts;
  opts.duration = duration;
  opts.use_gpr = gpr_on;
  opts.gpr = sc.gpr;
  if (disturbance.size() == 3)
    opts.disturbance.accel_body = {disturbance[0], disturbance[1], disturbance[2]};

  const ClosedLoopLog log = run_closed_loop(ref, sc.nmpc, opts);

  if (out_dir.empty()) out_dir = default_out_dir("track").string();
  fs::create_directories(out_dir);
  write_tracking_csv(fs::path(out_dir) / "tracking.csv", log);
  RunManifest man;
  man.command = "track";
  man.scenario_snapshot = scenario_to_json(sc);
  man.outputs = {(fs::path(out_dir) / "tracking.csv").string()};
  man.wall_time_s = seconds_since(t0);
  write_manifest(fs::path(out_dir) / "manifest.json", man);

  std::printf("steps: %zu  gpr: %s (%d points)\n", log.t.size(), log.gpr_used ? "on" : "off",
              log.gpr_points);
  std::printf("position error: mean %.4e m  max %.4e m  steady %.4e m\n", log.mean_pos_error,
              log.max_pos_error, log.steady_pos_error);
  if (log.any_degraded) std::printf("warning: controller entered degraded mode\n");
  return kExitOk;
}

int cmd_plot_data(const std::string& run_dir, const std::string& figure, std::string out_dir) {
  const fs::path dir(run_dir);
  const TrajectoryData traj = read_trajectory_csv(dir / "trajectory.csv");
  const PlanMeta meta = read_plan_meta(dir / "meta.json");
  if (out_dir.empty()) out_dir = (dir / "plots").string();
  const auto files = emit_figure_data(figure, traj, meta.scenario, out_dir);
  for (const auto& f : files) std::printf("wrote %s\n", f.string().c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dmcc: time-optimal aerial-manipulator handover planning"};
  app.require_subcommand(1);

  std::string preset_name = "static", scenario_file, out_dir, mode, plan_dir, run_dir,
              figure = "fig6";
  std::vector<std::string> sets;
  std::vector<double> disturbance;
  bool gpr_on = false;
  double duration = 20.0;
  int sweep_max = 0;

  auto* plan = app.add_subcommand("plan", "solve a handover scenario");
  plan->add_option("--preset", preset_name, "scenario preset name");
  plan->add_option("--scenario", scenario_file, "scenario JSON file");
  plan->add_option("--set", sets, "dotted-path override key=value");
  plan->add_option("--out", out_dir, "output directory");

  auto* sim = app.add_subcommand("simulate", "replay a plan through the variational integrator");
  sim->add_option("run_dir", run_dir, "directory with trajectory.csv and meta.json")->required();

  auto* race = app.add_subcommand("race", "waypoint racing solves (DEL or RK4 dynamics)");
  race->add_option("--preset", preset_name, "race preset (race-1..race-4)");
  race->add_option("--scenario", scenario_file, "scenario JSON file");
  race->add_option("--mode", mode, "dynamics mode: del or rk4");
  race->add_option("--sweep", sweep_max, "run 1..n waypoints in both modes");
  race->add_option("--set", sets, "dotted-path override key=value");
  race->add_option("--out", out_dir, "output directory");

  auto* track = app.add_subcommand("track", "closed-loop NMPC tracking simulation");
  track->add_option("--plan", plan_dir, "plan run directory to track (hover hold if omitted)");
  track->add_flag("--gpr", gpr_on, "train and use the GPR disturbance model");
  track->add_option("--disturbance", disturbance, "body-frame accel disturbance (3 values)")
      ->expected(3);
  track->add_option("--duration", duration, "simulated seconds");
  track->add_option("--out", out_dir, "output directory");

  auto* plot = app.add_subcommand("plot-data", "emit tidy per-figure CSV data");
  plot->add_option("run_dir", run_dir, "plan run directory")->required();
  plot->add_option("--figure", figure, "fig5 | fig6 | fig7 | fig8");
  plot->add_option("--out", out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*plan) return cmd_plan(preset_name, scenario_file, sets, out_dir);
    if (*sim) return cmd_simulate(run_dir);
    if (*race) return cmd_race(preset_name, scenario_file, mode, sweep_max, sets, out_dir);
    if (*track) return cmd_track(plan_dir, gpr_on, disturbance, duration, out_dir);
    if (*plot) return cmd_plot_data(run_dir, figure, out_dir);
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const UnknownPreset& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitSolver;
  }
  return kExitUsage;
}
