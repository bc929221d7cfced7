#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "dmcc/io.hpp"

using namespace dmcc;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const fs::path d = fs::temp_directory_path() / "dmcc_io_test";
  fs::create_directories(d);
  return d;
}

// small synthetic plan, no solver involved
PlanResult synthetic_plan(const HandoverSpec& spec, const ModelParams& P) {
  PlanResult plan;
  const int N = spec.N;
  plan.grid = {N, 3.0};
  plan.path.q_knots.resize(N + 1);
  plan.path.u_knots.resize(N + 1);
  plan.kappa.resize(N + 1);
  plan.epsilon.assign(N, 0.0);
  plan.nu.assign(N, 0.01);
  for (int k = 0; k <= N; ++k) {
    const double a = static_cast<double>(k) / N;
    for (int i = 0; i < 7; ++i)
      plan.path.q_knots[k][i] = (1 - a) * spec.q_start[i] + a * spec.q_end[i];
    plan.path.u_knots[k] = spec.effective_u_ref(P);
    plan.kappa[k] = spec.kappa_init * (1.0 - a);
    plan.p_ee.push_back(end_effector_position(plan.path.q_knots[k], P));
  }
  for (int k = 0; k < N; ++k) plan.epsilon[k] = plan.kappa[k] - plan.kappa[k + 1];
  plan.report.status = SolveStatus::Optimal;
  plan.objective = 3.1;
  return plan;
}

}  // namespace

TEST_SUITE_BEGIN("io");

TEST_CASE("presets round-trip through the scenario format losslessly") {
  for (const std::string& name : preset_names()) {
    const Scenario sc = scenario_from_preset(name);
    const std::string a = scenario_to_json(sc);
    const Scenario back = scenario_from_json(a);
    const std::string b = scenario_to_json(back);
    CHECK(a == b);
    CHECK(config_hash_hex(sc) == config_hash_hex(back));
  }
}

TEST_CASE("scenario parse failures carry field diagnostics") {
  CHECK_THROWS_AS(scenario_from_json("{ not json"), ParseError);
  CHECK_THROWS_AS(scenario_from_json(R"({"kind":"nonsense"})"), ParseError);
  CHECK_THROWS_AS(scenario_from_json(R"({"kind":"handover","target":{"kind":"wat"}})"),
                  ParseError);
  CHECK_THROWS_AS(
      scenario_from_json(R"({"kind":"handover","boundary":{"q_start":[1,2]}})"), ParseError);
}

TEST_CASE("dotted overrides edit nested scenario fields") {
  const Scenario sc = scenario_from_preset("static");
  const std::string text = scenario_to_json(sc);
  const std::string edited =
      apply_overrides(text, {"constraints.kappa_init=6", "solver.max_outer=9",
                             "target.position=[1.5,0.0,0.4]"});
  const Scenario back = scenario_from_json(edited);
  CHECK(back.handover().kappa_init == doctest::Approx(6.0));
  CHECK(back.solver.max_outer == 9);
  CHECK(std::get<StaticTrack>(back.handover().target.kind).position[0] == doctest::Approx(1.5));

  CHECK_THROWS_AS(apply_overrides(text, {"no_equals_sign"}), ParseError);
}

TEST_CASE("config hash is stable and sensitive") {
  const Scenario a = scenario_from_preset("static");
  Scenario b = scenario_from_preset("static");
  CHECK(config_hash_hex(a) == config_hash_hex(b));
  std::get<HandoverSpec>(b.spec).kappa_init = 6.0;
  CHECK(config_hash_hex(a) != config_hash_hex(b));
}

TEST_CASE("trajectory csv round trip preserves every value bit-exactly") {
  const Scenario sc = scenario_from_preset("static");
  const PlanResult plan = synthetic_plan(sc.handover(), sc.params);
  const fs::path f = temp_dir() / "traj.csv";
  write_trajectory_csv(f, plan);
  const TrajectoryData d = read_trajectory_csv(f);
  REQUIRE(d.knots() == plan.grid.N + 1);
  for (int k = 0; k <= plan.grid.N; ++k) {
    for (int i = 0; i < 7; ++i) CHECK(d.q[k][i] == plan.path.q_knots[k][i]);
    for (int i = 0; i < 5; ++i) CHECK(d.u[k][i] == plan.path.u_knots[k][i]);
    CHECK(d.kappa[k] == plan.kappa[k]);
    if (k < plan.grid.N) CHECK(d.epsilon[k] == plan.epsilon[k]);
  }
  CHECK(d.t_N() == doctest::Approx(plan.grid.t_N));
}

TEST_CASE("writing the same plan twice yields byte-identical csv") {
  const Scenario sc = scenario_from_preset("static");
  const PlanResult plan = synthetic_plan(sc.handover(), sc.params);
  const fs::path f1 = temp_dir() / "a.csv";
  const fs::path f2 = temp_dir() / "b.csv";
  write_trajectory_csv(f1, plan);
  write_trajectory_csv(f2, plan);
  std::ifstream a(f1, std::ios::binary), b(f2, std::ios::binary);
  std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
  std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
  CHECK(sa == sb);
  CHECK(!sa.empty());
}

TEST_CASE("corrupted csv is rejected") {
  const fs::path f = temp_dir() / "bad.csv";
  std::ofstream(f) << "t_s,x_m\n1.0,garbage_value\n";
  CHECK_THROWS_AS(read_trajectory_csv(f), ParseError);
  const fs::path g = temp_dir() / "nonexistent.csv";
  CHECK_THROWS_AS(read_trajectory_csv(g), ParseError);
}

TEST_CASE("plan meta and manifest round trip") {
  const Scenario sc = scenario_from_preset("linear");
  const PlanResult plan = synthetic_plan(sc.handover(), sc.params);
  const fs::path dir = temp_dir() / "bundle";
  const PlanOutputs files = write_plan_outputs(dir, sc, plan, "plan --preset linear", 1.5);
  CHECK(fs::exists(files.trajectory_csv));
  CHECK(fs::exists(files.meta_json));
  CHECK(fs::exists(files.manifest_json));

  const PlanMeta meta = read_plan_meta(files.meta_json);
  CHECK(meta.t_N == doctest::Approx(plan.grid.t_N));
  CHECK(meta.report.status == SolveStatus::Optimal);
  CHECK(meta.config_hash == config_hash_hex(sc));
  CHECK(scenario_to_json(meta.scenario) == scenario_to_json(sc));
}

TEST_CASE("figure data: contact intervals carry the full progress mass") {
  Scenario sc = scenario_from_preset("static");
  std::get<HandoverSpec>(sc.spec).N = 20;
  PlanResult plan = synthetic_plan(sc.handover(), sc.params);
  // carve a synthetic contact window totalling kappa_init
  for (int k = 0; k < 20; ++k) plan.epsilon[k] = 0.0;
  plan.epsilon[8] = 0.9;
  plan.epsilon[9] = 0.9;
  plan.epsilon[10] = 0.2;
  const fs::path f = temp_dir() / "plots";
  write_trajectory_csv(temp_dir() / "figtraj.csv", plan);
  const TrajectoryData traj = read_trajectory_csv(temp_dir() / "figtraj.csv");

  const auto files = emit_figure_data("fig6", traj, sc, f);
  REQUIRE(files.size() == 2);
  std::ifstream in(files[1]);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header == "t_start_s,t_end_s,knot_start,knot_end,eps_mass_window,eps_mass_total");
  const double total = std::stod(row.substr(row.rfind(',') + 1));
  CHECK(total == doctest::Approx(2.0));

  const auto f5 = emit_figure_data("fig5", traj, sc, f);
  CHECK(f5.size() == 1);
  const auto f8 = emit_figure_data("fig8", traj, sc, f);
  CHECK(f8.size() == 1);
  CHECK_THROWS_AS(emit_figure_data("fig99", traj, sc, f), ValidationError);
}

TEST_CASE("race and sweep csv writers produce parseable tables") {
  RaceResult race;
  race.mode = RaceDynamics::Del;
  race.grid = {4, 2.0};
  race.q_knots.assign(5, Vec7d{});
  race.u_knots.assign(5, Vec5d{});
  race.epsilon = {{0.25, 0.25, 0.25, 0.25}};
  race.kappa = {{1.0, 0.75, 0.5, 0.25, 0.0}};
  race.nu = {{0.0, 0.0, 0.0, 0.0}};
  const fs::path f = temp_dir() / "race.csv";
  write_race_csv(f, race);
  std::string header;
  std::ifstream in(f);
  std::getline(in, header);
  CHECK(header.find("eps_wp0") != std::string::npos);

  write_sweep_csv(temp_dir() / "sweep.csv", {{1, "del", 2.0, 0.1, "optimal"}});
  std::ifstream sw(temp_dir() / "sweep.csv");
  std::getline(sw, header);
  CHECK(header == "waypoints,mode,t_N_s,wall_time_s,status");
}

TEST_SUITE_END();
