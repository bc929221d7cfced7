#include "dmcc/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace dmcc {

using nlohmann::json;

namespace {

json to_json_vec(std::span<const double> v) {
  json a = json::array();
  for (double x : v) a.push_back(x);
  return a;
}

template <int N>
Vec<double, N> vec_from_json(const json& a, const std::string& path) {
  if (!a.is_array() || a.size() != N)
    throw ParseError(path + ": expected array of " + std::to_string(N));
  Vec<double, N> r;
  for (int i = 0; i < N; ++i) r[i] = a[static_cast<size_t>(i)].get<double>();
  return r;
}

json diag_or_full(const Mat3<double>& m) {
  const bool diag = m(0, 1) == 0 && m(0, 2) == 0 && m(1, 0) == 0 && m(1, 2) == 0 &&
                    m(2, 0) == 0 && m(2, 1) == 0;
  json a = json::array();
  if (diag) {
    a = {m(0, 0), m(1, 1), m(2, 2)};
  } else {
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) a.push_back(m(i, j));
  }
  return a;
}

Mat3<double> mat_from_json(const json& a, const std::string& path) {
  Mat3<double> m;
  if (a.is_array() && a.size() == 3) {
    m(0, 0) = a[0].get<double>();
    m(1, 1) = a[1].get<double>();
    m(2, 2) = a[2].get<double>();
    return m;
  }
  if (a.is_array() && a.size() == 9) {
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) m(i, j) = a[static_cast<size_t>(3 * i + j)].get<double>();
    return m;
  }
  throw ParseError(path + ": expected diagonal (3) or full (9) inertia array");
}

json params_to_json(const ModelParams& p, const std::string& preset) {
  json m;
  m["preset"] = preset;
  m["m_quadrotor"] = p.m_quadrotor;
  m["m_arm"] = p.m_arm;
  m["J_quadrotor"] = diag_or_full(p.J_quadrotor);
  m["J_arm"] = diag_or_full(p.J_arm);
  m["l_arm"] = p.l_arm;
  m["l_offset"] = p.l_offset;
  m["l_frame"] = p.l_frame;
  m["c_tau"] = p.c_tau;
  m["g"] = p.g;
  m["q_min"] = to_json_vec({p.q_min.a.data(), 7});
  m["q_max"] = to_json_vec({p.q_max.a.data(), 7});
  m["qdot_min"] = to_json_vec({p.qdot_min.a.data(), 7});
  m["qdot_max"] = to_json_vec({p.qdot_max.a.data(), 7});
  m["u_min"] = to_json_vec({p.u_min.a.data(), 5});
  m["u_max"] = to_json_vec({p.u_max.a.data(), 5});
  return m;
}

ModelParams params_from_json(const json& m, std::string* preset_out) {
  std::string preset = m.value("preset", "table_i");
  ModelParams p;
  if (preset == "table_i") p = ModelParams::table_i();
  else if (preset == "hardware") p = ModelParams::hardware();
  else if (preset == "racing") p = ModelParams::racing();
  else if (preset == "custom") p = ModelParams::table_i();
  else throw ParseError("model.preset: unknown base '" + preset + "'");
  if (preset_out) *preset_out = preset;

  if (m.contains("m_quadrotor")) p.m_quadrotor = m.at("m_quadrotor").get<double>();
  if (m.contains("m_arm")) p.m_arm = m.at("m_arm").get<double>();
  if (m.contains("J_quadrotor")) p.J_quadrotor = mat_from_json(m.at("J_quadrotor"), "model.J_quadrotor");
  if (m.contains("J_arm")) p.J_arm = mat_from_json(m.at("J_arm"), "model.J_arm");
  if (m.contains("l_arm")) p.l_arm = m.at("l_arm").get<double>();
  if (m.contains("l_offset")) p.l_offset = m.at("l_offset").get<double>();
  if (m.contains("l_frame")) p.l_frame = m.at("l_frame").get<double>();
  if (m.contains("c_tau")) p.c_tau = m.at("c_tau").get<double>();
  if (m.contains("g")) p.g = m.at("g").get<double>();
  if (m.contains("q_min")) p.q_min = vec_from_json<7>(m.at("q_min"), "model.q_min");
  if (m.contains("q_max")) p.q_max = vec_from_json<7>(m.at("q_max"), "model.q_max");
  if (m.contains("qdot_min")) p.qdot_min = vec_from_json<7>(m.at("qdot_min"), "model.qdot_min");
  if (m.contains("qdot_max")) p.qdot_max = vec_from_json<7>(m.at("qdot_max"), "model.qdot_max");
  if (m.contains("u_min")) p.u_min = vec_from_json<5>(m.at("u_min"), "model.u_min");
  if (m.contains("u_max")) p.u_max = vec_from_json<5>(m.at("u_max"), "model.u_max");
  return p;
}

json target_to_json(const TargetTrack& t) {
  json j;
  if (const auto* s = std::get_if<StaticTrack>(&t.kind)) {
    j["kind"] = "static";
    j["position"] = to_json_vec({s->position.a.data(), 3});
  } else if (const auto* l = std::get_if<LinearTrack>(&t.kind)) {
    j["kind"] = "linear";
    j["start"] = to_json_vec({l->start.a.data(), 3});
    j["velocity"] = to_json_vec({l->velocity.a.data(), 3});
  } else if (const auto* c = std::get_if<CircularTrack>(&t.kind)) {
    j["kind"] = "circular";
    j["center"] = json{c->center_x, c->center_y};
    j["radius"] = c->radius;
    j["angular_rate"] = c->angular_rate;
    j["phase"] = c->phase;
    j["altitude"] = c->altitude;
  } else if (const auto* w = std::get_if<WaypointsTrack>(&t.kind)) {
    j["kind"] = "waypoints";
    json arr = json::array();
    for (const auto& p : w->waypoints) arr.push_back(to_json_vec({p.a.data(), 3}));
    j["waypoints"] = arr;
  }
  return j;
}

TargetTrack target_from_json(const json& j) {
  TargetTrack t;
  const std::string kind = j.value("kind", "");
  if (kind == "static") {
    t.kind = StaticTrack{vec_from_json<3>(j.at("position"), "target.position")};
  } else if (kind == "linear") {
    t.kind = LinearTrack{vec_from_json<3>(j.at("start"), "target.start"),
                         vec_from_json<3>(j.at("velocity"), "target.velocity")};
  } else if (kind == "circular") {
    CircularTrack c;
    const json& ctr = j.at("center");
    if (!ctr.is_array() || ctr.size() != 2) throw ParseError("target.center: expected [cx, cy]");
    c.center_x = ctr[0].get<double>();
    c.center_y = ctr[1].get<double>();
    c.radius = j.at("radius").get<double>();
    c.angular_rate = j.at("angular_rate").get<double>();
    c.phase = j.value("phase", 0.0);
    c.altitude = j.at("altitude").get<double>();
    t.kind = c;
  } else if (kind == "waypoints") {
    WaypointsTrack w;
    for (const auto& p : j.at("waypoints"))
      w.waypoints.push_back(vec_from_json<3>(p, "target.waypoints[]"));
    t.kind = w;
  } else {
    throw ParseError("target.kind: unknown '" + kind + "'");
  }
  return t;
}

json solver_to_json(const SolverOptions& s) {
  json j;
  j["feas_tol"] = s.feas_tol;
  j["opt_tol"] = s.opt_tol;
  j["max_outer"] = s.max_outer;
  j["max_inner"] = s.max_inner;
  j["max_total_inner"] = s.max_total_inner;
  j["penalty_init"] = s.penalty_init;
  j["penalty_growth"] = s.penalty_growth;
  j["penalty_cap"] = s.penalty_cap;
  j["required_reduction"] = s.required_reduction;
  j["lbfgs_memory"] = s.lbfgs_memory;
  j["stagnation_limit"] = s.stagnation_limit;
  return j;
}

SolverOptions solver_from_json(const json& j) {
  SolverOptions s;
  s.feas_tol = j.value("feas_tol", s.feas_tol);
  s.opt_tol = j.value("opt_tol", s.opt_tol);
  s.max_outer = j.value("max_outer", s.max_outer);
  s.max_inner = j.value("max_inner", s.max_inner);
  s.max_total_inner = j.value("max_total_inner", s.max_total_inner);
  s.penalty_init = j.value("penalty_init", s.penalty_init);
  s.penalty_growth = j.value("penalty_growth", s.penalty_growth);
  s.penalty_cap = j.value("penalty_cap", s.penalty_cap);
  s.required_reduction = j.value("required_reduction", s.required_reduction);
  s.lbfgs_memory = j.value("lbfgs_memory", s.lbfgs_memory);
  s.stagnation_limit = j.value("stagnation_limit", s.stagnation_limit);
  return s;
}

json report_to_json(const SolveReport& r) {
  json j;
  j["status"] = to_string(r.status);
  j["outer_iterations"] = r.outer_iterations;
  j["iterations"] = r.iterations;
  j["objective"] = r.objective;
  j["max_violation"] = r.max_violation;
  j["kkt_residual"] = r.kkt_residual;
  j["wall_time_s"] = r.wall_time_s;
  j["message"] = r.message;
  return j;
}

SolveReport report_from_json(const json& j) {
  SolveReport r;
  const std::string s = j.value("status", "numeric_failure");
  if (s == "optimal") r.status = SolveStatus::Optimal;
  else if (s == "max_iter") r.status = SolveStatus::MaxIter;
  else if (s == "infeasible") r.status = SolveStatus::Infeasible;
  else r.status = SolveStatus::NumericFailure;
  r.outer_iterations = j.value("outer_iterations", 0);
  r.iterations = j.value("iterations", 0);
  r.objective = j.value("objective", 0.0);
  r.max_violation = j.value("max_violation", 0.0);
  r.kkt_residual = j.value("kkt_residual", 0.0);
  r.wall_time_s = j.value("wall_time_s", 0.0);
  r.message = j.value("message", "");
  return r;
}

void write_text_atomic(const std::filesystem::path& file, const std::string& text) {
  const std::filesystem::path tmp = file.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << text;
  }
  std::filesystem::rename(tmp, file);
}

std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void write_csv_row(std::string* out, std::span<const double> row) {
  for (size_t i = 0; i < row.size(); ++i) {
    if (i) out->push_back(',');
    *out += fmt_double(row[i]);
  }
  out->push_back('\n');
}

std::vector<std::vector<double>> read_csv_numeric(const std::filesystem::path& file,
                                                  std::string* header) {
  std::ifstream in(file);
  if (!in) throw ParseError("cannot open " + file.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError(file.string() + ": empty file");
  if (header) *header = line;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      size_t pos = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &pos);
      } catch (const std::exception&) {
        throw ParseError(file.string() + ": non-numeric cell '" + cell + "'");
      }
      if (pos == 0) throw ParseError(file.string() + ": non-numeric cell '" + cell + "'");
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParseError(file.string() + ": ragged rows");
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

Scenario scenario_from_preset(const std::string& name) {
  Scenario sc;
  sc.name = name;
  sc.spec = preset(name);
  if (std::holds_alternative<RaceSpec>(sc.spec)) {
    sc.params = ModelParams::racing();
    sc.params_preset = "racing";
  }
  return sc;
}

std::string scenario_to_json(const Scenario& sc) {
  json j;
  j["name"] = sc.name;
  j["model"] = params_to_json(sc.params, sc.params_preset);
  if (sc.is_handover()) {
    const HandoverSpec& h = sc.handover();
    j["kind"] = "handover";
    json b;
    b["q_start"] = to_json_vec({h.q_start.a.data(), 7});
    b["qdot_start"] = to_json_vec({h.qdot_start.a.data(), 7});
    b["q_end"] = to_json_vec({h.q_end.a.data(), 7});
    b["qdot_end"] = to_json_vec({h.qdot_end.a.data(), 7});
    j["boundary"] = b;
    j["target"] = target_to_json(h.target);
    json c;
    c["N"] = h.N;
    c["kappa_init"] = h.kappa_init;
    c["nu_max"] = h.nu_max;
    c["c_limit_velocity"] = h.c_limit_velocity;
    c["c_limit_heading"] = h.c_limit_heading;
    c["c_u"] = h.c_u;
    c["t_bounds"] = json{h.t_min, h.t_max};
    if (h.u_ref) c["u_ref"] = to_json_vec({h.u_ref->a.data(), 5});
    j["constraints"] = c;
  } else {
    const RaceSpec& r = sc.race();
    j["kind"] = "race";
    json b;
    b["q_start"] = to_json_vec({r.q_start.a.data(), 7});
    b["q_end"] = to_json_vec({r.q_end.a.data(), 7});
    j["boundary"] = b;
    json rc;
    json wps = json::array();
    for (const auto& w : r.waypoints) wps.push_back(to_json_vec({w.a.data(), 3}));
    rc["waypoints"] = wps;
    rc["pass_tolerance"] = r.pass_tolerance;
    rc["mode"] = r.mode == RaceDynamics::Del ? "del" : "rk4";
    rc["N"] = r.N;
    rc["t_bounds"] = json{r.t_min, r.t_max};
    rc["c_u"] = r.c_u;
    j["race"] = rc;
  }
  j["solver"] = solver_to_json(sc.solver);
  json t;
  t["horizon"] = sc.nmpc.horizon;
  t["period"] = sc.nmpc.period;
  t["q_weights"] = to_json_vec({sc.nmpc.q_weights.a.data(), 10});
  t["r_weights"] = to_json_vec({sc.nmpc.r_weights.a.data(), 4});
  t["p_weights"] = to_json_vec({sc.nmpc.p_weights.a.data(), 10});
  t["u_min"] = to_json_vec({sc.nmpc.u_min.a.data(), 4});
  t["u_max"] = to_json_vec({sc.nmpc.u_max.a.data(), 4});
  t["duration"] = sc.tracking_duration;
  t["disturbance"] = to_json_vec({sc.disturbance_body.a.data(), 3});
  t["use_gpr"] = sc.use_gpr;
  json g;
  g["signal_var"] = sc.gpr.signal_var;
  g["length_scales"] = to_json_vec({sc.gpr.length_scales.data(), 5});
  g["noise_var"] = sc.gpr.noise_var;
  g["max_points"] = sc.gpr.max_points;
  t["gpr"] = g;
  j["tracking"] = t;
  return j.dump(2) + "\n";
}

Scenario scenario_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("scenario: invalid JSON: ") + e.what());
  }
  try {
    Scenario sc;
    sc.name = j.value("name", "custom");
    if (j.contains("model")) sc.params = params_from_json(j.at("model"), &sc.params_preset);
    const std::string kind = j.value("kind", "handover");
    if (kind == "handover") {
      HandoverSpec h;
      if (j.contains("boundary")) {
        const json& b = j.at("boundary");
        if (b.contains("q_start")) h.q_start = vec_from_json<7>(b.at("q_start"), "boundary.q_start");
        if (b.contains("qdot_start"))
          h.qdot_start = vec_from_json<7>(b.at("qdot_start"), "boundary.qdot_start");
        if (b.contains("q_end")) h.q_end = vec_from_json<7>(b.at("q_end"), "boundary.q_end");
        if (b.contains("qdot_end"))
          h.qdot_end = vec_from_json<7>(b.at("qdot_end"), "boundary.qdot_end");
      }
      if (j.contains("target")) h.target = target_from_json(j.at("target"));
      if (j.contains("constraints")) {
        const json& c = j.at("constraints");
        h.N = c.value("N", h.N);
        h.kappa_init = c.value("kappa_init", h.kappa_init);
        h.nu_max = c.value("nu_max", h.nu_max);
        h.c_limit_velocity = c.value("c_limit_velocity", h.c_limit_velocity);
        h.c_limit_heading = c.value("c_limit_heading", h.c_limit_heading);
        h.c_u = c.value("c_u", h.c_u);
        if (c.contains("t_bounds")) {
          const json& tb = c.at("t_bounds");
          if (!tb.is_array() || tb.size() != 2)
            throw ParseError("constraints.t_bounds: expected [t_min, t_max]");
          h.t_min = tb[0].get<double>();
          h.t_max = tb[1].get<double>();
        }
        if (c.contains("u_ref")) h.u_ref = vec_from_json<5>(c.at("u_ref"), "constraints.u_ref");
      }
      sc.spec = h;
    } else if (kind == "race") {
      RaceSpec r;
      if (j.contains("boundary")) {
        const json& b = j.at("boundary");
        if (b.contains("q_start")) r.q_start = vec_from_json<7>(b.at("q_start"), "boundary.q_start");
        if (b.contains("q_end")) r.q_end = vec_from_json<7>(b.at("q_end"), "boundary.q_end");
      }
      if (j.contains("race")) {
        const json& rc = j.at("race");
        if (rc.contains("waypoints"))
          for (const auto& w : rc.at("waypoints"))
            r.waypoints.push_back(vec_from_json<3>(w, "race.waypoints[]"));
        r.pass_tolerance = rc.value("pass_tolerance", r.pass_tolerance);
        const std::string mode = rc.value("mode", "del");
        if (mode == "del") r.mode = RaceDynamics::Del;
        else if (mode == "rk4") r.mode = RaceDynamics::Rk4Collocation;
        else throw ParseError("race.mode: expected 'del' or 'rk4'");
        r.N = rc.value("N", r.N);
        if (rc.contains("t_bounds")) {
          const json& tb = rc.at("t_bounds");
          r.t_min = tb[0].get<double>();
          r.t_max = tb[1].get<double>();
        }
        r.c_u = rc.value("c_u", r.c_u);
      }
      sc.spec = r;
    } else {
      throw ParseError("kind: expected 'handover' or 'race'");
    }
    if (j.contains("solver")) sc.solver = solver_from_json(j.at("solver"));
    if (j.contains("tracking")) {
      const json& t = j.at("tracking");
      sc.nmpc.horizon = t.value("horizon", sc.nmpc.horizon);
      sc.nmpc.period = t.value("period", sc.nmpc.period);
      if (t.contains("q_weights")) sc.nmpc.q_weights = vec_from_json<10>(t.at("q_weights"), "tracking.q_weights");
      if (t.contains("r_weights")) sc.nmpc.r_weights = vec_from_json<4>(t.at("r_weights"), "tracking.r_weights");
      if (t.contains("p_weights")) sc.nmpc.p_weights = vec_from_json<10>(t.at("p_weights"), "tracking.p_weights");
      if (t.contains("u_min")) sc.nmpc.u_min = vec_from_json<4>(t.at("u_min"), "tracking.u_min");
      if (t.contains("u_max")) sc.nmpc.u_max = vec_from_json<4>(t.at("u_max"), "tracking.u_max");
      sc.tracking_duration = t.value("duration", sc.tracking_duration);
      if (t.contains("disturbance"))
        sc.disturbance_body = vec_from_json<3>(t.at("disturbance"), "tracking.disturbance");
      sc.use_gpr = t.value("use_gpr", sc.use_gpr);
      if (t.contains("gpr")) {
        const json& g = t.at("gpr");
        sc.gpr.signal_var = g.value("signal_var", sc.gpr.signal_var);
        if (g.contains("length_scales")) {
          const auto ls = vec_from_json<5>(g.at("length_scales"), "tracking.gpr.length_scales");
          for (int i = 0; i < 5; ++i) sc.gpr.length_scales[static_cast<size_t>(i)] = ls[i];
        }
        sc.gpr.noise_var = g.value("noise_var", sc.gpr.noise_var);
        sc.gpr.max_points = g.value("max_points", sc.gpr.max_points);
      }
    }
    return sc;
  } catch (const json::exception& e) {
    throw ParseError(std::string("scenario: ") + e.what());
  }
}

Scenario load_scenario(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ParseError("cannot open scenario file " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return scenario_from_json(ss.str());
}

void save_scenario(const Scenario& sc, const std::filesystem::path& file) {
  write_text_atomic(file, scenario_to_json(sc));
}

std::string apply_overrides(const std::string& json_text,
                            const std::vector<std::string>& assignments) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("override target: invalid JSON: ") + e.what());
  }
  for (const std::string& a : assignments) {
    const size_t eq = a.find('=');
    if (eq == std::string::npos) throw ParseError("override '" + a + "': expected key=value");
    const std::string path = a.substr(0, eq);
    const std::string value = a.substr(eq + 1);
    json parsed;
    try {
      parsed = json::parse(value);
    } catch (const json::exception&) {
      parsed = value;  // bare strings allowed
    }
    json* node = &j;
    size_t start = 0;
    while (true) {
      const size_t dotpos = path.find('.', start);
      const std::string key = path.substr(start, dotpos - start);
      if (key.empty()) throw ParseError("override '" + a + "': empty path segment");
      if (dotpos == std::string::npos) {
        (*node)[key] = parsed;
        break;
      }
      node = &(*node)[key];
      start = dotpos + 1;
    }
  }
  return j.dump(2) + "\n";
}

uint64_t fnv1a64(std::string_view data) {
  uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string config_hash_hex(const Scenario& sc) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, fnv1a64(scenario_to_json(sc)));
  return buf;
}

// ---------------------------------------------------------------------------

static const char* kTrajectoryHeader =
    "t_s,x_m,y_m,z_m,phi_rad,theta_rad,psi_rad,alpha_rad,"
    "f1_N,f2_N,f3_N,f4_N,tau_servo_Nm,epsilon,kappa,nu_m,ee_x_m,ee_y_m,ee_z_m";

void write_trajectory_csv(const std::filesystem::path& file, const PlanResult& plan) {
  std::string out = kTrajectoryHeader;
  out.push_back('\n');
  const int N = plan.grid.N;
  const double dt = plan.grid.dt();
  for (int k = 0; k <= N; ++k) {
    std::array<double, 19> row{};
    row[0] = k * dt;
    for (int i = 0; i < 7; ++i) row[static_cast<size_t>(1 + i)] = plan.path.q_knots[k][i];
    for (int i = 0; i < 5; ++i) row[static_cast<size_t>(8 + i)] = plan.path.u_knots[k][i];
    row[13] = k < N ? plan.epsilon[static_cast<size_t>(k)] : 0.0;
    row[14] = plan.kappa[static_cast<size_t>(k)];
    row[15] = k < N ? plan.nu[static_cast<size_t>(k)] : 0.0;
    for (int i = 0; i < 3; ++i) row[static_cast<size_t>(16 + i)] = plan.p_ee[k][i];
    write_csv_row(&out, row);
  }
  write_text_atomic(file, out);
}

TrajectoryData read_trajectory_csv(const std::filesystem::path& file) {
  std::string header;
  const auto rows = read_csv_numeric(file, &header);
  if (header != kTrajectoryHeader) throw ParseError(file.string() + ": unexpected header");
  if (rows.size() < 3) throw ParseError(file.string() + ": too few knots");
  TrajectoryData d;
  for (const auto& r : rows) {
    if (r.size() != 19) throw ParseError(file.string() + ": bad column count");
    d.t.push_back(r[0]);
    Vec7d q;
    for (int i = 0; i < 7; ++i) q[i] = r[static_cast<size_t>(1 + i)];
    d.q.push_back(q);
    Vec5d u;
    for (int i = 0; i < 5; ++i) u[i] = r[static_cast<size_t>(8 + i)];
    d.u.push_back(u);
    d.epsilon.push_back(r[13]);
    d.kappa.push_back(r[14]);
    d.nu.push_back(r[15]);
    d.p_ee.push_back({r[16], r[17], r[18]});
  }
  return d;
}

void write_plan_meta(const std::filesystem::path& file, const Scenario& sc,
                     const PlanResult& plan) {
  json j;
  j["t_N"] = plan.grid.t_N;
  j["N"] = plan.grid.N;
  j["objective"] = plan.objective;
  j["epsilon_sum"] = plan.epsilon_sum();
  j["report"] = report_to_json(plan.report);
  j["config_hash"] = config_hash_hex(sc);
  j["scenario"] = json::parse(scenario_to_json(sc));
  write_text_atomic(file, j.dump(2) + "\n");
}

PlanMeta read_plan_meta(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ParseError("cannot open meta file " + file.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(file.string() + ": invalid JSON: " + std::string(e.what()));
  }
  PlanMeta m;
  m.t_N = j.value("t_N", 0.0);
  m.objective = j.value("objective", 0.0);
  if (j.contains("report")) m.report = report_from_json(j.at("report"));
  m.config_hash = j.value("config_hash", "");
  if (j.contains("scenario")) m.scenario = scenario_from_json(j.at("scenario").dump());
  return m;
}

void write_manifest(const std::filesystem::path& file, const RunManifest& m) {
  json j;
  j["command"] = m.command;
  j["config_hash"] = m.config_hash;
  j["scenario"] = json::parse(m.scenario_snapshot.empty() ? "{}" : m.scenario_snapshot);
  j["solver_status"] = m.solver_status;
  j["outputs"] = m.outputs;
  j["wall_time_s"] = m.wall_time_s;
  j["tool_version"] = m.tool_version;
  write_text_atomic(file, j.dump(2) + "\n");
}

PlanOutputs write_plan_outputs(const std::filesystem::path& outdir, const Scenario& sc,
                               const PlanResult& plan, const std::string& command,
                               double wall_time_s) {
  std::filesystem::create_directories(outdir);
  PlanOutputs files;
  files.trajectory_csv = outdir / "trajectory.csv";
  files.meta_json = outdir / "meta.json";
  files.manifest_json = outdir / "manifest.json";
  write_trajectory_csv(files.trajectory_csv, plan);
  write_plan_meta(files.meta_json, sc, plan);
  RunManifest m;
  m.command = command;
  m.config_hash = config_hash_hex(sc);
  m.scenario_snapshot = scenario_to_json(sc);
  m.solver_status = to_string(plan.report.status);
  m.outputs = {files.trajectory_csv.string(), files.meta_json.string()};
  m.wall_time_s = wall_time_s;
  write_manifest(files.manifest_json, m);
  return files;
}

void write_race_csv(const std::filesystem::path& file, const RaceResult& race) {
  std::string out;
  const int n_wp = static_cast<int>(race.epsilon.size());
  const bool del = race.mode == RaceDynamics::Del;
  out = del ? "t_s,x_m,y_m,z_m,phi_rad,theta_rad,psi_rad,alpha_rad,f1_N,f2_N,f3_N,f4_N,tau_servo_Nm"
            : "t_s,x_m,y_m,z_m,phi_rad,theta_rad,psi_rad,vx_mps,vy_mps,vz_mps,wx_radps,wy_radps,"
              "wz_radps,f1_N,f2_N,f3_N,f4_N";
  for (int j = 0; j < n_wp; ++j) {
    out += ",eps_wp" + std::to_string(j) + ",kappa_wp" + std::to_string(j) + ",nu_wp" +
           std::to_string(j);
  }
  out.push_back('\n');
  const int N = race.grid.N;
  const double dt = race.grid.dt();
  for (int k = 0; k <= N; ++k) {
    std::vector<double> row;
    row.push_back(k * dt);
    if (del) {
      for (int i = 0; i < 7; ++i) row.push_back(race.q_knots[static_cast<size_t>(k)][i]);
      for (int i = 0; i < 5; ++i) row.push_back(race.u_knots[static_cast<size_t>(k)][i]);
    } else {
      for (int i = 0; i < 12; ++i) row.push_back(race.x_knots[static_cast<size_t>(k)][i]);
      for (int i = 0; i < 4; ++i)
        row.push_back(k < N ? race.u4_knots[static_cast<size_t>(k)][i] : 0.0);
    }
    for (int j = 0; j < n_wp; ++j) {
      row.push_back(k < N ? race.epsilon[static_cast<size_t>(j)][static_cast<size_t>(k)] : 0.0);
      row.push_back(race.kappa[static_cast<size_t>(j)][static_cast<size_t>(k)]);
      row.push_back(k < N ? race.nu[static_cast<size_t>(j)][static_cast<size_t>(k)] : 0.0);
    }
    write_csv_row(&out, row);
  }
  write_text_atomic(file, out);
}

void write_sweep_csv(const std::filesystem::path& file, const std::vector<SweepRow>& rows) {
  std::string out = "waypoints,mode,t_N_s,wall_time_s,status\n";
  for (const auto& r : rows) {
    out += std::to_string(r.waypoints) + "," + r.mode + "," + fmt_double(r.t_N) + "," +
           fmt_double(r.wall_time_s) + "," + r.status + "\n";
  }
  write_text_atomic(file, out);
}

void write_tracking_csv(const std::filesystem::path& file, const ClosedLoopLog& log) {
  std::string out =
      "t_s,x_m,y_m,z_m,qw,qx,qy,qz,vx_mps,vy_mps,vz_mps,"
      "wx_cmd_radps,wy_cmd_radps,wz_cmd_radps,f_thrust_mps2,"
      "ref_x_m,ref_y_m,ref_z_m,ref_qw,ref_qx,ref_qy,ref_qz,ref_vx_mps,ref_vy_mps,ref_vz_mps,"
      "pos_error_m\n";
  for (size_t i = 0; i < log.t.size(); ++i) {
    std::vector<double> row;
    row.push_back(log.t[i]);
    for (int k = 0; k < 10; ++k) row.push_back(log.state[i][k]);
    for (int k = 0; k < 4; ++k) row.push_back(log.input[i][k]);
    for (int k = 0; k < 10; ++k) row.push_back(log.reference[i][k]);
    row.push_back(log.pos_error[i]);
    write_csv_row(&out, row);
  }
  write_text_atomic(file, out);
}

std::vector<std::filesystem::path> emit_figure_data(const std::string& figure,
                                                    const TrajectoryData& traj,
                                                    const Scenario& sc,
                                                    const std::filesystem::path& outdir) {
  if (!sc.is_handover())
    throw ValidationError("plot.figure", "figure data expects a handover scenario");
  const HandoverSpec& spec = sc.handover();
  const ModelParams& P = sc.params;
  std::filesystem::create_directories(outdir);
  std::vector<std::filesystem::path> written;
  const int knots = traj.knots();
  const double dt = knots > 1 ? traj.t[1] - traj.t[0] : 0.0;

  if (figure == "fig5") {
    // frame and arm projected to the x-z plane, plus the target
    std::string out =
        "t_s,x_m,z_m,theta_rad,mount_x_m,mount_z_m,ee_x_m,ee_z_m,target_x_m,target_z_m\n";
    for (int k = 0; k < knots; ++k) {
      const Vec7d& q = traj.q[static_cast<size_t>(k)];
      const Mat3<double> R = rotation_from_euler(slice<3, 3>(q));
      const Vec3d mount = slice<0, 3>(q) + R * Vec3d{0.0, 0.0, -P.l_offset};
      const Vec3d tgt = target_position(spec.target, traj.t[static_cast<size_t>(k)]);
      write_csv_row(&out,
                    std::array<double, 10>{traj.t[static_cast<size_t>(k)], q[0], q[2], q[4],
                                           mount[0], mount[2], traj.p_ee[static_cast<size_t>(k)][0],
                                           traj.p_ee[static_cast<size_t>(k)][2], tgt[0], tgt[2]});
    }
    const auto f = outdir / "fig5_poses_xz.csv";
    write_text_atomic(f, out);
    written.push_back(f);
  } else if (figure == "fig6" || figure == "fig7") {
    std::string out =
        "t_s,ee_x_m,ee_y_m,ee_z_m,ee_vx_mps,ee_vy_mps,ee_vz_mps,"
        "target_x_m,target_y_m,target_z_m,target_vx_mps,target_vy_mps,target_vz_mps,"
        "epsilon,contact\n";
    for (int k = 0; k < knots; ++k) {
      const double t = traj.t[static_cast<size_t>(k)];
      Vec3d ee_v{};
      if (k + 1 < knots && dt > 0) {
        const Vec7d qd =
            (traj.q[static_cast<size_t>(k + 1)] - traj.q[static_cast<size_t>(k)]) * (1.0 / dt);
        ee_v = end_effector_velocity(traj.q[static_cast<size_t>(k)], qd, P);
      }
      const Vec3d tp = target_position(spec.target, t);
      const Vec3d tv = target_velocity(spec.target, t);
      const double eps = traj.epsilon[static_cast<size_t>(k)];
      write_csv_row(&out, std::array<double, 15>{
                              t, traj.p_ee[static_cast<size_t>(k)][0],
                              traj.p_ee[static_cast<size_t>(k)][1],
                              traj.p_ee[static_cast<size_t>(k)][2], ee_v[0], ee_v[1], ee_v[2],
                              tp[0], tp[1], tp[2], tv[0], tv[1], tv[2], eps,
                              eps >= kEpsilonActive ? 1.0 : 0.0});
    }
    auto f = outdir / (figure + "_endeffector.csv");
    write_text_atomic(f, out);
    written.push_back(f);

    // contact windows: maximal runs of eps >= eps_active; the total column
    // carries the full progress mass sum(eps) = kappa_init
    double total = 0.0;
    for (int k = 0; k + 1 < knots; ++k) total += traj.epsilon[static_cast<size_t>(k)];
    std::string win = "t_start_s,t_end_s,knot_start,knot_end,eps_mass_window,eps_mass_total\n";
    int k = 0;
    while (k + 1 < knots) {
      if (traj.epsilon[static_cast<size_t>(k)] >= kEpsilonActive) {
        int e = k;
        double mass = 0.0;
        while (e + 1 < knots && traj.epsilon[static_cast<size_t>(e)] >= kEpsilonActive) {
          mass += traj.epsilon[static_cast<size_t>(e)];
          ++e;
        }
        write_csv_row(&win, std::array<double, 6>{traj.t[static_cast<size_t>(k)],
                                                  traj.t[static_cast<size_t>(e)],
                                                  static_cast<double>(k), static_cast<double>(e),
                                                  mass, total});
        k = e;
      } else {
        ++k;
      }
    }
    f = outdir / (figure + "_contact_intervals.csv");
    write_text_atomic(f, win);
    written.push_back(f);
  } else if (figure == "fig8") {
    std::string out = "t_s,psi_rad,target_dir_x,target_dir_y,cross_raw,cross_unit,epsilon\n";
    for (int k = 0; k < knots; ++k) {
      const double t = traj.t[static_cast<size_t>(k)];
      const Vec3d vt = target_velocity(spec.target, t);
      const double speed = std::hypot(vt[0], vt[1]);
      const Mat3<double> R = rotation_from_euler(slice<3, 3>(traj.q[static_cast<size_t>(k)]));
      const double cross_raw = std::abs(vt[0] * R(1, 0) - vt[1] * R(0, 0));
      const double cross_unit = speed > 1e-12 ? cross_raw / speed : 0.0;
      write_csv_row(&out, std::array<double, 7>{
                              t, traj.q[static_cast<size_t>(k)][5],
                              speed > 1e-12 ? vt[0] / speed : 0.0,
                              speed > 1e-12 ? vt[1] / speed : 0.0, cross_raw, cross_unit,
                              traj.epsilon[static_cast<size_t>(k)]});
    }
    const auto f = outdir / "fig8_heading.csv";
    write_text_atomic(f, out);
    written.push_back(f);
  } else {
    throw ValidationError("plot.figure", "unknown figure id '" + figure + "'");
  }
  return written;
}

}  // namespace dmcc
