#include "dmcc/planner.hpp"

#include <algorithm>
#include <cmath>

namespace dmcc {

namespace {

// Margin subtracted from contact limits so converged solutions satisfy the
// raw (unsmoothed, tolerance-free) limits, not limits-plus-solver-slack.
constexpr double kContactMargin = 3e-6;

template <typename T, int L>
Vec<T, L> take(std::span<const T> in, int off) {
  Vec<T, L> r;
  for (int i = 0; i < L; ++i) r[i] = in[off + i];
  return r;
}

std::vector<int> range_args(int base, int count) {
  std::vector<int> r(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) r[i] = base + i;
  return r;
}

void append_args(std::vector<int>* args, int base, int count) {
  for (int i = 0; i < count; ++i) args->push_back(base + i);
}

struct HandoverLayout {
  int N = 0;
  int u_base = 0, eps_base = 0, kap_base = 0, nu_base = 0;

  explicit HandoverLayout(int knots) : N(knots) {
    u_base = 1 + 7 * (N + 1);
    eps_base = u_base + 5 * (N + 1);
    kap_base = eps_base + N;
    nu_base = kap_base + (N + 1);
  }
  int t() const { return 0; }
  int q(int k, int i = 0) const { return 1 + 7 * k + i; }
  int u(int k, int i = 0) const { return u_base + 5 * k + i; }
  int eps(int k) const { return eps_base + k; }
  int kap(int k) const { return kap_base + k; }
  int nu(int k) const { return nu_base + k; }
  int total() const { return nu_base + N; }
};

void check_boundary_state(const char* field, const Vec7d& q, const ModelParams& P) {
  for (int i = 0; i < 7; ++i)
    if (q[i] < P.q_min[i] - 1e-12 || q[i] > P.q_max[i] + 1e-12)
      throw ValidationError(field, "boundary state outside configuration bounds");
}

}  // namespace

Vec5d HandoverSpec::effective_u_ref(const ModelParams& P) const {
  if (u_ref) return *u_ref;
  const double fh = P.hover_force_per_motor();
  return {fh, fh, fh, fh, 0.0};
}

void HandoverSpec::validate(const ModelParams& P) const {
  P.validate();
  if (N < 2) throw ValidationError("handover.N", "need at least two intervals");
  if (!(kappa_init > 0.0))
    throw ValidationError("handover.kappa_init", "must be positive; zero demands no contact");
  if (kappa_init > static_cast<double>(N))
    throw ValidationError("handover.kappa_init",
                          "exceeds knot count; sum of eps in [0,1] cannot reach it");
  if (nu_max < 0.0) throw ValidationError("handover.nu_max", "must be non-negative");
  if (c_limit_velocity < 0.0) throw ValidationError("handover.c_limit_velocity", "must be >= 0");
  if (c_limit_heading < 0.0) throw ValidationError("handover.c_limit_heading", "must be >= 0");
  if (!(t_min > 0.0) || !(t_max > t_min))
    throw ValidationError("handover.t_bounds", "need 0 < t_min < t_max");
  if (!target.time_parameterized())
    throw ValidationError("handover.target", "handover needs a time-parameterized track");
  check_boundary_state("handover.q_start", q_start, P);
  check_boundary_state("handover.q_end", q_end, P);
}

std::vector<int> PlanResult::active_knots() const {
  std::vector<int> r;
  for (size_t k = 0; k < epsilon.size(); ++k)
    if (epsilon[k] >= kEpsilonActive) r.push_back(static_cast<int>(k));
  return r;
}

double PlanResult::epsilon_sum() const {
  double s = 0.0;
  for (double e : epsilon) s += e;
  return s;
}

Eigen::VectorXd initial_guess(const HandoverSpec& spec, const ModelParams& P) {
  const HandoverLayout L(spec.N);
  Eigen::VectorXd x(L.total());
  x[L.t()] = 0.5 * (spec.t_min + spec.t_max);
  const Vec5d uref = spec.effective_u_ref(P);
  for (int k = 0; k <= spec.N; ++k) {
    const double a = static_cast<double>(k) / spec.N;
    for (int i = 0; i < 7; ++i)
      x[L.q(k, i)] = (1.0 - a) * spec.q_start[i] + a * spec.q_end[i];
    for (int i = 0; i < 5; ++i) x[L.u(k, i)] = uref[i];
    x[L.kap(k)] = spec.kappa_init * (1.0 - a);
  }
  for (int k = 0; k < spec.N; ++k) {
    x[L.eps(k)] = spec.kappa_init / spec.N;
    x[L.nu(k)] = 0.5 * spec.nu_max;
  }
  return x;
}

NlpProblem build_handover_nlp(const HandoverSpec& spec, const ModelParams& P) {
  spec.validate(P);
  const int N = spec.N;
  const HandoverLayout L(N);

  NlpProblem prob;
  prob.add_variable(spec.t_min, spec.t_max, 0.0);
  for (int k = 0; k <= N; ++k)
    for (int i = 0; i < 7; ++i) prob.add_variable(P.q_min[i], P.q_max[i], 0.0);
  for (int k = 0; k <= N; ++k)
    for (int i = 0; i < 5; ++i) prob.add_variable(P.u_min[i], P.u_max[i], 0.0);
  prob.add_variables(N, 0.0, 1.0, 0.0);                       // eps
  prob.add_variables(N + 1, 0.0, spec.kappa_init, 0.0);       // kappa
  const double nu_ub = std::max(0.0, spec.nu_max - kContactMargin);
  prob.add_variables(N, 0.0, nu_ub, 0.0);                     // nu

  // pinned boundary knots and progress endpoints
  for (int i = 0; i < 7; ++i) {
    prob.lb[L.q(0, i)] = prob.ub[L.q(0, i)] = spec.q_start[i];
    prob.lb[L.q(N, i)] = prob.ub[L.q(N, i)] = spec.q_end[i];
  }
  prob.lb[L.kap(0)] = prob.ub[L.kap(0)] = spec.kappa_init;
  prob.lb[L.kap(N)] = prob.ub[L.kap(N)] = 0.0;

  // objective: travel time plus smoothed control-deviation penalty
  prob.add_objective_term({L.t()}, [](auto in) { return in[0]; });
  const Vec5d uref = spec.effective_u_ref(P);
  for (int k = 0; k <= N; ++k) {
    std::vector<int> args{L.t()};
    append_args(&args, L.u(k), 5);
    prob.add_objective_term(args, [uref, c = spec.c_u, N](auto in) {
      using T = std::remove_cvref_t<decltype(in[0])>;
      Vec5<T> du;
      for (int i = 0; i < 5; ++i) du[i] = in[1 + i] - uref[i];
      return in[0] * (c / N) * smooth_norm(du, kSmoothingDelta);
    });
  }

  // forced discrete Euler-Lagrange equations on interior knots
  for (int k = 1; k < N; ++k) {
    std::vector<int> args{L.t()};
    append_args(&args, L.q(k - 1), 7);
    append_args(&args, L.q(k), 7);
    append_args(&args, L.q(k + 1), 7);
    append_args(&args, L.u(k - 1), 5);
    append_args(&args, L.u(k), 5);
    append_args(&args, L.u(k + 1), 5);
    prob.add_block("del_" + std::to_string(k), BlockKind::Equality, args, 7, false,
                   [P, N](auto in, auto out) {
                     using T = std::remove_cvref_t<decltype(in[0])>;
                     const T dt = in[0] * (1.0 / N);
                     const auto qm = take<T, 7>(in, 1);
                     const auto qk = take<T, 7>(in, 8);
                     const auto qp = take<T, 7>(in, 15);
                     const auto um = take<T, 5>(in, 22);
                     const auto uk = take<T, 5>(in, 27);
                     const auto up = take<T, 5>(in, 32);
                     const Vec7<T> r = del_residual(qm, qk, qp, um, uk, up, dt, P);
                     for (int i = 0; i < 7; ++i) out[i] = r[i];
                   });
  }

  // discrete Legendre boundary conditions
  {
    std::vector<int> args{L.t()};
    append_args(&args, L.q(0), 7);
    append_args(&args, L.q(1), 7);
    append_args(&args, L.u(0), 5);
    append_args(&args, L.u(1), 5);
    prob.add_block("boundary_initial", BlockKind::Equality, args, 7, false,
                   [P, N, qd = spec.qdot_start](auto in, auto out) {
                     using T = std::remove_cvref_t<decltype(in[0])>;
                     const T dt = in[0] * (1.0 / N);
                     const Vec7<T> r = boundary_residual_initial(
                         take<T, 7>(in, 1), take<T, 7>(in, 8), qd, take<T, 5>(in, 15),
                         take<T, 5>(in, 20), dt, P);
                     for (int i = 0; i < 7; ++i) out[i] = r[i];
                   });
    args = {L.t()};
    append_args(&args, L.q(N - 1), 7);
    append_args(&args, L.q(N), 7);
    append_args(&args, L.u(N - 1), 5);
    append_args(&args, L.u(N), 5);
    prob.add_block("boundary_final", BlockKind::Equality, args, 7, false,
                   [P, N, qd = spec.qdot_end](auto in, auto out) {
                     using T = std::remove_cvref_t<decltype(in[0])>;
                     const T dt = in[0] * (1.0 / N);
                     const Vec7<T> r = boundary_residual_final(
                         take<T, 7>(in, 1), take<T, 7>(in, 8), qd, take<T, 5>(in, 15),
                         take<T, 5>(in, 20), dt, P);
                     for (int i = 0; i < 7; ++i) out[i] = r[i];
                   });
  }

  // average-velocity box as linear rows: qdot_min*dt <= q_{k+1}-q_k <= qdot_max*dt
  for (int k = 0; k < N; ++k) {
    std::vector<int> args{L.t()};
    append_args(&args, L.q(k), 7);
    append_args(&args, L.q(k + 1), 7);
    prob.add_block("vbox_" + std::to_string(k), BlockKind::Inequality, args, 14, true,
                   [N, lo = P.qdot_min, hi = P.qdot_max](auto in, auto out) {
                     using T = std::remove_cvref_t<decltype(in[0])>;
                     const T dt = in[0] * (1.0 / N);
                     for (int i = 0; i < 7; ++i) {
                       const T diff = in[8 + i] - in[1 + i];
                       out[i] = diff - hi[i] * dt;
                       out[7 + i] = lo[i] * dt - diff;
                     }
                   });
  }

  // progress chain eps_k = kappa_k - kappa_{k+1}
  for (int k = 0; k < N; ++k) {
    prob.add_block("progress_" + std::to_string(k), BlockKind::Equality,
                   {L.eps(k), L.kap(k), L.kap(k + 1)}, 1, true, [](auto in, auto out) {
                     out[0] = in[0] - in[1] + in[2];
                   });
  }

  // relaxed contact equality, eps-gated
  for (int k = 0; k < N; ++k) {
    std::vector<int> args{L.t()};
    append_args(&args, L.q(k), 7);
    args.push_back(L.eps(k));
    args.push_back(L.nu(k));
    prob.add_block("contact_" + std::to_string(k), BlockKind::Equality, args, 1, false,
                   [P, N, k, track = spec.target](auto in, auto out) {
                     using T = std::remove_cvref_t<decltype(in[0])>;
                     const T tk = in[0] * (static_cast<double>(k) / N);
                     const Vec3<T> d =
                         end_effector_position(take<T, 7>(in, 1), P) - target_position(track, tk);
                     out[0] = in[8] * (smooth_norm(d, kSmoothingDelta) - in[9]);
                   });
  }

  // eps-gated relative-velocity inequality
  const double c_vel = std::max(0.0, spec.c_limit_velocity - kContactMargin);
  for (int k = 0; k < N; ++k) {
    std::vector<int> args{L.t()};
    append_args(&args, L.q(k), 7);
    append_args(&args, L.q(k + 1), 7);
    args.push_back(L.eps(k));
    prob.add_block("velocity_" + std::to_string(k), BlockKind::Inequality, args, 1, false,
                   [P, N, k, c_vel, track = spec.target](auto in, auto out) {
                     using T = std::remove_cvref_t<decltype(in[0])>;
                     const T dt = in[0] * (1.0 / N);
                     const T tk = in[0] * (static_cast<double>(k) / N);
                     const auto qk = take<T, 7>(in, 1);
                     const Vec7<T> qd = (take<T, 7>(in, 8) - qk) * (1.0 / dt);
                     const Vec3<T> dv =
                         end_effector_velocity(qk, qd, P) - target_velocity(track, tk);
                     out[0] = in[15] * smooth_norm(dv, kSmoothingDelta) - c_vel;
                   });
  }

  // eps-gated heading alignment; skipped entirely for non-moving targets
  if (target_max_speed(spec.target) >= 1e-6) {
    const double c_head = std::max(0.0, spec.c_limit_heading - kContactMargin);
    for (int k = 0; k < N; ++k) {
      std::vector<int> args{L.t()};
      append_args(&args, L.q(k), 7);
      args.push_back(L.eps(k));
      prob.add_block("heading_" + std::to_string(k), BlockKind::Inequality, args, 2, false,
                     [N, k, c_head, track = spec.target](auto in, auto out) {
                       using T = std::remove_cvref_t<decltype(in[0])>;
                       using std::sqrt;
                       const T tk = in[0] * (static_cast<double>(k) / N);
                       const Vec3<T> vt = target_velocity(track, tk);
                       const T inv_speed = 1.0 / sqrt(vt[0] * vt[0] + vt[1] * vt[1]);
                       const Mat3<T> R = rotation_from_euler(take<T, 3>(in, 4));
                       // planar cross product of the unit target direction
                       // with the body x-axis projection
                       const T s =
                           in[8] * ((vt[0] * R(1, 0) - vt[1] * R(0, 0)) * inv_speed);
                       out[0] = s - c_head;
                       out[1] = -s - c_head;
                     });
    }
  }

  const Eigen::VectorXd guess = initial_guess(spec, P);
  for (int i = 0; i < prob.n_vars; ++i) prob.x0[i] = guess[i];
  return prob;
}

PlanResult plan_handover(const HandoverSpec& spec, const ModelParams& P,
                         const SolverOptions& options) {
  NlpProblem prob = build_handover_nlp(spec, P);
  SolveResult res = solve(prob, options);

  const HandoverLayout L(spec.N);
  PlanResult plan;
  plan.report = res.report;
  plan.objective = res.report.objective;
  plan.grid = {spec.N, res.x[L.t()]};
  plan.path.q_knots.resize(spec.N + 1);
  plan.path.u_knots.resize(spec.N + 1);
  plan.kappa.resize(spec.N + 1);
  plan.epsilon.resize(spec.N);
  plan.nu.resize(spec.N);
  plan.p_ee.resize(spec.N + 1);
  for (int k = 0; k <= spec.N; ++k) {
    for (int i = 0; i < 7; ++i) plan.path.q_knots[k][i] = res.x[L.q(k, i)];
    for (int i = 0; i < 5; ++i) plan.path.u_knots[k][i] = res.x[L.u(k, i)];
    plan.kappa[k] = res.x[L.kap(k)];
    plan.p_ee[k] = end_effector_position(plan.path.q_knots[k], P);
  }
  for (int k = 0; k < spec.N; ++k) {
    // re-projected onto the chain identity; removes solver-tolerance dust so
    // telescoping holds to rounding
    plan.epsilon[k] = plan.kappa[k] - plan.kappa[k + 1];
    plan.nu[k] = res.x[L.nu(k)];
  }
  return plan;
}

// ---------------------------------------------------------------------------
// racing
// ---------------------------------------------------------------------------

void RaceSpec::validate(const ModelParams& P) const {
  P.validate();
  if (knot_count() < 2) throw ValidationError("race.N", "need at least two intervals");
  if (pass_tolerance <= 0.0) throw ValidationError("race.pass_tolerance", "must be positive");
  if (!(t_min > 0.0) || !(t_max > t_min))
    throw ValidationError("race.t_bounds", "need 0 < t_min < t_max");
  check_boundary_state("race.q_start", q_start, P);
  check_boundary_state("race.q_end", q_end, P);
  for (const auto& wp : waypoints)
    for (int i = 0; i < 3; ++i)
      if (wp[i] < P.q_min[i] || wp[i] > P.q_max[i])
        throw ValidationError("race.waypoints", "waypoint outside position bounds");
}

Vec3d RaceResult::position(int k) const {
  if (mode == RaceDynamics::Del) return slice<0, 3>(q_knots[static_cast<size_t>(k)]);
  return slice<0, 3>(x_knots[static_cast<size_t>(k)]);
}

namespace {

struct RaceLayout {
  int N = 0, n_wp = 0, state_dim = 0, input_dim = 0;
  int u_base = 0, chain_base = 0;

  RaceLayout(int knots, int waypoints, RaceDynamics mode) : N(knots), n_wp(waypoints) {
    state_dim = mode == RaceDynamics::Del ? 7 : 12;
    input_dim = mode == RaceDynamics::Del ? 5 : 4;
    const int n_u = mode == RaceDynamics::Del ? N + 1 : N;
    u_base = 1 + state_dim * (N + 1);
    chain_base = u_base + input_dim * n_u;
  }
  int t() const { return 0; }
  int state(int k, int i = 0) const { return 1 + state_dim * k + i; }
  int u(int k, int i = 0) const { return u_base + input_dim * k + i; }
  int chain_stride() const { return N + (N + 1) + N; }
  int eps(int j, int k) const { return chain_base + j * chain_stride() + k; }
  int kap(int j, int k) const { return chain_base + j * chain_stride() + N + k; }
  int nu(int j, int k) const { return chain_base + j * chain_stride() + 2 * N + 1 + k; }
  int total() const { return chain_base + n_wp * chain_stride(); }
};

void add_race_chains(NlpProblem* prob, const RaceLayout& L, const RaceSpec& spec) {
  for (int j = 0; j < L.n_wp; ++j) {
    for (int k = 0; k < L.N; ++k) {
      prob->add_block("progress_" + std::to_string(j) + "_" + std::to_string(k),
                      BlockKind::Equality, {L.eps(j, k), L.kap(j, k), L.kap(j, k + 1)}, 1, true,
                      [](auto in, auto out) { out[0] = in[0] - in[1] + in[2]; });
      std::vector<int> args = range_args(L.state(k), 3);
      args.push_back(L.eps(j, k));
      args.push_back(L.nu(j, k));
      prob->add_block("gate_" + std::to_string(j) + "_" + std::to_string(k),
                      BlockKind::Equality, args, 1, false,
                      [wp = spec.waypoints[static_cast<size_t>(j)]](auto in, auto out) {
                        using T = std::remove_cvref_t<decltype(in[0])>;
                        Vec3<T> d{in[0] - wp[0], in[1] - wp[1], in[2] - wp[2]};
                        out[0] = in[3] * (smooth_norm(d, kSmoothingDelta) - in[4]);
                      });
    }
    // sequential ordering: chain j+1's cumulative progress never exceeds
    // chain j's, i.e. kappa_j <= kappa_{j+1} pointwise
    if (j + 1 < L.n_wp) {
      for (int k = 1; k < L.N; ++k) {
        prob->add_block("order_" + std::to_string(j) + "_" + std::to_string(k),
                        BlockKind::Inequality, {L.kap(j, k), L.kap(j + 1, k)}, 1, true,
                        [](auto in, auto out) { out[0] = in[0] - in[1]; });
      }
    }
  }
}

void race_chain_guess(Eigen::VectorXd* x, const RaceLayout& L, const RaceSpec& spec) {
  for (int j = 0; j < L.n_wp; ++j) {
    for (int k = 0; k <= L.N; ++k)
      (*x)[L.kap(j, k)] = 1.0 - static_cast<double>(k) / L.N;
    for (int k = 0; k < L.N; ++k) {
      (*x)[L.eps(j, k)] = 1.0 / L.N;
      (*x)[L.nu(j, k)] = 0.5 * spec.pass_tolerance;
    }
  }
}

// piecewise-linear position path through the waypoints at even fractions
Vec3d race_path_point(const RaceSpec& spec, double a) {
  std::vector<Vec3d> pts;
  pts.push_back(slice<0, 3>(spec.q_start));
  for (const auto& w : spec.waypoints) pts.push_back(w);
  pts.push_back(slice<0, 3>(spec.q_end));
  const int segs = static_cast<int>(pts.size()) - 1;
  const double s = std::clamp(a, 0.0, 1.0) * segs;
  const int i = std::min(static_cast<int>(s), segs - 1);
  const double f = s - i;
  return pts[static_cast<size_t>(i)] * (1.0 - f) + pts[static_cast<size_t>(i + 1)] * f;
}

}  // namespace

NlpProblem build_race_nlp(const RaceSpec& spec, const ModelParams& P) {
  spec.validate(P);
  const int N = spec.knot_count();
  const int n_wp = static_cast<int>(spec.waypoints.size());
  const RaceLayout L(N, n_wp, spec.mode);
  const double fh = P.hover_force_per_motor();

  NlpProblem prob;
  prob.add_variable(spec.t_min, spec.t_max, 0.5 * (spec.t_min + spec.t_max));

  if (spec.mode == RaceDynamics::Del) {
    for (int k = 0; k <= N; ++k)
      for (int i = 0; i < 7; ++i) prob.add_variable(P.q_min[i], P.q_max[i], 0.0);
    for (int k = 0; k <= N; ++k)
      for (int i = 0; i < 5; ++i) prob.add_variable(P.u_min[i], P.u_max[i], fh * (i < 4));
  } else {
    for (int k = 0; k <= N; ++k) {
      for (int i = 0; i < 3; ++i) prob.add_variable(P.q_min[i], P.q_max[i], 0.0);    // p
      for (int i = 3; i < 6; ++i) prob.add_variable(P.q_min[i], P.q_max[i], 0.0);    // xi
      for (int i = 0; i < 3; ++i) prob.add_variable(P.qdot_min[i], P.qdot_max[i], 0.0);  // v
      for (int i = 3; i < 6; ++i)
        prob.add_variable(P.qdot_min[i], P.qdot_max[i], 0.0);  // omega_B
    }
    for (int k = 0; k < N; ++k)
      for (int i = 0; i < 4; ++i) prob.add_variable(P.u_min[i], P.u_max[i], fh);
  }
  for (int j = 0; j < n_wp; ++j) {
    prob.add_variables(N, 0.0, 1.0, 0.0);
    prob.add_variables(N + 1, 0.0, 1.0, 0.0);
    prob.add_variables(N, 0.0, spec.pass_tolerance, 0.0);
    prob.lb[L.kap(j, 0)] = prob.ub[L.kap(j, 0)] = 1.0;  // kappa_init = 1 per waypoint
    prob.lb[L.kap(j, N)] = prob.ub[L.kap(j, N)] = 0.0;
  }

  // boundary states pinned
  if (spec.mode == RaceDynamics::Del) {
    for (int i = 0; i < 7; ++i) {
      prob.lb[L.state(0, i)] = prob.ub[L.state(0, i)] = spec.q_start[i];
      prob.lb[L.state(N, i)] = prob.ub[L.state(N, i)] = spec.q_end[i];
    }
  } else {
    for (int i = 0; i < 6; ++i) {
      prob.lb[L.state(0, i)] = prob.ub[L.state(0, i)] = spec.q_start[i];
      prob.lb[L.state(N, i)] = prob.ub[L.state(N, i)] = spec.q_end[i];
    }
    for (int i = 6; i < 12; ++i) {
      prob.lb[L.state(0, i)] = prob.ub[L.state(0, i)] = 0.0;
      prob.lb[L.state(N, i)] = prob.ub[L.state(N, i)] = 0.0;
    }
  }

  // objective
  prob.add_objective_term({L.t()}, [](auto in) { return in[0]; });
  const int n_u = spec.mode == RaceDynamics::Del ? N + 1 : N;
  for (int k = 0; k < n_u; ++k) {
    std::vector<int> args{L.t()};
    append_args(&args, L.u(k), L.input_dim);
    if (spec.mode == RaceDynamics::Del) {
      prob.add_objective_term(args, [fh, c = spec.c_u, N](auto in) {
        using T = std::remove_cvref_t<decltype(in[0])>;
        Vec5<T> du;
        for (int i = 0; i < 4; ++i) du[i] = in[1 + i] - fh;
        du[4] = in[5];
        return in[0] * (c / N) * smooth_norm(du, kSmoothingDelta);
      });
    } else {
      prob.add_objective_term(args, [fh, c = spec.c_u, N](auto in) {
        using T = std::remove_cvref_t<decltype(in[0])>;
        Vec4<T> du;
        for (int i = 0; i < 4; ++i) du[i] = in[1 + i] - fh;
        return in[0] * (c / N) * smooth_norm(du, kSmoothingDelta);
      });
    }
  }

  // dynamics
  if (spec.mode == RaceDynamics::Del) {
    for (int k = 1; k < N; ++k) {
      std::vector<int> args{L.t()};
      append_args(&args, L.state(k - 1), 7);
      append_args(&args, L.state(k), 7);
      append_args(&args, L.state(k + 1), 7);
      append_args(&args, L.u(k - 1), 5);
      append_args(&args, L.u(k), 5);
      append_args(&args, L.u(k + 1), 5);
      prob.add_block("del_" + std::to_string(k), BlockKind::Equality, args, 7, false,
                     [P, N](auto in, auto out) {
                       using T = std::remove_cvref_t<decltype(in[0])>;
                       const T dt = in[0] * (1.0 / N);
                       const Vec7<T> r =
                           del_residual(take<T, 7>(in, 1), take<T, 7>(in, 8), take<T, 7>(in, 15),
                                        take<T, 5>(in, 22), take<T, 5>(in, 27), take<T, 5>(in, 32),
                                        dt, P);
                       for (int i = 0; i < 7; ++i) out[i] = r[i];
                     });
    }
    const Vec7d qd_zero{};
    std::vector<int> args{L.t()};
    append_args(&args, L.state(0), 7);
    append_args(&args, L.state(1), 7);
    append_args(&args, L.u(0), 5);
    append_args(&args, L.u(1), 5);
    prob.add_block("boundary_initial", BlockKind::Equality, args, 7, false,
                   [P, N, qd_zero](auto in, auto out) {
                     using T = std::remove_cvref_t<decltype(in[0])>;
                     const T dt = in[0] * (1.0 / N);
                     const Vec7<T> r = boundary_residual_initial(
                         take<T, 7>(in, 1), take<T, 7>(in, 8), qd_zero, take<T, 5>(in, 15),
                         take<T, 5>(in, 20), dt, P);
                     for (int i = 0; i < 7; ++i) out[i] = r[i];
                   });
    args = {L.t()};
    append_args(&args, L.state(N - 1), 7);
    append_args(&args, L.state(N), 7);
    append_args(&args, L.u(N - 1), 5);
    append_args(&args, L.u(N), 5);
    prob.add_block("boundary_final", BlockKind::Equality, args, 7, false,
                   [P, N, qd_zero](auto in, auto out) {
                     using T = std::remove_cvref_t<decltype(in[0])>;
                     const T dt = in[0] * (1.0 / N);
                     const Vec7<T> r = boundary_residual_final(
                         take<T, 7>(in, 1), take<T, 7>(in, 8), qd_zero, take<T, 5>(in, 15),
                         take<T, 5>(in, 20), dt, P);
                     for (int i = 0; i < 7; ++i) out[i] = r[i];
                   });
    for (int k = 0; k < N; ++k) {
      std::vector<int> vb{L.t()};
      append_args(&vb, L.state(k), 7);
      append_args(&vb, L.state(k + 1), 7);
      prob.add_block("vbox_" + std::to_string(k), BlockKind::Inequality, vb, 14, true,
                     [N, lo = P.qdot_min, hi = P.qdot_max](auto in, auto out) {
                       using T = std::remove_cvref_t<decltype(in[0])>;
                       const T dt = in[0] * (1.0 / N);
                       for (int i = 0; i < 7; ++i) {
                         const T diff = in[8 + i] - in[1 + i];
                         out[i] = diff - hi[i] * dt;
                         out[7 + i] = lo[i] * dt - diff;
                       }
                     });
    }
  } else {
    for (int k = 0; k < N; ++k) {
      std::vector<int> args{L.t()};
      append_args(&args, L.state(k), 12);
      append_args(&args, L.state(k + 1), 12);
      append_args(&args, L.u(k), 4);
      prob.add_block("rk4_" + std::to_string(k), BlockKind::Equality, args, 12, false,
                     [P, N](auto in, auto out) {
                       using T = std::remove_cvref_t<decltype(in[0])>;
                       const T dt = in[0] * (1.0 / N);
                       const auto x = take<T, 12>(in, 1);
                       const auto x1 = take<T, 12>(in, 13);
                       const auto u = take<T, 4>(in, 25);
                       const Vec<T, 12> k1 = quad_ode(x, u, P);
                       const Vec<T, 12> k2 = quad_ode(x + k1 * (0.5 * dt), u, P);
                       const Vec<T, 12> k3 = quad_ode(x + k2 * (0.5 * dt), u, P);
                       const Vec<T, 12> k4 = quad_ode(x + k3 * dt, u, P);
                       const Vec<T, 12> r =
                           x1 - x - (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
                       for (int i = 0; i < 12; ++i) out[i] = r[i];
                     });
    }
  }

  add_race_chains(&prob, L, spec);

  // initial guess: piecewise-linear positions through the waypoints
  Eigen::VectorXd x0 = Eigen::Map<Eigen::VectorXd>(prob.x0.data(), prob.n_vars);
  for (int k = 0; k <= N; ++k) {
    const Vec3d pt = race_path_point(spec, static_cast<double>(k) / N);
    for (int i = 0; i < 3; ++i) x0[L.state(k, i)] = pt[i];
  }
  race_chain_guess(&x0, L, spec);
  for (int i = 0; i < prob.n_vars; ++i) prob.x0[i] = x0[i];
  return prob;
}

RaceResult plan_race(const RaceSpec& spec, const ModelParams& P, const SolverOptions& options) {
  NlpProblem prob = build_race_nlp(spec, P);
  SolveResult res = solve(prob, options);

  const int N = spec.knot_count();
  const int n_wp = static_cast<int>(spec.waypoints.size());
  const RaceLayout L(N, n_wp, spec.mode);

  RaceResult out;
  out.mode = spec.mode;
  out.report = res.report;
  out.grid = {N, res.x[L.t()]};
  if (spec.mode == RaceDynamics::Del) {
    out.q_knots.resize(N + 1);
    out.u_knots.resize(N + 1);
    for (int k = 0; k <= N; ++k) {
      for (int i = 0; i < 7; ++i) out.q_knots[k][i] = res.x[L.state(k, i)];
      for (int i = 0; i < 5; ++i) out.u_knots[k][i] = res.x[L.u(k, i)];
    }
  } else {
    out.x_knots.resize(N + 1);
    out.u4_knots.resize(N);
    for (int k = 0; k <= N; ++k)
      for (int i = 0; i < 12; ++i) out.x_knots[k][i] = res.x[L.state(k, i)];
    for (int k = 0; k < N; ++k)
      for (int i = 0; i < 4; ++i) out.u4_knots[k][i] = res.x[L.u(k, i)];
  }
  out.epsilon.resize(n_wp);
  out.kappa.resize(n_wp);
  out.nu.resize(n_wp);
  for (int j = 0; j < n_wp; ++j) {
    out.kappa[j].resize(N + 1);
    out.epsilon[j].resize(N);
    out.nu[j].resize(N);
    for (int k = 0; k <= N; ++k) out.kappa[j][k] = res.x[L.kap(j, k)];
    for (int k = 0; k < N; ++k) {
      out.epsilon[j][k] = out.kappa[j][k] - out.kappa[j][k + 1];
      out.nu[j][k] = res.x[L.nu(j, k)];
    }
  }
  return out;
}

std::vector<PlanCheck> verify_plan(const PlanResult& plan, const HandoverSpec& spec,
                                   const ModelParams& P, double feas_tol) {
  std::vector<PlanCheck> checks;
  auto add = [&](const std::string& name, double value, double limit) {
    checks.push_back({name, value <= limit, value, limit});
  };

  const int N = spec.N;
  double eps_err = std::abs(plan.epsilon_sum() - spec.kappa_init);
  add("epsilon_telescoping", eps_err, feas_tol);
  add("kappa_start", std::abs(plan.kappa.front() - spec.kappa_init), feas_tol);
  add("kappa_end", std::abs(plan.kappa.back()), feas_tol);

  double chain = 0.0, eps_box = 0.0, nu_box = 0.0, q_box = 0.0, u_box = 0.0, qd_box = 0.0;
  for (int k = 0; k < N; ++k) {
    chain = std::max(chain, std::abs(plan.epsilon[k] - (plan.kappa[k] - plan.kappa[k + 1])));
    eps_box = std::max({eps_box, -plan.epsilon[k], plan.epsilon[k] - 1.0});
    nu_box = std::max({nu_box, -plan.nu[k], plan.nu[k] - spec.nu_max});
  }
  const double dt = plan.grid.dt();
  for (int k = 0; k <= N; ++k) {
    for (int i = 0; i < 7; ++i) {
      q_box = std::max({q_box, P.q_min[i] - plan.path.q_knots[k][i],
                        plan.path.q_knots[k][i] - P.q_max[i]});
    }
    for (int i = 0; i < 5; ++i)
      u_box = std::max({u_box, P.u_min[i] - plan.path.u_knots[k][i],
                        plan.path.u_knots[k][i] - P.u_max[i]});
    if (k < N)
      for (int i = 0; i < 7; ++i) {
        const double qd = (plan.path.q_knots[k + 1][i] - plan.path.q_knots[k][i]) / dt;
        qd_box = std::max({qd_box, P.qdot_min[i] - qd, qd - P.qdot_max[i]});
      }
  }
  add("epsilon_chain_identity", chain, feas_tol);
  add("epsilon_bounds", eps_box, feas_tol);
  add("nu_bounds", nu_box, feas_tol);
  add("q_bounds", q_box, feas_tol);
  add("u_bounds", u_box, feas_tol);
  add("qdot_bounds", qd_box, feas_tol);

  const bool moving = target_max_speed(spec.target) >= 1e-6;
  double contact = 0.0, vel = 0.0, head = 0.0;
  int n_active = 0;
  for (int k = 0; k < N; ++k) {
    if (plan.epsilon[k] < kEpsilonActive) continue;
    ++n_active;
    const double tk = k * dt;
    const Vec3d pt = target_position(spec.target, tk);
    const Vec3d diff = plan.p_ee[k] - pt;
    contact = std::max(contact, std::sqrt(dot(diff, diff)) - spec.nu_max);
    const Vec7d qd = (plan.path.q_knots[k + 1] - plan.path.q_knots[k]) * (1.0 / dt);
    const Vec3d dv =
        end_effector_velocity(plan.path.q_knots[k], qd, P) - target_velocity(spec.target, tk);
    vel = std::max(vel, plan.epsilon[k] * std::sqrt(dot(dv, dv)) - spec.c_limit_velocity);
    if (moving) {
      const Vec3d vt = target_velocity(spec.target, tk);
      const double speed = std::hypot(vt[0], vt[1]);
      const Mat3<double> R = rotation_from_euler(slice<3, 3>(plan.path.q_knots[k]));
      const double cross = (vt[0] * R(1, 0) - vt[1] * R(0, 0)) / speed;
      head = std::max(head, plan.epsilon[k] * std::abs(cross) - spec.c_limit_heading);
    }
  }
  add("contact_distance", contact, 0.0);
  add("contact_velocity", vel, 0.0);
  if (moving) add("contact_heading", head, 0.0);
  checks.push_back({"active_knot_count",
                    n_active >= static_cast<int>(std::ceil(spec.kappa_init)),
                    static_cast<double>(n_active), std::ceil(spec.kappa_init)});
  return checks;
}

}  // namespace dmcc
