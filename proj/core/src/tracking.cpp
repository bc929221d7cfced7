#include "dmcc/tracking.hpp"

#include <algorithm>
#include <cmath>

namespace dmcc {

void GprModel::fit(const std::vector<std::array<double, 5>>& observations,
                   const std::vector<Vec3d>& residuals_body, const GprConfig& config) {
  if (observations.size() != residuals_body.size())
    throw ValidationError("gpr.fit", "observation/residual count mismatch");
  config_ = config;
  const int total = static_cast<int>(observations.size());
  if (total == 0) {
    trained_ = false;
    return;
  }
  const int stride = std::max(1, (total + config.max_points - 1) / config.max_points);
  std::vector<int> keep;
  for (int i = 0; i < total; i += stride) keep.push_back(i);
  const int n = static_cast<int>(keep.size());

  for (int axis = 0; axis < 3; ++axis) {
    Axis& A = axes_[axis];
    A.ls = {config.length_scales[0], config.length_scales[1],
            config.length_scales[2 + axis]};
    A.inputs.resize(n, 3);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      const auto& z = observations[static_cast<size_t>(keep[i])];
      A.inputs(i, 0) = z[0];
      A.inputs(i, 1) = z[1];
      A.inputs(i, 2) = z[static_cast<size_t>(2 + axis)];
      y[i] = residuals_body[static_cast<size_t>(keep[i])][axis];
    }
    Eigen::MatrixXd K(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j <= i; ++j) {
        double e = 0.0;
        for (int d = 0; d < 3; ++d) {
          const double diff = A.inputs(i, d) - A.inputs(j, d);
          e += diff * diff * 0.5 / (A.ls[d] * A.ls[d]);
        }
        K(i, j) = K(j, i) = config.signal_var * std::exp(-e);
      }
      K(i, i) += config.noise_var;
    }
    const Eigen::LLT<Eigen::MatrixXd> llt(K);
    if (llt.info() != Eigen::Success)
      throw ValidationError("gpr.fit", "kernel matrix not positive definite");
    A.alpha = llt.solve(y);
  }
  trained_ = true;
}

namespace {

Vec4d aligned_quat(const Vec4d& ref, const Vec4d& against) {
  double d = 0.0;
  for (int i = 0; i < 4; ++i) d += ref[i] * against[i];
  return d < 0.0 ? Vec4d{-ref[0], -ref[1], -ref[2], -ref[3]} : ref;
}

}  // namespace

NmpcResult nmpc_step(const TrackState& x_now, std::span<const ReferencePoint> window,
                     const NmpcConfig& config, const GprModel* model, const TrackInput& previous,
                     Eigen::VectorXd* warm_start) {
  const int Nc = config.horizon;
  NmpcResult result;
  result.input = previous;
  if (static_cast<int>(window.size()) < Nc + 1) {
    result.degraded = true;
    return result;
  }

  // sign-align reference quaternions against the current attitude
  std::vector<Vec<double, 10>> ref(static_cast<size_t>(Nc + 1));
  std::vector<Vec4d> uref(static_cast<size_t>(Nc + 1));
  std::vector<double> alpha_ff(static_cast<size_t>(Nc + 1));
  const Vec4d q_now = x_now.q.vec();
  for (int k = 0; k <= Nc; ++k) {
    ref[k] = window[k].x;
    const Vec4d qa = aligned_quat(slice<3, 4>(window[k].x), q_now);
    for (int i = 0; i < 4; ++i) ref[k][3 + i] = qa[i];
    uref[k] = window[k].u;
    alpha_ff[k] = window[k].alpha;
  }
  const Vec<double, 10> x0 = x_now.vec();
  const GprModel* gp = (model && model->trained()) ? model : nullptr;

  NlpProblem prob;
  for (int k = 0; k < Nc; ++k)
    for (int i = 0; i < 4; ++i)
      prob.add_variable(config.u_min[i], config.u_max[i],
                        warm_start && warm_start->size() == 4 * Nc ? (*warm_start)[4 * k + i]
                                                                   : uref[static_cast<size_t>(k)][i]);

  std::vector<int> args(static_cast<size_t>(4 * Nc));
  for (int i = 0; i < 4 * Nc; ++i) args[static_cast<size_t>(i)] = i;
  prob.add_objective_term(args, [=, &cfg = config](auto in) {
    using T = std::remove_cvref_t<decltype(in[0])>;
    const double dt = cfg.period;
    Vec<T, 10> x = to_scalar<T>(x0);
    T cost(0.0);
    for (int k = 0; k < Nc; ++k) {
      Vec4<T> u;
      for (int i = 0; i < 4; ++i) u[i] = in[4 * k + i];
      for (int i = 0; i < 10; ++i) {
        const T e = x[i] - ref[static_cast<size_t>(k)][i];
        cost += cfg.q_weights[i] * e * e;
      }
      for (int i = 0; i < 4; ++i) {
        const T e = u[i] - uref[static_cast<size_t>(k)][i];
        cost += cfg.r_weights[i] * e * e;
      }
      auto f = [&](const Vec<T, 10>& xs) {
        return gp ? augmented_ode(xs, u, *gp, alpha_ff[static_cast<size_t>(k)], cfg.g)
                  : nominal_ode(xs, u, cfg.g);
      };
      const Vec<T, 10> k1 = f(x);
      const Vec<T, 10> k2 = f(x + k1 * (0.5 * dt));
      const Vec<T, 10> k3 = f(x + k2 * (0.5 * dt));
      const Vec<T, 10> k4 = f(x + k3 * dt);
      x = x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    }
    for (int i = 0; i < 10; ++i) {
      const T e = x[i] - ref[static_cast<size_t>(Nc)][i];
      cost += cfg.p_weights[i] * e * e;
    }
    return cost;
  });

  try {
    const SolveResult sol = solve(prob, config.solver);
    if (sol.report.status == SolveStatus::NumericFailure ||
        sol.report.status == SolveStatus::Infeasible) {
      result.degraded = true;
      return result;
    }
    result.cost = sol.report.objective;
    result.iterations = sol.report.iterations;
    result.input = TrackInput::from_vec({sol.x[0], sol.x[1], sol.x[2], sol.x[3]});
    if (warm_start) {
      warm_start->resize(4 * Nc);
      // shift by one control period for the next solve
      for (int k = 0; k + 1 < Nc; ++k)
        for (int i = 0; i < 4; ++i) (*warm_start)[4 * k + i] = sol.x[4 * (k + 1) + i];
      for (int i = 0; i < 4; ++i) (*warm_start)[4 * (Nc - 1) + i] = sol.x[4 * (Nc - 1) + i];
    }
  } catch (const Error&) {
    result.degraded = true;
  }
  return result;
}

namespace {

TrackState plant_step(const TrackState& s, const TrackInput& u, double dt,
                      const DisturbanceSpec& dist, double g) {
  const Vec4d u4 = u.vec();
  auto f = [&](const Vec<double, 10>& x) {
    Vec<double, 10> dx = nominal_ode(x, u4, g);
    const Mat3<double> R = rotation_from_quaternion(slice<3, 4>(x));
    const Vec3d dw = R * dist.accel_body;
    for (int i = 0; i < 3; ++i) dx[7 + i] += dw[i];
    return dx;
  };
  const Vec<double, 10> x = s.vec();
  const Vec<double, 10> k1 = f(x);
  const Vec<double, 10> k2 = f(x + k1 * (0.5 * dt));
  const Vec<double, 10> k3 = f(x + k2 * (0.5 * dt));
  const Vec<double, 10> k4 = f(x + k3 * dt);
  Vec<double, 10> xn = x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
  TrackState next = TrackState::from_vec(xn);
  next.q = normalized(next.q);
  return next;
}

struct PassResult {
  ClosedLoopLog log;
  std::vector<std::array<double, 5>> observations;
  std::vector<Vec3d> residuals;
};

PassResult run_pass(std::span<const ReferencePoint> reference, const NmpcConfig& config,
                    const TrackingOptions& options, const GprModel* model) {
  PassResult pass;
  ClosedLoopLog& log = pass.log;
  const double dt = config.period;
  const int steps = std::max(1, static_cast<int>(std::llround(options.duration / dt)));

  TrackState state = options.initial
                         ? *options.initial
                         : TrackState::from_vec(reference[0].x);
  TrackInput prev{{0, 0, 0}, config.g};
  Eigen::VectorXd warm;

  const int last = static_cast<int>(reference.size()) - 1;
  for (int step = 0; step < steps; ++step) {
    const double t = step * dt;
    std::vector<ReferencePoint> window(static_cast<size_t>(config.horizon + 1));
    for (int k = 0; k <= config.horizon; ++k)
      window[static_cast<size_t>(k)] = reference[static_cast<size_t>(std::min(step + k, last))];

    const NmpcResult res = nmpc_step(state, window, config, model, prev, &warm);
    log.any_degraded = log.any_degraded || res.degraded;
    prev = res.input;

    log.t.push_back(t);
    log.state.push_back(state.vec());
    log.input.push_back(res.input.vec());
    log.reference.push_back(window[0].x);
    Vec3d pe;
    for (int i = 0; i < 3; ++i) pe[i] = state.p[i] - window[0].x[i];
    log.pos_error.push_back(std::sqrt(dot(pe, pe)));

    const TrackState next = plant_step(state, res.input, dt, options.disturbance, config.g);

    // residual of the nominal model in the body frame, for the GPR
    const Mat3<double> R = rotation_from_quaternion<double>(state.q.vec());
    const Vec3d v_body = transpose(R) * state.v;
    const Vec<double, 10> dx_nom = nominal_ode(state.vec(), res.input.vec(), config.g);
    Vec3d accel_meas, accel_nom;
    for (int i = 0; i < 3; ++i) {
      accel_meas[i] = (next.v[i] - state.v[i]) / dt;
      accel_nom[i] = dx_nom[7 + i];
    }
    pass.observations.push_back({state.p[2], window[0].alpha, v_body[0], v_body[1], v_body[2]});
    pass.residuals.push_back(transpose(R) * (accel_meas - accel_nom));

    state = next;
  }

  double sum = 0.0;
  for (double e : log.pos_error) {
    sum += e;
    log.max_pos_error = std::max(log.max_pos_error, e);
  }
  log.mean_pos_error = sum / static_cast<double>(log.pos_error.size());
  const size_t tail = std::max<size_t>(1, log.pos_error.size() / 10);
  double tail_sum = 0.0;
  for (size_t i = log.pos_error.size() - tail; i < log.pos_error.size(); ++i)
    tail_sum += log.pos_error[i];
  log.steady_pos_error = tail_sum / static_cast<double>(tail);
  log.final_quat_norm = quat_norm(TrackState::from_vec(log.state.back()).q);
  return pass;
}

}  // namespace

ClosedLoopLog run_closed_loop(std::span<const ReferencePoint> reference, const NmpcConfig& config,
                              const TrackingOptions& options) {
  if (reference.empty()) throw ValidationError("tracking.reference", "empty reference");
  if (!options.use_gpr) return run_pass(reference, config, options, nullptr).log;

  // collection pass with the nominal controller, then the augmented re-run
  PassResult collect = run_pass(reference, config, options, nullptr);
  GprModel model;
  model.fit(collect.observations, collect.residuals, options.gpr);
  ClosedLoopLog log = run_pass(reference, config, options, &model).log;
  log.gpr_used = true;
  log.gpr_points = model.training_size();
  return log;
}

std::vector<ReferencePoint> hover_reference(const Vec3d& position, double duration, double period,
                                            double g) {
  const int n = static_cast<int>(std::llround(duration / period)) + 2;
  std::vector<ReferencePoint> ref(static_cast<size_t>(n));
  for (auto& r : ref) {
    r.x = {position[0], position[1], position[2], 1, 0, 0, 0, 0, 0, 0};
    r.u = {0, 0, 0, g};
    r.alpha = 0.0;
  }
  return ref;
}

std::vector<ReferencePoint> reference_from_plan(const PlanResult& plan, const ModelParams& P,
                                                double period, double pad_end) {
  const int N = plan.grid.N;
  const double dt = plan.grid.dt();
  const double t_total = plan.grid.t_N + pad_end;
  const int n = static_cast<int>(std::llround(t_total / period)) + 2;
  std::vector<ReferencePoint> ref;
  ref.reserve(static_cast<size_t>(n));

  auto knot_velocity = [&](int k) {
    k = std::clamp(k, 0, N - 1);
    return (plan.path.q_knots[static_cast<size_t>(k + 1)] -
            plan.path.q_knots[static_cast<size_t>(k)]) *
           (1.0 / dt);
  };

  for (int i = 0; i < n; ++i) {
    const double t = i * period;
    if (t >= plan.grid.t_N) {
      // hold the final pose hovering
      const Vec7d q = plan.path.q_knots.back();
      const UnitQuaternion quat = quat_from_euler({q[3], q[4], q[5]});
      ReferencePoint hold;
      hold.x = {q[0], q[1], q[2], quat.w, quat.x, quat.y, quat.z, 0, 0, 0};
      hold.u = {0, 0, 0, P.g};
      hold.alpha = q[6];
      ref.push_back(hold);
      continue;
    }
    const int k = std::min(static_cast<int>(t / dt), N - 1);
    const double f = (t - k * dt) / dt;
    const Vec7d q = plan.path.q_knots[static_cast<size_t>(k)] * (1.0 - f) +
                    plan.path.q_knots[static_cast<size_t>(k + 1)] * f;
    const Vec7d qd = knot_velocity(k);
    const UnitQuaternion quat = quat_from_euler({q[3], q[4], q[5]});

    // required specific force and body rates along the plan
    const Vec7d qd_next = knot_velocity(k + 1);
    Vec3d accel;
    for (int j = 0; j < 3; ++j) accel[j] = (qd_next[j] - qd[j]) / dt;
    const double f_thrust =
        std::sqrt(accel[0] * accel[0] + accel[1] * accel[1] +
                  (accel[2] + P.g) * (accel[2] + P.g));
    const Vec3d omega = euler_rate_map_inv<double>(slice<3, 3>(q)) * slice<3, 3>(qd);

    ReferencePoint r;
    r.x = {q[0], q[1], q[2], quat.w, quat.x, quat.y, quat.z, qd[0], qd[1], qd[2]};
    r.u = {omega[0], omega[1], omega[2], f_thrust};
    r.alpha = q[6];
    ref.push_back(r);
  }
  return ref;
}

}  // namespace dmcc
