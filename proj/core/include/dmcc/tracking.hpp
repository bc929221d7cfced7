#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "dmcc/geometry.hpp"
#include "dmcc/nlp.hpp"
#include "dmcc/planner.hpp"

namespace dmcc {

/// Quadrotor state used by the tracking controller: position, attitude
/// quaternion, velocity. The arm is flown feed-forward and only enters the
/// disturbance model's observation vector.
struct TrackState {
  Vec3d p{};
  UnitQuaternion q{};
  Vec3d v{};

  Vec<double, 10> vec() const {
    return {p[0], p[1], p[2], q.w, q.x, q.y, q.z, v[0], v[1], v[2]};
  }
  static TrackState from_vec(const Vec<double, 10>& x) {
    return {{x[0], x[1], x[2]}, {x[3], x[4], x[5], x[6]}, {x[7], x[8], x[9]}};
  }
};

/// Commanded body rates and mass-normalized collective thrust.
struct TrackInput {
  Vec3d omega{};
  double f_thrust = 0.0;

  Vec4d vec() const { return {omega[0], omega[1], omega[2], f_thrust}; }
  static TrackInput from_vec(const Vec4d& u) { return {{u[0], u[1], u[2]}, u[3]}; }
};

struct GprConfig {
  double signal_var = 1.0;
  std::array<double, 5> length_scales{0.5, 0.5, 0.5, 0.5, 0.5};  // (z, alpha, v_B xyz)
  double noise_var = 1e-4;
  int max_points = 64;
};

/// Per-axis squared-exponential GP over slices of the observation vector
/// z = [altitude, arm angle, body velocities]: axis i regresses on
/// (z, alpha, v_B,i). Posterior means stay differentiable for the NMPC.
class GprModel {
 public:
  bool trained() const { return trained_; }

  void fit(const std::vector<std::array<double, 5>>& observations,
           const std::vector<Vec3d>& residuals_body, const GprConfig& config);

  template <typename T>
  Vec3<T> posterior_mean(const Vec<T, 5>& z) const {
    if (!trained_) throw NotTrained("gpr: posterior requested before fit");
    using std::exp;
    Vec3<T> mu;
    for (int axis = 0; axis < 3; ++axis) {
      const auto& A = axes_[axis];
      const Vec3<T> zq{z[0], z[1], z[2 + axis]};
      T acc(0.0);
      for (int i = 0; i < A.inputs.rows(); ++i) {
        T e(0.0);
        for (int d = 0; d < 3; ++d) {
          const T diff = zq[d] - A.inputs(i, d);
          e += diff * diff * (0.5 / (A.ls[d] * A.ls[d]));
        }
        acc += A.alpha[i] * (config_.signal_var * exp(-e));
      }
      mu[axis] = acc;
    }
    return mu;
  }

  const GprConfig& config() const { return config_; }
  int training_size() const { return trained_ ? static_cast<int>(axes_[0].inputs.rows()) : 0; }

 private:
  struct Axis {
    Eigen::MatrixXd inputs;  // n x 3
    Eigen::VectorXd alpha;   // (K + noise I)^{-1} y
    std::array<double, 3> ls{};
  };
  std::array<Axis, 3> axes_;
  GprConfig config_;
  bool trained_ = false;
};

struct NmpcConfig {
  int horizon = 16;
  double period = 0.02;  // s
  Vec<double, 10> q_weights{10, 10, 10, 1, 1, 1, 1, 1, 1, 1};
  Vec4d r_weights{1, 1, 1, 0.1};
  Vec<double, 10> p_weights{10, 10, 10, 1, 1, 1, 1, 1, 1, 1};
  Vec4d u_min{-8.0, -8.0, -2.0, 0.0};
  Vec4d u_max{8.0, 8.0, 2.0, 25.0};
  SolverOptions solver{.feas_tol = 1e-6, .opt_tol = 1e-7, .max_inner = 150};
  double g = 9.8066;
};

template <typename T>
Vec<T, 10> nominal_ode(const Vec<T, 10>& x, const Vec4<T>& u, double g) {
  const Vec4<T> q = slice<3, 4>(x);
  const Vec3<T> w{u[0], u[1], u[2]};
  const Vec4<T> qdot = quaternion_rate_matrix(w) * q * 0.5;
  const Mat3<T> R = rotation_from_quaternion(q);
  Vec<T, 10> dx;
  for (int i = 0; i < 3; ++i) dx[i] = x[7 + i];
  for (int i = 0; i < 4; ++i) dx[3 + i] = qdot[i];
  dx[7] = R(0, 2) * u[3];
  dx[8] = R(1, 2) * u[3];
  dx[9] = R(2, 2) * u[3] - g;
  return dx;
}

// Nominal dynamics plus the rotated GP residual in the velocity rows only.
template <typename T>
Vec<T, 10> augmented_ode(const Vec<T, 10>& x, const Vec4<T>& u, const GprModel& model,
                         double alpha_arm, double g) {
  Vec<T, 10> dx = nominal_ode(x, u, g);
  if (!model.trained()) return dx;
  const Mat3<T> R = rotation_from_quaternion(slice<3, 4>(x));
  const Vec3<T> v{x[7], x[8], x[9]};
  const Vec3<T> v_body = transpose(R) * v;
  const Vec<T, 5> z{x[2], T(alpha_arm), v_body[0], v_body[1], v_body[2]};
  const Vec3<T> ext = R * model.posterior_mean(z);
  for (int i = 0; i < 3; ++i) dx[7 + i] += ext[i];
  return dx;
}

struct ReferencePoint {
  Vec<double, 10> x{1, 0, 0, 1, 0, 0, 0, 0, 0, 0};  // placeholder; see makers below
  Vec4d u{0, 0, 0, 0};
  double alpha = 0.0;
};

struct NmpcResult {
  TrackInput input;
  bool degraded = false;
  double cost = 0.0;
  int iterations = 0;
};

/// Solves the finite-horizon tracking problem by single shooting over the
/// RK4-discretized (augmented) dynamics and returns the first input.
NmpcResult nmpc_step(const TrackState& x_now, std::span<const ReferencePoint> window,
                     const NmpcConfig& config, const GprModel* model,
                     const TrackInput& previous, Eigen::VectorXd* warm_start);

struct DisturbanceSpec {
  Vec3d accel_body{};  // m/s^2, applied in the body frame
};

struct TrackingOptions {
  double duration = 20.0;
  DisturbanceSpec disturbance;
  bool use_gpr = false;
  GprConfig gpr;
  std::optional<TrackState> initial;  // defaults to the first reference point
};

struct ClosedLoopLog {
  std::vector<double> t;
  std::vector<Vec<double, 10>> state;
  std::vector<Vec4d> input;
  std::vector<Vec<double, 10>> reference;
  std::vector<double> pos_error;
  bool any_degraded = false;
  bool gpr_used = false;
  int gpr_points = 0;

  double mean_pos_error = 0.0;
  double max_pos_error = 0.0;
  double steady_pos_error = 0.0;  // mean over the last tenth of the run
  double final_quat_norm = 1.0;
};

/// Simulates the plant (nominal dynamics + injected disturbance, ideal rate
/// tracking) under the NMPC. With use_gpr, a data-collection pass runs
/// first, the residual model is fitted, and the loop re-runs augmented.
ClosedLoopLog run_closed_loop(std::span<const ReferencePoint> reference, const NmpcConfig& config,
                              const TrackingOptions& options);

std::vector<ReferencePoint> hover_reference(const Vec3d& position, double duration, double period,
                                            double g = 9.8066);

/// Planner knots resampled to the control period; velocities from the knot
/// averages, thrust reference from the required specific force.
std::vector<ReferencePoint> reference_from_plan(const PlanResult& plan, const ModelParams& P,
                                                double period, double pad_end = 1.0);

}  // namespace dmcc
