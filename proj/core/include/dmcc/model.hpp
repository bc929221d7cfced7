#pragma once

#include <cmath>
#include <string>

#include "dmcc/geometry.hpp"
#include "dmcc/smallvec.hpp"

namespace dmcc {

/// Physical constants of the quadrotor with its 1-DoF arm, plus box limits
/// used by the planner. table_i() is the default simulation set; hardware()
/// overlays the flight-unit values; racing() zeroes the arm so the same
/// machinery describes the bare 6-DoF quadrotor.
struct ModelParams {
  double m_quadrotor = 1.659;  // kg
  double m_arm = 0.36;         // kg
  Mat3<double> J_quadrotor;    // kg m^2
  Mat3<double> J_arm;          // kg m^2, about the arm frame O_m
  double l_arm = 0.182;        // m
  double l_offset = 0.05;      // m, mount offset along -z of the body frame
  double l_frame = 0.33;       // m, motor-to-motor diagonal
  double c_tau = 0.01;         // m, yaw torque coefficient
  double g = 9.8066;           // m/s^2

  Vec7d q_min{}, q_max{};
  Vec7d qdot_min{}, qdot_max{};
  Vec5d u_min{}, u_max{};

  static ModelParams table_i();
  static ModelParams hardware();
  static ModelParams racing();

  bool arm_disabled() const;
  double total_mass() const { return m_quadrotor + m_arm; }
  double hover_force_per_motor() const { return 0.25 * total_mass() * g; }
  void validate() const;
};

/// Generalized coordinates q = [p, xi, alpha].
struct GenCoord {
  Vec3d p{};
  EulerAngles xi{};
  double alpha = 0.0;

  Vec7d vec() const { return {p[0], p[1], p[2], xi.phi, xi.theta, xi.psi, alpha}; }
  static GenCoord from_vec(const Vec7d& v) {
    return {{v[0], v[1], v[2]}, {v[3], v[4], v[5]}, v[6]};
  }
};

using GenVel = Vec7d;

/// Control at one time-grid node: four motor forces and the servo torque.
struct ControlKnot {
  std::array<double, 4> f_motor{};
  double tau_servo = 0.0;

  Vec5d vec() const { return {f_motor[0], f_motor[1], f_motor[2], f_motor[3], tau_servo}; }
  static ControlKnot from_vec(const Vec5d& v) {
    return {{v[0], v[1], v[2], v[3]}, v[4]};
  }
};

/// 12-state quadrotor of the first-order ODE model: [p, xi, v, omega_B].
struct QuadState12 {
  Vec3d p{};
  EulerAngles xi{};
  Vec3d v{};
  Vec3d omega_B{};

  Vec<double, 12> vec() const {
    return {p[0], p[1], p[2], xi.phi, xi.theta, xi.psi, v[0], v[1], v[2],
            omega_B[0], omega_B[1], omega_B[2]};
  }
  static QuadState12 from_vec(const Vec<double, 12>& x) {
    return {{x[0], x[1], x[2]}, {x[3], x[4], x[5]}, {x[6], x[7], x[8]}, {x[9], x[10], x[11]}};
  }
};

// Rotation from the arm frame to the body frame; the arm turns about body-y.
template <typename T>
Mat3<T> arm_mount_rotation(const T& alpha) {
  using std::cos;
  using std::sin;
  const T ca = cos(alpha), sa = sin(alpha);
  Mat3<T> R;
  R(0, 0) = ca;
  R(0, 2) = sa;
  R(1, 1) = T(1.0);
  R(2, 0) = -sa;
  R(2, 2) = ca;
  return R;
}

template <typename T>
Vec3<T> motor_torque(const Vec4<T>& f, const ModelParams& P) {
  const double c = std::sqrt(2.0) / 4.0 * P.l_frame;
  return {(f[1] + f[2] - f[0] - f[3]) * c, (f[1] + f[3] - f[0] - f[2]) * c,
          (f[2] + f[3] - f[0] - f[1]) * P.c_tau};
}

// First-order quadrotor-only dynamics; thrust is mass-normalized by the
// quadrotor mass.
template <typename T>
Vec<T, 12> quad_ode(const Vec<T, 12>& x, const Vec4<T>& u, const ModelParams& P) {
  const Vec3<T> xi = slice<3, 3>(x);
  const Vec3<T> v = slice<6, 3>(x);
  const Vec3<T> w = slice<9, 3>(x);
  const Mat3<T> R = rotation_from_euler(xi);
  const Mat3<T> Tm = euler_rate_map(xi);
  const T f_thrust = (u[0] + u[1] + u[2] + u[3]) / P.m_quadrotor;
  const Vec3<T> tau = motor_torque(u, P);

  const Vec3<T> xi_dot = Tm * w;
  Vec3<T> v_dot{R(0, 2) * f_thrust, R(1, 2) * f_thrust, R(2, 2) * f_thrust - P.g};
  const Vec3<T> Jw = mat_vec_d(P.J_quadrotor, w);
  const Vec3<T> w_dot = mat_vec_d(inverse3(P.J_quadrotor), tau - cross(w, Jw));

  Vec<T, 12> dx;
  for (int i = 0; i < 3; ++i) {
    dx[i] = v[i];
    dx[3 + i] = xi_dot[i];
    dx[6 + i] = v_dot[i];
    dx[9 + i] = w_dot[i];
  }
  return dx;
}

template <typename T>
Vec3<T> arm_point_position(const Vec7<T>& q, const ModelParams& P, double reach) {
  using std::cos;
  using std::sin;
  const Vec3<T> p = slice<0, 3>(q);
  const Mat3<T> R = rotation_from_euler(slice<3, 3>(q));
  const T ca = cos(q[6]), sa = sin(q[6]);
  const Vec3<T> r_body{ca * reach, T(0.0), -(sa * reach) - P.l_offset};
  return p + R * r_body;
}

template <typename T>
Vec3<T> arm_center_position(const Vec7<T>& q, const ModelParams& P) {
  return arm_point_position(q, P, 0.5 * P.l_arm);
}

template <typename T>
Vec3<T> end_effector_position(const Vec7<T>& q, const ModelParams& P) {
  return arm_point_position(q, P, P.l_arm);
}

template <typename T>
Vec3<T> body_rates(const Vec7<T>& q, const Vec7<T>& qdot) {
  return euler_rate_map_inv(slice<3, 3>(q)) * slice<3, 3>(qdot);
}

template <typename T>
Vec3<T> arm_point_velocity(const Vec7<T>& q, const Vec7<T>& qdot, const ModelParams& P,
                           double reach) {
  using std::cos;
  using std::sin;
  const Vec3<T> v = slice<0, 3>(qdot);
  const T& adot = qdot[6];
  const Mat3<T> R = rotation_from_euler(slice<3, 3>(q));
  const Vec3<T> w = body_rates(q, qdot);
  const T ca = cos(q[6]), sa = sin(q[6]);
  const Vec3<T> swing{sa, T(0.0), ca};
  const Vec3<T> r_body{ca * reach, T(0.0), -(sa * reach) - P.l_offset};
  return v - (R * swing) * (adot * reach) + R * cross(w, r_body);
}

template <typename T>
Vec3<T> arm_center_velocity(const Vec7<T>& q, const Vec7<T>& qdot, const ModelParams& P) {
  return arm_point_velocity(q, qdot, P, 0.5 * P.l_arm);
}

template <typename T>
Vec3<T> end_effector_velocity(const Vec7<T>& q, const Vec7<T>& qdot, const ModelParams& P) {
  return arm_point_velocity(q, qdot, P, P.l_arm);
}

// Arm angular velocity expressed along its body-fixed rotation axis frame.
template <typename T>
Vec3<T> arm_angular_velocity_bodyaxis(const Vec7<T>& q, const Vec7<T>& qdot,
                                      const ModelParams& /*unused*/) {
  const Mat3<T> R = rotation_from_euler(slice<3, 3>(q));
  const Mat3<T> Rm = arm_mount_rotation(q[6]);
  const Vec3<T> w = body_rates(q, qdot);
  const Vec3<T> xi_arm_dot = R * (Rm * Vec3<T>{T(0.0), qdot[6], T(0.0)} + w);
  return transpose(Rm) * (transpose(R) * xi_arm_dot);
}

template <typename T>
T kinetic_energy(const Vec7<T>& q, const Vec7<T>& qdot, const ModelParams& P) {
  const Vec3<T> v = slice<0, 3>(qdot);
  const Vec3<T> w = body_rates(q, qdot);
  const Vec3<T> v_arm = arm_center_velocity(q, qdot, P);
  const Vec3<T> w_arm = arm_angular_velocity_bodyaxis(q, qdot, P);
  return 0.5 * P.m_quadrotor * dot(v, v) + 0.5 * dot(w, mat_vec_d(P.J_quadrotor, w)) +
         0.5 * P.m_arm * dot(v_arm, v_arm) + 0.5 * dot(w_arm, mat_vec_d(P.J_arm, w_arm));
}

template <typename T>
T potential_energy(const Vec7<T>& q, const ModelParams& P) {
  return P.m_quadrotor * P.g * q[2] + P.m_arm * P.g * arm_center_position(q, P)[2];
}

template <typename T>
T lagrangian(const Vec7<T>& q, const Vec7<T>& qdot, const ModelParams& P) {
  return kinetic_energy(q, qdot, P) - potential_energy(q, P);
}

// Generalized force of the control input. Body torque (motors plus the servo
// reaction about body-y) maps to Euler coordinates through T(xi)^{-T}; the
// servo torque itself acts on the arm coordinate.
template <typename T>
Vec7<T> generalized_force(const Vec7<T>& q, const Vec5<T>& u, const ModelParams& P) {
  const Vec3<T> xi = slice<3, 3>(q);
  const Mat3<T> R = rotation_from_euler(xi);
  const T f_total = u[0] + u[1] + u[2] + u[3];
  const Vec4<T> f{u[0], u[1], u[2], u[3]};
  const Vec3<T> tau_body = motor_torque(f, P) + Vec3<T>{T(0.0), -u[4], T(0.0)};
  const Vec3<T> euler_part = transpose(euler_rate_map_inv(xi)) * tau_body;
  return {R(0, 2) * f_total, R(1, 2) * f_total, R(2, 2) * f_total,
          euler_part[0],     euler_part[1],     euler_part[2],     u[4]};
}

Vec3d motor_torque(const ControlKnot& u, const ModelParams& P);
Vec<double, 12> quad_ode(const QuadState12& x, const ControlKnot& u, const ModelParams& P);

/// Mass matrix extracted as the Hessian of the kinetic energy in qdot.
Eigen::Matrix<double, 7, 7> mass_matrix(const Vec7d& q, const ModelParams& P);

}  // namespace dmcc
