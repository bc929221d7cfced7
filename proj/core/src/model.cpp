#include "dmcc/model.hpp"

#include <numbers>

#include "dmcc/errors.hpp"

namespace dmcc {

namespace {

Mat3<double> diag3(double a, double b, double c) {
  Mat3<double> m;
  m(0, 0) = a;
  m(1, 1) = b;
  m(2, 2) = c;
  return m;
}

constexpr double kPi = std::numbers::pi;

}  // namespace

ModelParams ModelParams::table_i() {
  ModelParams p;
  p.J_quadrotor = diag3(0.0348, 0.0459, 0.0977);
  p.J_arm = diag3(0.0, 0.0019, 0.0);

  p.q_min = {-5.0, -5.0, 0.1, -0.6, -0.6, -kPi, -kPi};
  p.q_max = {5.0, 5.0, 2.5, 0.6, 0.6, kPi, kPi};
  p.qdot_min = {-1.3, -1.3, -1.15, -8.0, -8.0, -2.0, -kPi / 2.0};
  p.qdot_max = {1.3, 1.3, 1.15, 8.0, 8.0, 2.0, kPi / 2.0};
  p.u_min = {0.0, 0.0, 0.0, 0.0, -2.0};
  p.u_max = {10.0, 10.0, 10.0, 10.0, 2.0};
  return p;
}

ModelParams ModelParams::hardware() {
  ModelParams p = table_i();
  p.J_quadrotor = diag3(0.0158, 0.0154, 0.0195);
  p.J_arm = diag3(0.0001, 0.0016, 0.00016);
  p.l_offset = 0.107;
  p.qdot_min = {-0.3, -0.3, -0.15, -0.2, -0.2, -0.1, -kPi / 5.0};
  p.qdot_max = {0.3, 0.3, 0.15, 0.2, 0.2, 0.1, kPi / 5.0};
  return p;
}

ModelParams ModelParams::racing() {
  ModelParams p = table_i();
  p.m_arm = 0.0;
  p.J_arm = Mat3<double>{};
  p.q_min = {-10.0, -10.0, 0.1, -0.6, -0.6, -kPi, 0.0};
  p.q_max = {10.0, 10.0, 5.0, 0.6, 0.6, kPi, 0.0};
  p.qdot_min[6] = 0.0;
  p.qdot_max[6] = 0.0;
  p.u_min[4] = 0.0;
  p.u_max[4] = 0.0;
  return p;
}

bool ModelParams::arm_disabled() const {
  if (m_arm != 0.0) return false;
  for (double e : J_arm.m)
    if (e != 0.0) return false;
  return true;
}

void ModelParams::validate() const {
  if (m_quadrotor <= 0.0) throw ValidationError("model.m_quadrotor", "must be positive");
  if (m_arm < 0.0) throw ValidationError("model.m_arm", "must be non-negative");
  if (l_arm <= 0.0) throw ValidationError("model.l_arm", "must be positive");
  if (l_offset < 0.0) throw ValidationError("model.l_offset", "must be non-negative");
  if (l_frame <= 0.0) throw ValidationError("model.l_frame", "must be positive");
  if (g <= 0.0) throw ValidationError("model.g", "must be positive");
  for (int i = 0; i < 3; ++i) {
    if (J_quadrotor(i, i) <= 0.0)
      throw ValidationError("model.J_quadrotor", "diagonal must be positive");
    if (J_arm(i, i) < 0.0) throw ValidationError("model.J_arm", "diagonal must be non-negative");
  }
  for (int i = 0; i < 7; ++i) {
    if (q_min[i] > q_max[i]) throw ValidationError("model.q_bounds", "min exceeds max");
    if (qdot_min[i] > qdot_max[i]) throw ValidationError("model.qdot_bounds", "min exceeds max");
  }
  for (int i = 0; i < 5; ++i)
    if (u_min[i] > u_max[i]) throw ValidationError("model.u_bounds", "min exceeds max");
}

Vec3d motor_torque(const ControlKnot& u, const ModelParams& P) {
  return motor_torque<double>({u.f_motor[0], u.f_motor[1], u.f_motor[2], u.f_motor[3]}, P);
}

Vec<double, 12> quad_ode(const QuadState12& x, const ControlKnot& u, const ModelParams& P) {
  return quad_ode<double>(x.vec(), {u.f_motor[0], u.f_motor[1], u.f_motor[2], u.f_motor[3]}, P);
}

Eigen::Matrix<double, 7, 7> mass_matrix(const Vec7d& q, const ModelParams& P) {
  using D1 = ad::Dual<double, 7>;
  using D2 = ad::Dual<D1, 7>;
  Vec7<D2> qq, qd;
  for (int i = 0; i < 7; ++i) {
    qq[i] = D2(D1(q[i]));
    D2 s(D1::seeded(0.0, i));
    s.d[i] = D1(1.0);
    qd[i] = s;
  }
  const D2 K = kinetic_energy(qq, qd, P);
  Eigen::Matrix<double, 7, 7> M;
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 7; ++j) M(i, j) = K.d[i].d[j];
  return M;
}

}  // namespace dmcc
