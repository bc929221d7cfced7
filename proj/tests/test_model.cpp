#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>

#include "dmcc/model.hpp"

using namespace dmcc;

namespace {

constexpr double kPi = std::numbers::pi;

std::mt19937& rng() {
  static std::mt19937 gen(123);
  return gen;
}

Vec7d random_q() {
  std::uniform_real_distribution<double> pos(-1.0, 1.0);
  std::uniform_real_distribution<double> ang(-0.5, 0.5);
  std::uniform_real_distribution<double> yaw(-2.0, 2.0);
  std::uniform_real_distribution<double> arm(-kPi, kPi);
  return {pos(rng()), pos(rng()), pos(rng()) + 1.0, ang(rng()), ang(rng()), yaw(rng()), arm(rng())};
}

Vec7d random_qd() {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Vec7d v;
  for (int i = 0; i < 7; ++i) v[i] = d(rng());
  return v;
}

Vec5d random_u() {
  std::uniform_real_distribution<double> f(0.0, 8.0);
  std::uniform_real_distribution<double> tau(-1.5, 1.5);
  return {f(rng()), f(rng()), f(rng()), f(rng()), tau(rng())};
}

}  // namespace

TEST_SUITE_BEGIN("model");

TEST_CASE("motor torque: symmetric thrust, Eq term check, swap symmetry") {
  const ModelParams P = ModelParams::table_i();

  const Vec3d tau0 = motor_torque<double>({2.0, 2.0, 2.0, 2.0}, P);
  CHECK(std::abs(tau0[0]) < 1e-15);
  CHECK(std::abs(tau0[1]) < 1e-15);
  CHECK(std::abs(tau0[2]) < 1e-15);

  // term-by-term re-evaluation for f = (0, 1, 1, 0)
  const Vec3d tau = motor_torque<double>({0.0, 1.0, 1.0, 0.0}, P);
  const double c = std::sqrt(2.0) / 4.0 * 0.33;
  CHECK(tau[0] == doctest::Approx(c * (1 + 1 - 0 - 0)).epsilon(1e-14));
  CHECK(tau[1] == doctest::Approx(c * (1 + 0 - 0 - 1)).epsilon(1e-14));
  CHECK(tau[2] == doctest::Approx(0.01 * (1 + 0 - 0 - 1)).epsilon(1e-14));

  // swapping motors (1<->2, 3<->4) negates tau_x
  std::uniform_real_distribution<double> d(0.0, 5.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec4<double> f{d(rng()), d(rng()), d(rng()), d(rng())};
    const Vec4<double> swapped{f[1], f[0], f[3], f[2]};
    CHECK(motor_torque(swapped, P)[0] == doctest::Approx(-motor_torque(f, P)[0]).epsilon(1e-12));
  }
}

TEST_CASE("quad ode: hover equilibrium, free fall, re-evaluation oracle") {
  const ModelParams P = ModelParams::table_i();

  QuadState12 hover;
  hover.p = {0, 0, 1};
  const double f_each = 0.25 * P.m_quadrotor * P.g;
  const auto dx_hover = quad_ode(hover, ControlKnot{{f_each, f_each, f_each, f_each}, 0.0}, P);
  for (int i = 0; i < 12; ++i) CHECK(std::abs(dx_hover[i]) < 1e-12);

  const auto dx_fall = quad_ode(hover, ControlKnot{}, P);
  CHECK(dx_fall[8] == doctest::Approx(-P.g));

  for (int trial = 0; trial < 30; ++trial) {
    Vec<double, 12> x;
    const Vec7d q = random_q();
    const Vec7d qd = random_qd();
    for (int i = 0; i < 6; ++i) x[i] = q[i];
    for (int i = 0; i < 3; ++i) x[6 + i] = qd[i];
    for (int i = 0; i < 3; ++i) x[9 + i] = qd[3 + i];
    std::uniform_real_distribution<double> fm(0.0, 8.0);
    const Vec4<double> u{fm(rng()), fm(rng()), fm(rng()), fm(rng())};
    const auto dx = quad_ode(x, u, P);

    const Mat3<double> R = rotation_from_euler<double>(slice<3, 3>(x));
    const double ft = (u[0] + u[1] + u[2] + u[3]) / P.m_quadrotor;
    CHECK(dx[6] == doctest::Approx(R(0, 2) * ft).epsilon(1e-12));
    CHECK(dx[7] == doctest::Approx(R(1, 2) * ft).epsilon(1e-12));
    CHECK(dx[8] == doctest::Approx(R(2, 2) * ft - P.g).epsilon(1e-12));
  }
}

TEST_CASE("arm and end-effector positions at canonical poses") {
  const ModelParams P = ModelParams::table_i();
  Vec7d q{};  // zero pose

  const Vec3d pm = arm_center_position(q, P);
  CHECK(pm[0] == doctest::Approx(0.091).epsilon(1e-12));
  CHECK(pm[1] == doctest::Approx(0.0));
  CHECK(pm[2] == doctest::Approx(-0.05).epsilon(1e-12));

  const Vec3d pe = end_effector_position(q, P);
  CHECK(pe[0] == doctest::Approx(0.182).epsilon(1e-12));
  CHECK(pe[2] == doctest::Approx(-0.05).epsilon(1e-12));

  q[6] = kPi / 2;  // arm straight down
  const Vec3d pm_down = arm_center_position(q, P);
  CHECK(pm_down[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(pm_down[2] == doctest::Approx(-0.05 - 0.091).epsilon(1e-12));
  const Vec3d pe_down = end_effector_position(q, P);
  CHECK(pe_down[2] == doctest::Approx(-0.05 - 0.182).epsilon(1e-12));
}

TEST_CASE("kinematic chain: center sits half an arm from the end-effector") {
  const ModelParams P = ModelParams::table_i();
  for (int trial = 0; trial < 50; ++trial) {
    const Vec7d q = random_q();
    const Vec3d d = end_effector_position(q, P) - arm_center_position(q, P);
    CHECK(std::sqrt(dot(d, d)) == doctest::Approx(0.5 * P.l_arm).epsilon(1e-12));
  }
}

TEST_CASE("analytic point velocities match finite differences of positions") {
  const ModelParams P = ModelParams::table_i();
  const double h = 1e-6;
  for (int trial = 0; trial < 100; ++trial) {
    const Vec7d q = random_q();
    const Vec7d qd = random_qd();
    const Vec7d qp = q + qd * h;
    const Vec7d qm = q - qd * h;

    const Vec3d vc = arm_center_velocity(q, qd, P);
    const Vec3d vc_fd = (arm_center_position(qp, P) - arm_center_position(qm, P)) * (1.0 / (2 * h));
    const Vec3d ve = end_effector_velocity(q, qd, P);
    const Vec3d ve_fd =
        (end_effector_position(qp, P) - end_effector_position(qm, P)) * (1.0 / (2 * h));
    for (int i = 0; i < 3; ++i) {
      CHECK(std::abs(vc[i] - vc_fd[i]) < 1e-5);
      CHECK(std::abs(ve[i] - ve_fd[i]) < 1e-5);
    }
  }
}

TEST_CASE("velocities vanish at rest and follow rigid translation") {
  const ModelParams P = ModelParams::table_i();
  const Vec7d q = random_q();
  Vec7d qd{};
  const Vec3d v0 = arm_center_velocity(q, qd, P);
  CHECK(dot(v0, v0) == doctest::Approx(0.0));

  qd = {0.7, -0.2, 0.4, 0, 0, 0, 0};
  const Vec3d vt = end_effector_velocity(q, qd, P);
  CHECK(vt[0] == doctest::Approx(0.7));
  CHECK(vt[1] == doctest::Approx(-0.2));
  CHECK(vt[2] == doctest::Approx(0.4));
}

TEST_CASE("arm angular velocity about its axis") {
  const ModelParams P = ModelParams::table_i();
  const Vec7d q = random_q();
  Vec7d qd{};
  const Vec3d w0 = arm_angular_velocity_bodyaxis(q, qd, P);
  CHECK(dot(w0, w0) == doctest::Approx(0.0));

  // pure arm rotation: (0, adot, 0) regardless of pose
  qd[6] = 0.9;
  const Vec3d wa = arm_angular_velocity_bodyaxis(q, qd, P);
  CHECK(wa[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(wa[1] == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(wa[2] == doctest::Approx(0.0).epsilon(1e-12));

  // the magnitude is invariant under a change of yaw at fixed body rates
  for (int trial = 0; trial < 20; ++trial) {
    Vec7d qa = random_q();
    Vec7d qb = qa;
    std::uniform_real_distribution<double> yaw(-2.0, 2.0);
    qb[5] = yaw(rng());
    Vec7d qdr = random_qd();
    // fix omega_B and adot across the yaw change: xidot = T(xi) omega
    const Vec3<double> omega = body_rates<double>(qa, qdr);
    Vec7d qdb = qdr;
    const Vec3<double> xidot_b = euler_rate_map<double>(slice<3, 3>(qb)) * omega;
    for (int i = 0; i < 3; ++i) qdb[3 + i] = xidot_b[i];
    const Vec3d w1 = arm_angular_velocity_bodyaxis(qa, qdr, P);
    const Vec3d w2 = arm_angular_velocity_bodyaxis(qb, qdb, P);
    CHECK(std::sqrt(dot(w1, w1)) == doctest::Approx(std::sqrt(dot(w2, w2))).epsilon(1e-9));
  }
}

TEST_CASE("kinetic energy: rest, pure translation, quadratic form in qdot") {
  const ModelParams P = ModelParams::table_i();
  const Vec7d q = random_q();
  CHECK(kinetic_energy(q, Vec7d{}, P) == doctest::Approx(0.0));

  // translation at 1 m/s: K = (m_quadrotor + m_arm)/2
  Vec7d qd{};
  qd[0] = 1.0;
  CHECK(kinetic_energy(q, qd, P) == doctest::Approx(0.5 * (1.659 + 0.36)).epsilon(1e-12));

  for (int trial = 0; trial < 30; ++trial) {
    const Vec7d qq = random_q();
    const Vec7d qdr = random_qd();
    const double K = kinetic_energy(qq, qdr, P);
    CHECK(K >= 0.0);
    const Eigen::Matrix<double, 7, 7> M = mass_matrix(qq, P);
    const Eigen::Matrix<double, 7, 1> v = to_eigen<7>(qdr);
    CHECK(K == doctest::Approx(0.5 * v.dot(M * v)).epsilon(1e-10));
  }
}

TEST_CASE("mass matrix is symmetric positive semi-definite") {
  const ModelParams P = ModelParams::table_i();
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::Matrix<double, 7, 7> M = mass_matrix(random_q(), P);
    CHECK((M - M.transpose()).lpNorm<Eigen::Infinity>() < 1e-9);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 7, 7>> es(M);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10);
  }
}

TEST_CASE("potential energy values and invariances") {
  const ModelParams P = ModelParams::table_i();
  Vec7d q{};
  CHECK(potential_energy(q, P) == doctest::Approx(0.36 * P.g * (-0.05)).epsilon(1e-12));

  q[2] = 0.65;
  CHECK(potential_energy(q, P) ==
        doctest::Approx(1.659 * 9.8066 * 0.65 + 0.36 * 9.8066 * 0.60).epsilon(1e-12));

  // independent of x, y, psi
  Vec7d q2 = q;
  q2[0] = 3.0;
  q2[1] = -2.0;
  q2[5] = 1.2;
  CHECK(potential_energy(q2, P) == doctest::Approx(potential_energy(q, P)).epsilon(1e-13));
}

TEST_CASE("lagrangian is K - V") {
  const ModelParams P = ModelParams::table_i();
  const Vec7d q = random_q();
  CHECK(lagrangian(q, Vec7d{}, P) == doctest::Approx(-potential_energy(q, P)));
  const Vec7d qd = random_qd();
  CHECK(lagrangian(q, qd, P) ==
        doctest::Approx(kinetic_energy(q, qd, P) - potential_energy(q, P)).epsilon(1e-13));
}

TEST_CASE("generalized force: hover, servo reaction, virtual work identity") {
  const ModelParams P = ModelParams::table_i();
  Vec7d q{};
  const double fh = P.hover_force_per_motor();
  const Vec7d fe = generalized_force<double>(q, {fh, fh, fh, fh, 0.0}, P);
  CHECK(fe[0] == doctest::Approx(0.0));
  CHECK(fe[1] == doctest::Approx(0.0));
  CHECK(fe[2] == doctest::Approx(4 * fh));
  for (int i = 3; i < 7; ++i) CHECK(std::abs(fe[i]) < 1e-12);

  // action-reaction at identity attitude: pitch -tau, arm +tau
  const Vec7d fe_servo = generalized_force<double>(q, {fh, fh, fh, fh, 0.1}, P);
  CHECK(fe_servo[4] == doctest::Approx(-0.1).epsilon(1e-12));
  CHECK(fe_servo[6] == doctest::Approx(0.1).epsilon(1e-12));

  // virtual work: f_e . dq = f_world . dp + tau_body . dtheta_B + tau_s . dalpha
  std::uniform_real_distribution<double> d(-1e-3, 1e-3);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec7d qq = random_q();
    const Vec5d u = random_u();
    Vec7d dq;
    for (int i = 0; i < 7; ++i) dq[i] = d(rng());

    const Vec7d f = generalized_force<double>(qq, u, P);
    const double lhs = dot(f, dq);

    const Mat3<double> R = rotation_from_euler<double>(slice<3, 3>(qq));
    const Vec3d f_world = R * Vec3d{0, 0, u[0] + u[1] + u[2] + u[3]};
    const Vec3d tau_body =
        motor_torque<double>({u[0], u[1], u[2], u[3]}, P) + Vec3d{0.0, -u[4], 0.0};
    const Vec3d dtheta = euler_rate_map_inv<double>(slice<3, 3>(qq)) * slice<3, 3>(dq);
    const double rhs = dot(f_world, slice<0, 3>(dq)) + dot(tau_body, dtheta) + u[4] * dq[6];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
  }
}

TEST_CASE("generalized force is linear in the input at fixed pose") {
  const ModelParams P = ModelParams::table_i();
  const Vec7d q = random_q();
  const Vec5d u1 = random_u();
  const Vec5d u2 = random_u();
  const Vec7d f1 = generalized_force<double>(q, u1, P);
  const Vec7d f2 = generalized_force<double>(q, u2, P);
  const Vec7d fsum = generalized_force<double>(q, u1 + u2, P);
  for (int i = 0; i < 7; ++i) CHECK(fsum[i] == doctest::Approx(f1[i] + f2[i]).epsilon(1e-11));
}

TEST_CASE("parameter presets validate; bad parameters are rejected") {
  ModelParams::table_i().validate();
  ModelParams::hardware().validate();
  ModelParams::racing().validate();
  CHECK(ModelParams::racing().arm_disabled());
  CHECK(!ModelParams::table_i().arm_disabled());

  ModelParams bad = ModelParams::table_i();
  bad.m_quadrotor = -1.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = ModelParams::table_i();
  bad.q_min[2] = bad.q_max[2] + 1.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_SUITE_END();
