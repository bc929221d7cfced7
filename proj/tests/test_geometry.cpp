#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "dmcc/geometry.hpp"

using namespace dmcc;

namespace {

constexpr double kPi = std::numbers::pi;

std::mt19937& rng() {
  static std::mt19937 gen(42);
  return gen;
}

EulerAngles random_euler() {
  std::uniform_real_distribution<double> ang(-0.55, 0.55);
  std::uniform_real_distribution<double> yaw(-kPi, kPi);
  return {ang(rng()), ang(rng()), yaw(rng())};
}

Eigen::Vector3d random_vec3(double scale) {
  std::uniform_real_distribution<double> d(-scale, scale);
  return {d(rng()), d(rng()), d(rng())};
}

}  // namespace

TEST_SUITE_BEGIN("geometry");

TEST_CASE("rotation_from_euler identity and pure yaw") {
  CHECK((rotation_from_euler(EulerAngles{}) - Eigen::Matrix3d::Identity()).norm() < 1e-15);

  // pure yaw of pi/2 sends body-x to inertial-y
  const Eigen::Matrix3d R = rotation_from_euler(EulerAngles{0, 0, kPi / 2});
  const Eigen::Vector3d bx = R * Eigen::Vector3d::UnitX();
  CHECK(bx[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(bx[1] == doctest::Approx(1.0));
  CHECK(bx[2] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("rotation matrices are proper rotations") {
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Matrix3d R = rotation_from_euler(random_euler());
    CHECK((R.transpose() * R - Eigen::Matrix3d::Identity()).lpNorm<Eigen::Infinity>() < 1e-12);
    CHECK(R.determinant() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("euler_rate_map identity at zero and singularity guard") {
  CHECK((euler_rate_map(EulerAngles{}) - Eigen::Matrix3d::Identity()).norm() < 1e-15);
  CHECK_THROWS_AS(euler_rate_map(EulerAngles{0.1, kPi / 2, 0.0}), SingularAttitude);
  CHECK_THROWS_AS(euler_rate_map(EulerAngles{0.0, -kPi / 2, 0.3}), SingularAttitude);
}

TEST_CASE("euler rate map matches finite differences of the rotation flow") {
  // advance the exact rotation by a body rate omega for a tiny step and
  // difference the recovered Euler angles
  for (int trial = 0; trial < 50; ++trial) {
    const EulerAngles xi = random_euler();
    const Eigen::Vector3d omega = random_vec3(1.5);
    const double h = 1e-6;

    const Eigen::Matrix3d R = rotation_from_euler(xi);
    Eigen::Matrix3d W;
    W << 0, -omega[2], omega[1], omega[2], 0, -omega[0], -omega[1], omega[0], 0;
    const Eigen::Matrix3d R_plus = R * (Eigen::Matrix3d::Identity() + h * W +
                                        0.5 * h * h * W * W);

    // recover Euler angles from R_plus (ZYX)
    const double theta = std::asin(-R_plus(2, 0));
    const double phi = std::atan2(R_plus(2, 1), R_plus(2, 2));
    const double psi = std::atan2(R_plus(1, 0), R_plus(0, 0));
    Eigen::Vector3d xidot_fd{(phi - xi.phi) / h, (theta - xi.theta) / h, (psi - xi.psi) / h};

    const Eigen::Vector3d xidot = euler_rate_map(xi) * omega;
    CHECK((xidot - xidot_fd).lpNorm<Eigen::Infinity>() < 1e-4);
  }
}

TEST_CASE("rate map inverse really is the inverse") {
  for (int trial = 0; trial < 50; ++trial) {
    const EulerAngles xi = random_euler();
    const Mat3<double> T = euler_rate_map<double>(xi.vec());
    const Mat3<double> Tinv = euler_rate_map_inv<double>(xi.vec());
    const Mat3<double> I = T * Tinv;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) CHECK(I(i, j) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12));
  }
}

TEST_CASE("rotation_from_quaternion identity, double cover, norm check") {
  CHECK((rotation_from_quaternion(UnitQuaternion{}) - Eigen::Matrix3d::Identity()).norm() <
        1e-15);

  const UnitQuaternion q = quat_from_euler(random_euler());
  const UnitQuaternion mq{-q.w, -q.x, -q.y, -q.z};
  CHECK((rotation_from_quaternion(q) - rotation_from_quaternion(mq)).norm() < 1e-14);

  CHECK_THROWS_AS(rotation_from_quaternion(UnitQuaternion{0.5, 0.5, 0.0, 0.0}), NotNormalized);
}

TEST_CASE("euler and quaternion rotations agree") {
  for (int trial = 0; trial < 100; ++trial) {
    const EulerAngles xi = random_euler();
    const Eigen::Matrix3d Re = rotation_from_euler(xi);
    const Eigen::Matrix3d Rq = rotation_from_quaternion(quat_from_euler(xi));
    CHECK((Re - Rq).lpNorm<Eigen::Infinity>() < 1e-10);
  }
}

TEST_CASE("euler<->quaternion round trip") {
  for (int trial = 0; trial < 50; ++trial) {
    const EulerAngles xi = random_euler();
    const EulerAngles back = euler_from_quat(quat_from_euler(xi));
    CHECK(back.phi == doctest::Approx(xi.phi).epsilon(1e-10));
    CHECK(back.theta == doctest::Approx(xi.theta).epsilon(1e-10));
    CHECK(back.psi == doctest::Approx(xi.psi).epsilon(1e-10));
  }
}

TEST_CASE("quaternion rate matrix: zero, skew-symmetry, norm preservation") {
  CHECK(quaternion_rate_matrix(Eigen::Vector3d::Zero()).norm() == 0.0);

  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Vector3d w = random_vec3(3.0);
    const Eigen::Matrix4d Q = quaternion_rate_matrix(w);
    CHECK((Q + Q.transpose()).lpNorm<Eigen::Infinity>() == 0.0);

    // q^T Q q = 0 exactly by skew-symmetry
    const UnitQuaternion q = quat_from_euler(random_euler());
    Eigen::Vector4d qv{q.w, q.x, q.y, q.z};
    CHECK(std::abs(qv.dot(Q * qv)) < 1e-15);
  }
}

TEST_CASE("integrating the quaternion rate for t = pi yields yaw by pi") {
  // constant omega = (0,0,1); closed-form axis-angle solution is the oracle
  Eigen::Vector4d q{1, 0, 0, 0};
  const Eigen::Vector3d w{0, 0, 1};
  const Eigen::Matrix4d Q = quaternion_rate_matrix(w);
  const double T = kPi;
  const int steps = 2000;
  const double h = T / steps;
  auto f = [&](const Eigen::Vector4d& v) { return (0.5 * Q * v).eval(); };
  for (int s = 0; s < steps; ++s) {
    const Eigen::Vector4d k1 = f(q);
    const Eigen::Vector4d k2 = f(q + 0.5 * h * k1);
    const Eigen::Vector4d k3 = f(q + 0.5 * h * k2);
    const Eigen::Vector4d k4 = f(q + h * k3);
    q += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    q.normalize();
  }
  // yaw by pi: q = (cos(pi/2), 0, 0, sin(pi/2)) = (0,0,0,1)
  CHECK(std::abs(q[0]) < 1e-6);
  CHECK(std::abs(q[1]) < 1e-9);
  CHECK(std::abs(q[2]) < 1e-9);
  CHECK(std::abs(std::abs(q[3]) - 1.0) < 1e-6);
}

TEST_SUITE_END();
