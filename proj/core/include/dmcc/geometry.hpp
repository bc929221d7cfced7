#pragma once

#include <cmath>

#include "dmcc/autodiff.hpp"
#include "dmcc/errors.hpp"
#include "dmcc/smallvec.hpp"

namespace dmcc {

/// Intrinsic Z-Y-X Euler angles (yaw-pitch-roll); the rate map below fixes
/// the convention.
struct EulerAngles {
  double phi = 0.0;
  double theta = 0.0;
  double psi = 0.0;

  Vec3d vec() const { return {phi, theta, psi}; }
  static EulerAngles from_vec(const Vec3d& v) { return {v[0], v[1], v[2]}; }
};

/// Hamilton quaternion (w, x, y, z); kept unit-norm by renormalize-on-write.
struct UnitQuaternion {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec4d vec() const { return {w, x, y, z}; }
  static UnitQuaternion from_vec(const Vec4d& v) { return {v[0], v[1], v[2], v[3]}; }
};

inline constexpr double kAttitudeSingularityTol = 1e-6;
inline constexpr double kQuaternionNormTol = 1e-6;

// Body-to-inertial rotation for Z-Y-X Euler angles.
template <typename T>
Mat3<T> rotation_from_euler(const Vec3<T>& xi) {
  using std::cos;
  using std::sin;
  const T cphi = cos(xi[0]), sphi = sin(xi[0]);
  const T cth = cos(xi[1]), sth = sin(xi[1]);
  const T cpsi = cos(xi[2]), spsi = sin(xi[2]);
  Mat3<T> R;
  R(0, 0) = cpsi * cth;
  R(0, 1) = cpsi * sth * sphi - spsi * cphi;
  R(0, 2) = cpsi * sth * cphi + spsi * sphi;
  R(1, 0) = spsi * cth;
  R(1, 1) = spsi * sth * sphi + cpsi * cphi;
  R(1, 2) = spsi * sth * cphi - cpsi * sphi;
  R(2, 0) = -sth;
  R(2, 1) = cth * sphi;
  R(2, 2) = cth * cphi;
  return R;
}

// xi_dot = T(xi) * omega_B. Throws SingularAttitude near cos(theta) = 0.
template <typename T>
Mat3<T> euler_rate_map(const Vec3<T>& xi) {
  using std::cos;
  using std::sin;
  using std::tan;
  if (std::abs(ad::value(cos(xi[1]))) <= kAttitudeSingularityTol)
    throw SingularAttitude("euler_rate_map: |cos(theta)| below singularity guard");
  const T cphi = cos(xi[0]), sphi = sin(xi[0]);
  const T cth = cos(xi[1]), tth = tan(xi[1]);
  Mat3<T> Tm;
  Tm(0, 0) = T(1.0);
  Tm(0, 1) = sphi * tth;
  Tm(0, 2) = cphi * tth;
  Tm(1, 0) = T(0.0);
  Tm(1, 1) = cphi;
  Tm(1, 2) = -sphi;
  Tm(2, 0) = T(0.0);
  Tm(2, 1) = sphi / cth;
  Tm(2, 2) = cphi / cth;
  return Tm;
}

// omega_B = T(xi)^{-1} * xi_dot, written in closed form.
template <typename T>
Mat3<T> euler_rate_map_inv(const Vec3<T>& xi) {
  using std::cos;
  using std::sin;
  if (std::abs(ad::value(cos(xi[1]))) <= kAttitudeSingularityTol)
    throw SingularAttitude("euler_rate_map_inv: |cos(theta)| below singularity guard");
  const T cphi = cos(xi[0]), sphi = sin(xi[0]);
  const T cth = cos(xi[1]), sth = sin(xi[1]);
  Mat3<T> M;
  M(0, 0) = T(1.0);
  M(0, 1) = T(0.0);
  M(0, 2) = -sth;
  M(1, 0) = T(0.0);
  M(1, 1) = cphi;
  M(1, 2) = sphi * cth;
  M(2, 0) = T(0.0);
  M(2, 1) = -sphi;
  M(2, 2) = cphi * cth;
  return M;
}

template <typename T>
Mat3<T> rotation_from_quaternion(const Vec4<T>& q) {
  const T &w = q[0], &x = q[1], &y = q[2], &z = q[3];
  Mat3<T> R;
  R(0, 0) = 1.0 - 2.0 * (y * y + z * z);
  R(0, 1) = 2.0 * (x * y - w * z);
  R(0, 2) = 2.0 * (x * z + w * y);
  R(1, 0) = 2.0 * (x * y + w * z);
  R(1, 1) = 1.0 - 2.0 * (x * x + z * z);
  R(1, 2) = 2.0 * (y * z - w * x);
  R(2, 0) = 2.0 * (x * z - w * y);
  R(2, 1) = 2.0 * (y * z + w * x);
  R(2, 2) = 1.0 - 2.0 * (x * x + y * y);
  return R;
}

// q_dot = 0.5 * Q(omega) * q.
template <typename T>
Mat4<T> quaternion_rate_matrix(const Vec3<T>& w) {
  Mat4<T> Q;
  Q(0, 1) = -w[0];
  Q(0, 2) = -w[1];
  Q(0, 3) = -w[2];
  Q(1, 0) = w[0];
  Q(1, 2) = w[2];
  Q(1, 3) = -w[1];
  Q(2, 0) = w[1];
  Q(2, 1) = -w[2];
  Q(2, 3) = w[0];
  Q(3, 0) = w[2];
  Q(3, 1) = w[1];
  Q(3, 2) = -w[0];
  return Q;
}

Eigen::Matrix3d rotation_from_euler(const EulerAngles& xi);
Eigen::Matrix3d rotation_from_quaternion(const UnitQuaternion& q);
Eigen::Matrix3d euler_rate_map(const EulerAngles& xi);
Eigen::Matrix4d quaternion_rate_matrix(const Eigen::Vector3d& omega);

UnitQuaternion quat_from_euler(const EulerAngles& xi);
EulerAngles euler_from_quat(const UnitQuaternion& q);
UnitQuaternion normalized(const UnitQuaternion& q);
double quat_norm(const UnitQuaternion& q);

}  // namespace dmcc
