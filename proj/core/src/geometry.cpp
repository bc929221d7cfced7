#include "dmcc/geometry.hpp"

namespace dmcc {

Mat3<double> inverse3(const Mat3<double>& A) {
  const double a = A(0, 0), b = A(0, 1), c = A(0, 2);
  const double d = A(1, 0), e = A(1, 1), f = A(1, 2);
  const double g = A(2, 0), h = A(2, 1), i = A(2, 2);
  const double det = a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g);
  Mat3<double> R;
  R(0, 0) = (e * i - f * h) / det;
  R(0, 1) = (c * h - b * i) / det;
  R(0, 2) = (b * f - c * e) / det;
  R(1, 0) = (f * g - d * i) / det;
  R(1, 1) = (a * i - c * g) / det;
  R(1, 2) = (c * d - a * f) / det;
  R(2, 0) = (d * h - e * g) / det;
  R(2, 1) = (b * g - a * h) / det;
  R(2, 2) = (a * e - b * d) / det;
  return R;
}

Eigen::Matrix3d rotation_from_euler(const EulerAngles& xi) {
  return to_eigen(rotation_from_euler<double>(xi.vec()));
}

Eigen::Matrix3d rotation_from_quaternion(const UnitQuaternion& q) {
  if (std::abs(quat_norm(q) - 1.0) > kQuaternionNormTol)
    throw NotNormalized("rotation_from_quaternion: quaternion norm deviates from 1");
  return to_eigen(rotation_from_quaternion<double>(q.vec()));
}

Eigen::Matrix3d euler_rate_map(const EulerAngles& xi) {
  return to_eigen(euler_rate_map<double>(xi.vec()));
}

Eigen::Matrix4d quaternion_rate_matrix(const Eigen::Vector3d& omega) {
  const Mat4<double> Q = quaternion_rate_matrix<double>(Vec3d{omega[0], omega[1], omega[2]});
  Eigen::Matrix4d R;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) R(i, j) = Q(i, j);
  return R;
}

UnitQuaternion quat_from_euler(const EulerAngles& xi) {
  const double cr = std::cos(0.5 * xi.phi), sr = std::sin(0.5 * xi.phi);
  const double cp = std::cos(0.5 * xi.theta), sp = std::sin(0.5 * xi.theta);
  const double cy = std::cos(0.5 * xi.psi), sy = std::sin(0.5 * xi.psi);
  UnitQuaternion q;
  q.w = cr * cp * cy + sr * sp * sy;
  q.x = sr * cp * cy - cr * sp * sy;
  q.y = cr * sp * cy + sr * cp * sy;
  q.z = cr * cp * sy - sr * sp * cy;
  return normalized(q);
}

EulerAngles euler_from_quat(const UnitQuaternion& q) {
  EulerAngles xi;
  xi.phi = std::atan2(2.0 * (q.w * q.x + q.y * q.z), 1.0 - 2.0 * (q.x * q.x + q.y * q.y));
  const double s = std::clamp(2.0 * (q.w * q.y - q.z * q.x), -1.0, 1.0);
  xi.theta = std::asin(s);
  xi.psi = std::atan2(2.0 * (q.w * q.z + q.x * q.y), 1.0 - 2.0 * (q.y * q.y + q.z * q.z));
  return xi;
}

double quat_norm(const UnitQuaternion& q) {
  return std::sqrt(q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z);
}

UnitQuaternion normalized(const UnitQuaternion& q) {
  const double n = quat_norm(q);
  if (n <= 0.0 || !std::isfinite(n)) throw NotNormalized("normalized: zero or non-finite quaternion");
  return {q.w / n, q.x / n, q.y / n, q.z / n};
}

}  // namespace dmcc
