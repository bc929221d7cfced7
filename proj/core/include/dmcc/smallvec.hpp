#pragma once

#include <array>
#include <cmath>

#include <Eigen/Dense>

#include "dmcc/autodiff.hpp"

namespace dmcc {

// Fixed-size vectors and matrices over an arbitrary scalar (double or a
// Dual). Kept deliberately tiny; Eigen handles the double-only dense work.
template <typename T, int N>
struct Vec {
  std::array<T, N> a{};

  T& operator[](int i) { return a[static_cast<size_t>(i)]; }
  const T& operator[](int i) const { return a[static_cast<size_t>(i)]; }

  friend Vec operator+(const Vec& x, const Vec& y) {
    Vec r;
    for (int i = 0; i < N; ++i) r[i] = x[i] + y[i];
    return r;
  }
  friend Vec operator-(const Vec& x, const Vec& y) {
    Vec r;
    for (int i = 0; i < N; ++i) r[i] = x[i] - y[i];
    return r;
  }
  friend Vec operator-(const Vec& x) {
    Vec r;
    for (int i = 0; i < N; ++i) r[i] = -x[i];
    return r;
  }
  friend Vec operator*(const Vec& x, const T& s) {
    Vec r;
    for (int i = 0; i < N; ++i) r[i] = x[i] * s;
    return r;
  }
  friend Vec operator*(const T& s, const Vec& x) { return x * s; }
  Vec& operator+=(const Vec& y) {
    for (int i = 0; i < N; ++i) a[i] = a[i] + y[i];
    return *this;
  }
};

template <typename T>
using Vec3 = Vec<T, 3>;
template <typename T>
using Vec4 = Vec<T, 4>;
template <typename T>
using Vec5 = Vec<T, 5>;
template <typename T>
using Vec7 = Vec<T, 7>;

using Vec3d = Vec<double, 3>;
using Vec4d = Vec<double, 4>;
using Vec5d = Vec<double, 5>;
using Vec7d = Vec<double, 7>;

template <typename T, int N>
T dot(const Vec<T, N>& x, const Vec<T, N>& y) {
  T r = x[0] * y[0];
  for (int i = 1; i < N; ++i) r += x[i] * y[i];
  return r;
}

template <typename T>
Vec3<T> cross(const Vec3<T>& x, const Vec3<T>& y) {
  return {x[1] * y[2] - x[2] * y[1], x[2] * y[0] - x[0] * y[2], x[0] * y[1] - x[1] * y[0]};
}

template <int Off, int Len, typename T, int N>
Vec<T, Len> slice(const Vec<T, N>& x) {
  static_assert(Off + Len <= N);
  Vec<T, Len> r;
  for (int i = 0; i < Len; ++i) r[i] = x[Off + i];
  return r;
}

// sqrt(|x|^2 + delta^2) - delta: differentiable at zero, underestimates the
// Euclidean norm by at most delta.
template <typename T, int N>
T smooth_norm(const Vec<T, N>& x, double delta) {
  using std::sqrt;
  return sqrt(dot(x, x) + delta * delta) - delta;
}

template <typename T, typename S, int N>
Vec<T, N> to_scalar(const Vec<S, N>& x) {
  Vec<T, N> r;
  for (int i = 0; i < N; ++i) r[i] = T(x[i]);
  return r;
}

template <typename T>
struct Mat3 {
  std::array<T, 9> m{};  // row-major

  T& operator()(int r, int c) { return m[static_cast<size_t>(3 * r + c)]; }
  const T& operator()(int r, int c) const { return m[static_cast<size_t>(3 * r + c)]; }

  static Mat3 identity() {
    Mat3 r;
    r(0, 0) = T(1.0);
    r(1, 1) = T(1.0);
    r(2, 2) = T(1.0);
    return r;
  }

  friend Vec3<T> operator*(const Mat3& A, const Vec3<T>& x) {
    Vec3<T> r;
    for (int i = 0; i < 3; ++i) r[i] = A(i, 0) * x[0] + A(i, 1) * x[1] + A(i, 2) * x[2];
    return r;
  }
  friend Mat3 operator*(const Mat3& A, const Mat3& B) {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        r(i, j) = A(i, 0) * B(0, j) + A(i, 1) * B(1, j) + A(i, 2) * B(2, j);
    return r;
  }
};

template <typename T>
Mat3<T> transpose(const Mat3<T>& A) {
  Mat3<T> r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = A(j, i);
  return r;
}

// A is double-valued (model constants); x may be dual.
template <typename T>
Vec3<T> mat_vec_d(const Mat3<double>& A, const Vec3<T>& x) {
  Vec3<T> r;
  for (int i = 0; i < 3; ++i) r[i] = x[0] * A(i, 0) + x[1] * A(i, 1) + x[2] * A(i, 2);
  return r;
}

Mat3<double> inverse3(const Mat3<double>& A);

template <typename T>
struct Mat4 {
  std::array<T, 16> m{};
  T& operator()(int r, int c) { return m[static_cast<size_t>(4 * r + c)]; }
  const T& operator()(int r, int c) const { return m[static_cast<size_t>(4 * r + c)]; }

  friend Vec4<T> operator*(const Mat4& A, const Vec4<T>& x) {
    Vec4<T> r;
    for (int i = 0; i < 4; ++i)
      r[i] = A(i, 0) * x[0] + A(i, 1) * x[1] + A(i, 2) * x[2] + A(i, 3) * x[3];
    return r;
  }
};

inline Eigen::Vector3d to_eigen(const Vec3d& v) { return {v[0], v[1], v[2]}; }
inline Eigen::Matrix3d to_eigen(const Mat3<double>& m) {
  Eigen::Matrix3d r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = m(i, j);
  return r;
}

template <int N>
Eigen::Matrix<double, N, 1> to_eigen(const Vec<double, N>& v) {
  Eigen::Matrix<double, N, 1> r;
  for (int i = 0; i < N; ++i) r[i] = v[i];
  return r;
}

template <int N>
Vec<double, N> from_eigen(const Eigen::Matrix<double, N, 1>& v) {
  Vec<double, N> r;
  for (int i = 0; i < N; ++i) r[i] = v[i];
  return r;
}

}  // namespace dmcc
