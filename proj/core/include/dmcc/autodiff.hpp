#pragma once

#include <array>
#include <cmath>
#include <concepts>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace dmcc::ad {

// Forward-mode dual number carrying N derivative directions. The base scalar
// B may itself be a Dual, which yields forward-over-forward second
// derivatives; that is how the discrete-Lagrangian gradients stay
// differentiable inside constraint Jacobians.
template <typename B, int N>
struct Dual {
  B v{};
  std::array<B, N> d{};

  Dual() = default;
  Dual(const B& value) : v(value) {}  // NOLINT(google-explicit-constructor)

  template <typename X = B>
    requires(!std::same_as<X, double>)
  Dual(double value) : v(value) {}  // NOLINT(google-explicit-constructor)

  static Dual seeded(const B& value, int dir) {
    Dual r(value);
    r.d[static_cast<size_t>(dir)] = B(1.0);
    return r;
  }

  Dual& operator+=(const Dual& o) {
    v += o.v;
    for (int i = 0; i < N; ++i) d[i] += o.d[i];
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    v -= o.v;
    for (int i = 0; i < N; ++i) d[i] -= o.d[i];
    return *this;
  }

  friend Dual operator+(const Dual& a, const Dual& b) {
    Dual r;
    r.v = a.v + b.v;
    for (int i = 0; i < N; ++i) r.d[i] = a.d[i] + b.d[i];
    return r;
  }
  friend Dual operator+(const Dual& a, double b) {
    Dual r = a;
    r.v += b;
    return r;
  }
  friend Dual operator+(double a, const Dual& b) { return b + a; }

  friend Dual operator-(const Dual& a, const Dual& b) {
    Dual r;
    r.v = a.v - b.v;
    for (int i = 0; i < N; ++i) r.d[i] = a.d[i] - b.d[i];
    return r;
  }
  friend Dual operator-(const Dual& a, double b) {
    Dual r = a;
    r.v -= b;
    return r;
  }
  friend Dual operator-(double a, const Dual& b) {
    Dual r;
    r.v = a - b.v;
    for (int i = 0; i < N; ++i) r.d[i] = -b.d[i];
    return r;
  }
  friend Dual operator-(const Dual& a) {
    Dual r;
    r.v = -a.v;
    for (int i = 0; i < N; ++i) r.d[i] = -a.d[i];
    return r;
  }

  friend Dual operator*(const Dual& a, const Dual& b) {
    Dual r;
    r.v = a.v * b.v;
    for (int i = 0; i < N; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
    return r;
  }
  friend Dual operator*(const Dual& a, double b) {
    Dual r;
    r.v = a.v * b;
    for (int i = 0; i < N; ++i) r.d[i] = a.d[i] * b;
    return r;
  }
  friend Dual operator*(double a, const Dual& b) { return b * a; }

  friend Dual operator/(const Dual& a, const Dual& b) {
    Dual r;
    r.v = a.v / b.v;
    for (int i = 0; i < N; ++i) r.d[i] = (a.d[i] - r.v * b.d[i]) / b.v;
    return r;
  }
  friend Dual operator/(const Dual& a, double b) {
    Dual r;
    r.v = a.v / b;
    for (int i = 0; i < N; ++i) r.d[i] = a.d[i] / b;
    return r;
  }
  friend Dual operator/(double a, const Dual& b) {
    Dual r;
    r.v = a / b.v;
    for (int i = 0; i < N; ++i) r.d[i] = -r.v / b.v * b.d[i];
    return r;
  }

  friend bool operator<(const Dual& a, const Dual& b) { return a.v < b.v; }
  friend bool operator>(const Dual& a, const Dual& b) { return a.v > b.v; }
  friend bool operator<=(const Dual& a, const Dual& b) { return a.v <= b.v; }
  friend bool operator>=(const Dual& a, const Dual& b) { return a.v >= b.v; }
};

inline double value(double x) { return x; }
template <typename B, int N>
double value(const Dual<B, N>& x) {
  return value(x.v);
}

template <typename B, int N>
Dual<B, N> sqrt(const Dual<B, N>& a) {
  using std::sqrt;
  Dual<B, N> r;
  r.v = sqrt(a.v);
  const B inv = 0.5 / r.v;
  for (int i = 0; i < N; ++i) r.d[i] = a.d[i] * inv;
  return r;
}

template <typename B, int N>
Dual<B, N> sin(const Dual<B, N>& a) {
  using std::cos;
  using std::sin;
  Dual<B, N> r;
  r.v = sin(a.v);
  const B c = cos(a.v);
  for (int i = 0; i < N; ++i) r.d[i] = a.d[i] * c;
  return r;
}

template <typename B, int N>
Dual<B, N> cos(const Dual<B, N>& a) {
  using std::cos;
  using std::sin;
  Dual<B, N> r;
  r.v = cos(a.v);
  const B s = -sin(a.v);
  for (int i = 0; i < N; ++i) r.d[i] = a.d[i] * s;
  return r;
}

template <typename B, int N>
Dual<B, N> tan(const Dual<B, N>& a) {
  using std::tan;
  Dual<B, N> r;
  r.v = tan(a.v);
  const B w = 1.0 + r.v * r.v;
  for (int i = 0; i < N; ++i) r.d[i] = a.d[i] * w;
  return r;
}

template <typename B, int N>
Dual<B, N> exp(const Dual<B, N>& a) {
  using std::exp;
  Dual<B, N> r;
  r.v = exp(a.v);
  for (int i = 0; i < N; ++i) r.d[i] = a.d[i] * r.v;
  return r;
}

// Seed batch width for Jacobian evaluation; wider blocks are swept in passes.
inline constexpr int kSeedWidth = 16;
using DualX = Dual<double, kSeedWidth>;

struct SparsityPattern {
  int rows = 0;
  int cols = 0;
  std::vector<std::pair<int, int>> entries;  // (row, col)
};

using ScalarDualFn = std::function<DualX(std::span<const DualX>)>;
using VectorDualFn = std::function<void(std::span<const DualX>, std::span<DualX>)>;

/// Exact gradient of a scalar function by forward sweeps of kSeedWidth seeds.
Eigen::VectorXd ad_gradient(const ScalarDualFn& f, const Eigen::VectorXd& x);

/// Greedy structurally-orthogonal column grouping; columns sharing a row get
/// distinct colors. Returns color index per column.
std::vector<int> color_columns(const SparsityPattern& pattern);

/// Exact sparse Jacobian via forward mode with seed batching over the
/// pattern's column colors. The pattern must cover all true nonzeros.
Eigen::SparseMatrix<double> ad_jacobian(const VectorDualFn& F, const Eigen::VectorXd& x,
                                        const SparsityPattern& pattern);

}  // namespace dmcc::ad
