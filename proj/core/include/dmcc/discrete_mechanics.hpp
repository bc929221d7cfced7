#pragma once

#include <span>
#include <utility>
#include <vector>

#include "dmcc/model.hpp"

namespace dmcc {

struct KnotGrid {
  int N = 0;       // interval count
  double t_N = 0;  // total travel time, t_N = N * dt
  double dt() const { return t_N / N; }
};

struct DiscretePath {
  std::vector<Vec7d> q_knots;  // N+1
  std::vector<Vec5d> u_knots;  // N+1
};

// Verlet discrete Lagrangian: the action over one interval approximated by
// averaging L at both endpoints with the interval's constant average velocity.
template <typename T>
T verlet_ld(const Vec7<T>& q_k, const Vec7<T>& q_k1, const T& dt, const ModelParams& P) {
  const Vec7<T> qd = (q_k1 - q_k) * (1.0 / dt);
  return 0.5 * dt * (lagrangian(q_k, qd, P) + lagrangian(q_k1, qd, P));
}

// d Ld / d q_k and d Ld / d q_{k+1}, by forward AD through verlet_ld. These
// stay differentiable when T itself is a dual, which is what the planner's
// constraint Jacobians rely on.
template <typename T>
void grad_ld(const Vec7<T>& q_k, const Vec7<T>& q_k1, const T& dt, const ModelParams& P,
             Vec7<T>* d_qk, Vec7<T>* d_qk1) {
  using D = ad::Dual<T, 14>;
  Vec7<D> a, b;
  for (int i = 0; i < 7; ++i) {
    a[i] = D::seeded(q_k[i], i);
    b[i] = D::seeded(q_k1[i], 7 + i);
  }
  const D ld = verlet_ld(a, b, D(dt), P);
  for (int i = 0; i < 7; ++i) {
    (*d_qk)[i] = ld.d[i];
    (*d_qk1)[i] = ld.d[7 + i];
  }
}

/// Continuous generalized impulse dL/dqdot, by forward AD.
template <typename T>
Vec7<T> lagrangian_momentum(const Vec7<T>& q, const Vec7<T>& qdot, const ModelParams& P) {
  using D = ad::Dual<T, 7>;
  Vec7<D> qq, qd;
  for (int i = 0; i < 7; ++i) {
    qq[i] = D(q[i]);
    qd[i] = D::seeded(qdot[i], i);
  }
  const D L = lagrangian(qq, qd, P);
  Vec7<T> m;
  for (int i = 0; i < 7; ++i) m[i] = L.d[i];
  return m;
}

// Left/right discrete forces of interval k; both equal dt/4 (f_{k+1} + f_k).
template <typename T>
std::pair<Vec7<T>, Vec7<T>> discrete_forces(const Vec5<T>& u_k, const Vec5<T>& u_k1,
                                            const Vec7<T>& q_k, const Vec7<T>& q_k1, const T& dt,
                                            const ModelParams& P) {
  const Vec7<T> f = (generalized_force(q_k, u_k, P) + generalized_force(q_k1, u_k1, P)) * (dt * 0.25);
  return {f, f};
}

// Forced discrete Euler-Lagrange residual at an interior knot; zero along a
// dynamically consistent path.
template <typename T>
Vec7<T> del_residual(const Vec7<T>& q_km1, const Vec7<T>& q_k, const Vec7<T>& q_k1,
                     const Vec5<T>& u_km1, const Vec5<T>& u_k, const Vec5<T>& u_k1, const T& dt,
                     const ModelParams& P) {
  Vec7<T> d1_prev, d2_prev, d1_next, d2_next;
  grad_ld(q_km1, q_k, dt, P, &d1_prev, &d2_prev);
  grad_ld(q_k, q_k1, dt, P, &d1_next, &d2_next);
  const Vec7<T> f_centre = generalized_force(q_k, u_k, P);
  const Vec7<T> forces = (generalized_force(q_km1, u_km1, P) + f_centre + f_centre +
                          generalized_force(q_k1, u_k1, P)) *
                         (dt * 0.25);
  return d2_prev + d1_next + forces;
}

// Discrete Legendre boundary conditions matching prescribed (q, qdot) at both
// ends. qdot enters as data, not as a decision quantity.
template <typename T>
Vec7<T> boundary_residual_initial(const Vec7<T>& q0, const Vec7<T>& q1, const Vec7d& qdot0,
                                  const Vec5<T>& u0, const Vec5<T>& u1, const T& dt,
                                  const ModelParams& P) {
  Vec7<T> d1, d2;
  grad_ld(q0, q1, dt, P, &d1, &d2);
  const Vec7<T> f_minus =
      (generalized_force(q0, u0, P) + generalized_force(q1, u1, P)) * (dt * 0.25);
  return lagrangian_momentum(q0, to_scalar<T>(qdot0), P) + d1 + f_minus;
}

template <typename T>
Vec7<T> boundary_residual_final(const Vec7<T>& q_Nm1, const Vec7<T>& q_N, const Vec7d& qdotN,
                                const Vec5<T>& u_Nm1, const Vec5<T>& u_N, const T& dt,
                                const ModelParams& P) {
  Vec7<T> d1, d2;
  grad_ld(q_Nm1, q_N, dt, P, &d1, &d2);
  const Vec7<T> f_plus =
      (generalized_force(q_Nm1, u_Nm1, P) + generalized_force(q_N, u_N, P)) * (dt * 0.25);
  return d2 + f_plus - lagrangian_momentum(q_N, to_scalar<T>(qdotN), P);
}

inline std::pair<Vec7d, Vec7d> boundary_residuals(const Vec7d& q0, const Vec7d& q1,
                                                  const Vec7d& qdot0, const Vec5d& u0,
                                                  const Vec5d& u1, const Vec7d& q_Nm1,
                                                  const Vec7d& q_N, const Vec7d& qdotN,
                                                  const Vec5d& u_Nm1, const Vec5d& u_N, double dt,
                                                  const ModelParams& P) {
  return {boundary_residual_initial<double>(q0, q1, qdot0, u0, u1, dt, P),
          boundary_residual_final<double>(q_Nm1, q_N, qdotN, u_Nm1, u_N, dt, P)};
}

struct NewtonOptions {
  double tol = 1e-10;
  int max_iterations = 50;
  double backtrack_factor = 0.5;
  double min_step = 1e-4;
};

/// Solves the forced DEL for q_{k+1} by damped Newton iteration. When the
/// arm is disabled in the params the alpha coordinate is held frozen.
Vec7d variational_step(const Vec7d& q_km1, const Vec7d& q_k, const Vec5d& u_km1, const Vec5d& u_k,
                       const Vec5d& u_k1, double dt, const ModelParams& P,
                       const NewtonOptions& opts = {});

/// Seeds q_1 from the initial boundary condition, then marches the forced
/// DEL forward. u_knots must hold N+1 entries.
DiscretePath simulate(const Vec7d& q0, const Vec7d& qdot0, std::span<const Vec5d> u_knots,
                      const KnotGrid& grid, const ModelParams& P, const NewtonOptions& opts = {});

/// Discrete Legendre momentum at knot k of a path (Eq.-level counterpart of
/// the continuous impulse); used by conservation checks and energy readouts.
Vec7d discrete_momentum(const Vec7d& q_km1, const Vec7d& q_k, const Vec5d& u_km1, const Vec5d& u_k,
                        double dt, const ModelParams& P);

}  // namespace dmcc
