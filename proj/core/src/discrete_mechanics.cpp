#include "dmcc/discrete_mechanics.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "dmcc/errors.hpp"

namespace dmcc {

namespace {

double norm_inf(const Vec7d& v, bool skip_alpha) {
  double r = 0.0;
  for (int i = 0; i < (skip_alpha ? 6 : 7); ++i) r = std::max(r, std::abs(v[i]));
  return r;
}

}  // namespace

Vec7d variational_step(const Vec7d& q_km1, const Vec7d& q_k, const Vec5d& u_km1, const Vec5d& u_k,
                       const Vec5d& u_k1, double dt, const ModelParams& P,
                       const NewtonOptions& opts) {
  const bool frozen_arm = P.arm_disabled();
  const int n = frozen_arm ? 6 : 7;

  Vec7d q = q_k + (q_k - q_km1);  // Verlet extrapolation start
  if (frozen_arm) q[6] = q_k[6];

  auto residual = [&](const Vec7d& q_next) {
    return del_residual<double>(q_km1, q_k, q_next, u_km1, u_k, u_k1, dt, P);
  };

  Vec7d r = residual(q);
  double rn = norm_inf(r, frozen_arm);
  for (int it = 0; it < opts.max_iterations; ++it) {
    if (rn < opts.tol) return q;

    using D = ad::Dual<double, 7>;
    Vec7<D> qd;
    for (int i = 0; i < 7; ++i) qd[i] = D::seeded(q[i], i);
    Vec7<D> qa = to_scalar<D>(q_km1), qb = to_scalar<D>(q_k);
    Vec5<D> ua = to_scalar<D>(u_km1), ub = to_scalar<D>(u_k), uc = to_scalar<D>(u_k1);
    const Vec7<D> rd = del_residual(qa, qb, qd, ua, ub, uc, D(dt), P);

    Eigen::MatrixXd J(n, n);
    Eigen::VectorXd rhs(n);
    for (int i = 0; i < n; ++i) {
      rhs[i] = -rd[i].v;
      for (int j = 0; j < n; ++j) J(i, j) = rd[i].d[j];
    }
    const Eigen::VectorXd step = J.partialPivLu().solve(rhs);
    if (!step.allFinite())
      throw NoConvergence("variational_step: singular Newton system", it, rn);

    double s = 1.0;
    Vec7d q_try;
    double rn_try = rn;
    while (true) {
      q_try = q;
      for (int i = 0; i < n; ++i) q_try[i] += s * step[i];
      rn_try = norm_inf(residual(q_try), frozen_arm);
      if (rn_try < rn || s <= opts.min_step) break;
      s *= opts.backtrack_factor;
    }
    q = q_try;
    r = residual(q);
    rn = norm_inf(r, frozen_arm);
  }
  if (rn < opts.tol) return q;
  throw NoConvergence("variational_step: Newton did not converge", opts.max_iterations, rn);
}

DiscretePath simulate(const Vec7d& q0, const Vec7d& qdot0, std::span<const Vec5d> u_knots,
                      const KnotGrid& grid, const ModelParams& P, const NewtonOptions& opts) {
  if (static_cast<int>(u_knots.size()) != grid.N + 1)
    throw ValidationError("simulate.u_knots", "expected N+1 control knots");
  const double dt = grid.dt();
  const bool frozen_arm = P.arm_disabled();
  const int n = frozen_arm ? 6 : 7;

  DiscretePath path;
  path.q_knots.reserve(grid.N + 1);
  path.u_knots.assign(u_knots.begin(), u_knots.end());
  path.q_knots.push_back(q0);

  // Seed q1 from the initial discrete Legendre condition.
  {
    Vec7d q1 = q0 + qdot0 * dt;
    if (frozen_arm) q1[6] = q0[6];
    auto residual = [&](const Vec7d& q) {
      return boundary_residual_initial<double>(q0, q, qdot0, u_knots[0], u_knots[1], dt, P);
    };
    double rn = norm_inf(residual(q1), frozen_arm);
    for (int it = 0; it < opts.max_iterations && rn >= opts.tol; ++it) {
      using D = ad::Dual<double, 7>;
      Vec7<D> qd;
      for (int i = 0; i < 7; ++i) qd[i] = D::seeded(q1[i], i);
      const Vec7<D> rd = boundary_residual_initial(to_scalar<D>(q0), qd, qdot0,
                                                   to_scalar<D>(u_knots[0]),
                                                   to_scalar<D>(u_knots[1]), D(dt), P);
      Eigen::MatrixXd J(n, n);
      Eigen::VectorXd rhs(n);
      for (int i = 0; i < n; ++i) {
        rhs[i] = -rd[i].v;
        for (int j = 0; j < n; ++j) J(i, j) = rd[i].d[j];
      }
      const Eigen::VectorXd step = J.partialPivLu().solve(rhs);
      if (!step.allFinite()) throw NoConvergence("simulate: singular boundary seed system", it, rn);
      double s = 1.0;
      while (true) {
        Vec7d q_try = q1;
        for (int i = 0; i < n; ++i) q_try[i] += s * step[i];
        const double rn_try = norm_inf(residual(q_try), frozen_arm);
        if (rn_try < rn || s <= opts.min_step) {
          q1 = q_try;
          rn = rn_try;
          break;
        }
        s *= opts.backtrack_factor;
      }
    }
    if (rn >= opts.tol)
      throw NoConvergence("simulate: boundary seed did not converge", opts.max_iterations, rn);
    path.q_knots.push_back(q1);
  }

  for (int k = 1; k < grid.N; ++k) {
    try {
      path.q_knots.push_back(variational_step(path.q_knots[k - 1], path.q_knots[k], u_knots[k - 1],
                                              u_knots[k], u_knots[k + 1], dt, P, opts));
    } catch (const NoConvergence& e) {
      throw NoConvergence("simulate: step " + std::to_string(k) + " failed: " + e.what(),
                          e.iterations, e.residual);
    }
  }
  return path;
}

Vec7d discrete_momentum(const Vec7d& q_km1, const Vec7d& q_k, const Vec5d& u_km1, const Vec5d& u_k,
                        double dt, const ModelParams& P) {
  Vec7d d1, d2;
  grad_ld<double>(q_km1, q_k, dt, P, &d1, &d2);
  const Vec7d f_plus =
      (generalized_force<double>(q_km1, u_km1, P) + generalized_force<double>(q_k, u_k, P)) *
      (dt * 0.25);
  return d2 + f_plus;
}

}  // namespace dmcc
