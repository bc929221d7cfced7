#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dmcc/discrete_mechanics.hpp"
#include "dmcc/nlp.hpp"
#include "dmcc/targets.hpp"

namespace dmcc {

/// Norm smoothing used in contact costs/constraints; the optimum sits at
/// zero distance where the Euclidean norm is not differentiable.
inline constexpr double kSmoothingDelta = 1e-6;

/// Progress-index threshold that marks a knot as a contact knot in reports.
inline constexpr double kEpsilonActive = 1e-3;

struct HandoverSpec {
  Vec7d q_start{}, qdot_start{}, q_end{}, qdot_end{};
  TargetTrack target;
  int N = 50;
  double kappa_init = 2.0;
  double nu_max = 0.02;           // m
  double c_limit_velocity = 0.01;  // m/s
  double c_limit_heading = 0.1;    // rad
  double c_u = 3e-3;
  std::optional<Vec5d> u_ref;      // defaults to hover with the servo at rest
  double t_min = 0.5, t_max = 60.0;

  Vec5d effective_u_ref(const ModelParams& P) const;
  void validate(const ModelParams& P) const;
};

struct PlanResult {
  KnotGrid grid;
  DiscretePath path;
  std::vector<double> epsilon;  // N entries
  std::vector<double> kappa;    // N+1 entries
  std::vector<double> nu;       // N entries
  SolveReport report;
  double objective = 0.0;
  std::vector<Vec3d> p_ee;  // end-effector at every knot

  std::vector<int> active_knots() const;
  double epsilon_sum() const;
};

enum class RaceDynamics { Del, Rk4Collocation };

struct RaceSpec {
  std::vector<Vec3d> waypoints;
  double pass_tolerance = 0.05;  // m
  Vec7d q_start{}, q_end{};      // hover boundary states, alpha frozen at 0
  int N = 0;                     // 0 selects the default of 30 knots per segment
  RaceDynamics mode = RaceDynamics::Del;
  double t_min = 0.5, t_max = 30.0;
  double c_u = 3e-3;

  int knot_count() const {
    return N > 0 ? N : 30 * (static_cast<int>(waypoints.size()) + 1);
  }
  void validate(const ModelParams& P) const;
};

struct RaceResult {
  KnotGrid grid;
  RaceDynamics mode = RaceDynamics::Del;
  std::vector<Vec7d> q_knots;             // DEL mode
  std::vector<Vec5d> u_knots;             // DEL mode
  std::vector<Vec<double, 12>> x_knots;   // RK4 mode
  std::vector<Vec4d> u4_knots;            // RK4 mode
  std::vector<std::vector<double>> epsilon, kappa, nu;  // per waypoint chain
  SolveReport report;

  Vec3d position(int k) const;
};

/// Assembles the time-optimal handover NLP: decision vector
/// [t_N, q_0..q_N, u_0..u_N, eps_0..eps_{N-1}, kappa_0..kappa_N,
///  nu_0..nu_{N-1}], forced discrete Euler-Lagrange dynamics, discrete
/// Legendre boundary conditions, the progress chain, and the relaxed
/// contact/velocity/heading complementarity conditions.
NlpProblem build_handover_nlp(const HandoverSpec& spec, const ModelParams& P);

/// Linear interpolation between boundary states, hover inputs, midpoint
/// travel time, and a uniformly decreasing progress chain.
Eigen::VectorXd initial_guess(const HandoverSpec& spec, const ModelParams& P);

PlanResult plan_handover(const HandoverSpec& spec, const ModelParams& P,
                         const SolverOptions& options = {});

NlpProblem build_race_nlp(const RaceSpec& spec, const ModelParams& P);
RaceResult plan_race(const RaceSpec& spec, const ModelParams& P,
                     const SolverOptions& options = {});

struct PlanCheck {
  std::string name;
  bool ok = false;
  double value = 0.0;
  double limit = 0.0;
};

/// Invariant suite over a solved plan: progress telescoping, chain identity,
/// box bounds, and the epsilon-gated contact conditions.
std::vector<PlanCheck> verify_plan(const PlanResult& plan, const HandoverSpec& spec,
                                   const ModelParams& P, double feas_tol = 1e-6);

}  // namespace dmcc
