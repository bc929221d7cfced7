#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dmcc/autodiff.hpp"
#include "dmcc/errors.hpp"

namespace dmcc {

enum class SolveStatus { Optimal, MaxIter, Infeasible, NumericFailure };

std::string to_string(SolveStatus s);

struct SolveReport {
  SolveStatus status = SolveStatus::NumericFailure;
  int outer_iterations = 0;
  int iterations = 0;  // total inner iterations
  double objective = 0.0;
  double max_violation = 0.0;
  double kkt_residual = 0.0;
  double wall_time_s = 0.0;
  std::string message;
};

struct SolverOptions {
  double feas_tol = 1e-6;
  double opt_tol = 1e-5;
  int max_outer = 60;
  int max_inner = 2000;         // per outer iteration
  int max_total_inner = 120000;
  double penalty_init = 10.0;
  double penalty_growth = 10.0;
  double penalty_cap = 1e10;
  double required_reduction = 0.25;  // grow penalty when violation shrinks less than this
  int lbfgs_memory = 15;
  int stagnation_limit = 5;
  bool verbose = false;
};

enum class BlockKind { Equality, Inequality };  // inequalities are g(x) <= 0

// Forward-over-forward scalar for exact block Hessians.
namespace ad_detail {
using DualXX = ad::Dual<ad::DualX, ad::kSeedWidth>;
}

// One row group of the problem. Blocks read only the variables listed in
// `args`, which doubles as the Jacobian sparsity declaration.
struct ConstraintBlock {
  std::string name;
  BlockKind kind = BlockKind::Equality;
  std::vector<int> args;
  int rows = 0;
  bool linear = false;  // Jacobian evaluated once and cached; no curvature
  std::function<void(std::span<const double>, std::span<double>)> eval;
  std::function<void(std::span<const ad::DualX>, std::span<ad::DualX>)> eval_ad;
  std::function<void(std::span<const ad_detail::DualXX>, std::span<ad_detail::DualXX>)> eval_ad2;
};

struct ObjectiveTerm {
  std::vector<int> args;
  bool linear = false;
  std::function<double(std::span<const double>)> eval;
  std::function<ad::DualX(std::span<const ad::DualX>)> eval_ad;
  std::function<ad_detail::DualXX(std::span<const ad_detail::DualXX>)> eval_ad2;
};

/// Sparse NLP: min f(x) s.t. c_eq(x) = 0, c_ineq(x) <= 0, lb <= x <= ub.
/// Objective and constraints are sums/stacks of small argument-local blocks.
struct NlpProblem {
  int n_vars = 0;
  std::vector<double> lb, ub, x0;
  std::vector<ObjectiveTerm> objective_terms;
  std::vector<ConstraintBlock> blocks;

  int add_variable(double lower, double upper, double guess);
  int add_variables(int count, double lower, double upper, double guess);
  void validate() const;

  template <typename F>
  void add_objective_term(std::vector<int> args, F fn, bool linear = false) {
    ObjectiveTerm t;
    t.args = std::move(args);
    t.linear = linear;
    t.eval = [fn](std::span<const double> in) { return fn(in); };
    t.eval_ad = [fn](std::span<const ad::DualX> in) { return fn(in); };
    t.eval_ad2 = [fn](std::span<const ad_detail::DualXX> in) { return fn(in); };
    objective_terms.push_back(std::move(t));
  }

  template <typename F>
  void add_block(std::string name, BlockKind kind, std::vector<int> args, int rows, bool linear,
                 F fn) {
    ConstraintBlock b;
    b.name = std::move(name);
    b.kind = kind;
    b.args = std::move(args);
    b.rows = rows;
    b.linear = linear;
    b.eval = [fn](std::span<const double> in, std::span<double> out) { fn(in, out); };
    b.eval_ad = [fn](std::span<const ad::DualX> in, std::span<ad::DualX> out) { fn(in, out); };
    b.eval_ad2 = [fn](std::span<const ad_detail::DualXX> in, std::span<ad_detail::DualXX> out) {
      fn(in, out);
    };
    blocks.push_back(std::move(b));
  }
};

struct Multipliers {
  Eigen::VectorXd eq;
  Eigen::VectorXd ineq;
};

struct SolveResult {
  Eigen::VectorXd x;
  Multipliers multipliers;
  SolveReport report;
};

/// Augmented-Lagrangian outer loop with a projected quasi-Newton (L-BFGS)
/// inner solve on the bound-constrained subproblem. Deterministic for a
/// fixed problem, options, and guess.
SolveResult solve(const NlpProblem& problem, const SolverOptions& options = {});

/// Residual replay: recomputes constraint values at x and returns the
/// maximum violation (equalities as |c|, inequalities as max(0, g)).
double max_constraint_violation(const NlpProblem& problem, const Eigen::VectorXd& x);

}  // namespace dmcc
