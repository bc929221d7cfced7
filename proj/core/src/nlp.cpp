#include "dmcc/nlp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>

namespace {
struct PerfCounters {
  double t_value = 0, t_grad = 0, t_hess = 0, t_chol = 0;
  long n_value = 0, n_grad = 0, n_hess = 0, n_chol = 0;
};
PerfCounters g_perf;
struct ScopedTimer {
  double* acc;
  long* cnt;
  std::chrono::steady_clock::time_point t0;
  ScopedTimer(double* a, long* c) : acc(a), cnt(c), t0(std::chrono::steady_clock::now()) {}
  ~ScopedTimer() {
    *acc += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    ++*cnt;
  }
};
}  // namespace

namespace dmcc {

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::MaxIter: return "max_iter";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::NumericFailure: return "numeric_failure";
  }
  return "unknown";
}

int NlpProblem::add_variable(double lower, double upper, double guess) {
  lb.push_back(lower);
  ub.push_back(upper);
  x0.push_back(guess);
  return n_vars++;
}

int NlpProblem::add_variables(int count, double lower, double upper, double guess) {
  const int first = n_vars;
  for (int i = 0; i < count; ++i) add_variable(lower, upper, guess);
  return first;
}

void NlpProblem::validate() const {
  if (n_vars <= 0) throw ValidationError("nlp.n_vars", "problem has no variables");
  if (static_cast<int>(lb.size()) != n_vars || static_cast<int>(ub.size()) != n_vars ||
      static_cast<int>(x0.size()) != n_vars)
    throw ValidationError("nlp.bounds", "bound/guess arrays inconsistent with n_vars");
  for (int i = 0; i < n_vars; ++i) {
    if (!(lb[i] <= ub[i])) throw ValidationError("nlp.bounds", "lower bound exceeds upper bound");
    if (!std::isfinite(x0[i])) throw ValidationError("nlp.x0", "non-finite initial guess");
  }
  for (const auto& b : blocks) {
    if (b.rows <= 0) throw ValidationError("nlp.block." + b.name, "empty block");
    for (int a : b.args)
      if (a < 0 || a >= n_vars)
        throw ValidationError("nlp.block." + b.name, "argument index out of range");
    if (!b.eval || !b.eval_ad) throw ValidationError("nlp.block." + b.name, "missing callbacks");
  }
}

namespace {

struct BlockState {
  const ConstraintBlock* block = nullptr;
  int row_offset = 0;  // within the stacked eq or ineq vector
  Eigen::MatrixXd jac;  // rows x nargs
  bool cached = false;
  std::vector<Eigen::MatrixXd> hess;  // per-row second derivatives, lazily refreshed
  Eigen::VectorXd hess_x;             // arg values the tensors were computed at
  bool hess_valid = false;
};

struct TermState {
  const ObjectiveTerm* term = nullptr;
  Eigen::MatrixXd hess;
  Eigen::VectorXd hess_x;
  bool hess_valid = false;
};

// tensors only go stale when their own arguments move appreciably


template <typename State>
bool hess_stale(const State& s, const std::vector<int>& args, const Eigen::VectorXd& x) {
  if (!s.hess_valid) return true;
  for (size_t a = 0; a < args.size(); ++a)
    if (std::abs(x[args[a]] - s.hess_x[static_cast<int>(a)]) > kHessStaleTol) return true;
  return false;
}

class Evaluator {
 public:
  Evaluator(const NlpProblem& p) : p_(p) {
    for (const auto& t : p.objective_terms) terms_.push_back({&t, {}, {}, false});
    for (const auto& b : p.blocks) {
      BlockState s;
      s.block = &b;
      s.jac.resize(b.rows, static_cast<int>(b.args.size()));
      if (b.kind == BlockKind::Equality) {
        s.row_offset = m_eq_;
        m_eq_ += b.rows;
        eq_.push_back(std::move(s));
      } else {
        s.row_offset = m_in_;
        m_in_ += b.rows;
        in_.push_back(std::move(s));
      }
    }
  }

  int m_eq() const { return m_eq_; }
  int m_in() const { return m_in_; }

  double objective(const Eigen::VectorXd& x) {
    double f = 0.0;
    for (const auto& t : p_.objective_terms) {
      gather(x, t.args);
      f += t.eval({xloc_.data(), t.args.size()});
    }
    return f;
  }

  Eigen::VectorXd objective_gradient(const Eigen::VectorXd& x) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(p_.n_vars);
    for (const auto& t : p_.objective_terms) {
      const int m = static_cast<int>(t.args.size());
      for (int base = 0; base < m; base += ad::kSeedWidth) {
        const int width = std::min(ad::kSeedWidth, m - base);
        xloc_ad_.assign(t.args.size(), ad::DualX());
        for (int j = 0; j < m; ++j) xloc_ad_[j] = ad::DualX(x[t.args[j]]);
        for (int k = 0; k < width; ++k) xloc_ad_[base + k].d[k] = 1.0;
        const ad::DualX out = t.eval_ad({xloc_ad_.data(), t.args.size()});
        for (int k = 0; k < width; ++k) g[t.args[base + k]] += out.d[k];
      }
    }
    return g;
  }

  void constraints(const Eigen::VectorXd& x, Eigen::VectorXd* ceq, Eigen::VectorXd* cin) {
    ceq->resize(m_eq_);
    cin->resize(m_in_);
    for (auto& s : eq_) eval_block(x, s, *ceq);
    for (auto& s : in_) eval_block(x, s, *cin);
  }

  void jacobians(const Eigen::VectorXd& x) {
    for (auto& s : eq_) eval_jacobian(x, s);
    for (auto& s : in_) eval_jacobian(x, s);
  }

  // grad += sum_blocks J_block^T w  (w sliced from the stacked weight vector)
  void accumulate_jtw(const Eigen::VectorXd& w_eq, const Eigen::VectorXd& w_in,
                      Eigen::VectorXd* grad) const {
    for (const auto& s : eq_) accumulate_block(s, w_eq, grad);
    for (const auto& s : in_) accumulate_block(s, w_in, grad);
  }

  // Hessian of the augmented Lagrangian: rho J^T J over equality and active
  // inequality rows, plus the weighted exact constraint curvature and the
  // objective curvature. Tensors are recomputed lazily at x when stale.
  void assemble_newton(const Eigen::VectorXd& x, double rho, const Eigen::VectorXd& w_eq,
                       const Eigen::VectorXd& w_in, double stale_tol, Eigen::MatrixXd* H) {
    H->setZero();
    auto add_jac_row = [&](const BlockState& s, int r) {
      const auto& args = s.block->args;
      const int m = static_cast<int>(args.size());
      for (int a = 0; a < m; ++a) {
        const double ja = rho * s.jac(r, a);
        if (ja == 0.0) continue;
        for (int b = 0; b < m; ++b) (*H)(args[a], args[b]) += ja * s.jac(r, b);
      }
    };
    auto add_curvature = [&](BlockState& s, const Eigen::VectorXd& w) {
      if (s.block->linear) return;
      double wmax = 0.0;
      for (int r = 0; r < s.block->rows; ++r)
        wmax = std::max(wmax, std::abs(w[s.row_offset + r]));
      if (wmax == 0.0) return;
      if (hess_stale(s, s.block->args, x, stale_tol)) refresh_block_hessian(x, s);
      const auto& args = s.block->args;
      const int m = static_cast<int>(args.size());
      for (int r = 0; r < s.block->rows; ++r) {
        const double wr = w[s.row_offset + r];
        if (wr == 0.0) continue;
        const Eigen::MatrixXd& Hr = s.hess[static_cast<size_t>(r)];
        for (int a = 0; a < m; ++a)
          for (int b = 0; b < m; ++b) (*H)(args[a], args[b]) += wr * Hr(a, b);
      }
    };
    for (auto& s : eq_) {
      for (int r = 0; r < s.block->rows; ++r) add_jac_row(s, r);
      add_curvature(s, w_eq);
    }
    for (auto& s : in_) {
      for (int r = 0; r < s.block->rows; ++r)
        if (w_in[s.row_offset + r] > 0.0) add_jac_row(s, r);
      add_curvature(s, w_in);
    }
    for (auto& t : terms_) {
      if (t.term->linear) continue;
      if (hess_stale(t, t.term->args, x, stale_tol)) refresh_term_hessian(x, t);
      const auto& args = t.term->args;
      const int m = static_cast<int>(args.size());
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) (*H)(args[a], args[b]) += t.hess(a, b);
    }
  }

 private:
  void gather(const Eigen::VectorXd& x, const std::vector<int>& args) {
    xloc_.resize(args.size());
    for (size_t j = 0; j < args.size(); ++j) xloc_[j] = x[args[j]];
  }

  void eval_block(const Eigen::VectorXd& x, const BlockState& s, Eigen::VectorXd& out) {
    gather(x, s.block->args);
    cloc_.resize(s.block->rows);
    s.block->eval({xloc_.data(), xloc_.size()}, {cloc_.data(), cloc_.size()});
    for (int r = 0; r < s.block->rows; ++r) out[s.row_offset + r] = cloc_[r];
  }

  void eval_jacobian(const Eigen::VectorXd& x, BlockState& s) {
    if (s.block->linear && s.cached) return;
    const int m = static_cast<int>(s.block->args.size());
    cloc_ad_.resize(s.block->rows);
    for (int base = 0; base < m; base += ad::kSeedWidth) {
      const int width = std::min(ad::kSeedWidth, m - base);
      xloc_ad_.assign(s.block->args.size(), ad::DualX());
      for (int j = 0; j < m; ++j) xloc_ad_[j] = ad::DualX(x[s.block->args[j]]);
      for (int k = 0; k < width; ++k) xloc_ad_[base + k].d[k] = 1.0;
      std::fill(cloc_ad_.begin(), cloc_ad_.end(), ad::DualX());
      s.block->eval_ad({xloc_ad_.data(), xloc_ad_.size()}, {cloc_ad_.data(), cloc_ad_.size()});
      for (int r = 0; r < s.block->rows; ++r)
        for (int k = 0; k < width; ++k) s.jac(r, base + k) = cloc_ad_[r].d[k];
    }
    s.cached = true;
  }

  void refresh_block_hessian(const Eigen::VectorXd& x, BlockState& s) {
    ScopedTimer perf_timer(&g_perf.t_hess, &g_perf.n_hess);
    using ad_detail::DualXX;
    const auto& args = s.block->args;
    const int m = static_cast<int>(args.size());
    s.hess.assign(static_cast<size_t>(s.block->rows), Eigen::MatrixXd::Zero(m, m));
    std::vector<DualXX> in(static_cast<size_t>(m));
    std::vector<DualXX> out(static_cast<size_t>(s.block->rows));
    for (int bi = 0; bi < m; bi += ad::kSeedWidth) {
      const int wi = std::min(ad::kSeedWidth, m - bi);
      for (int bj = bi; bj < m; bj += ad::kSeedWidth) {
        const int wj = std::min(ad::kSeedWidth, m - bj);
        for (int a = 0; a < m; ++a) in[a] = DualXX(ad::DualX(x[args[a]]));
        for (int k = 0; k < wi; ++k) in[bi + k].d[k] = ad::DualX(1.0);
        for (int l = 0; l < wj; ++l) in[bj + l].v.d[l] = 1.0;
        std::fill(out.begin(), out.end(), DualXX());
        s.block->eval_ad2({in.data(), in.size()}, {out.data(), out.size()});
        for (int r = 0; r < s.block->rows; ++r) {
          Eigen::MatrixXd& Hr = s.hess[static_cast<size_t>(r)];
          for (int k = 0; k < wi; ++k)
            for (int l = 0; l < wj; ++l) {
              const double v = out[r].d[k].d[l];
              Hr(bi + k, bj + l) = v;
              Hr(bj + l, bi + k) = v;
            }
        }
      }
    }
    s.hess_valid = true;
    s.hess_x.resize(m);
    for (int a = 0; a < m; ++a) s.hess_x[a] = x[args[a]];
  }

  void refresh_term_hessian(const Eigen::VectorXd& x, TermState& t) {
    using ad_detail::DualXX;
    const auto& args = t.term->args;
    const int m = static_cast<int>(args.size());
    t.hess = Eigen::MatrixXd::Zero(m, m);
    std::vector<DualXX> in(static_cast<size_t>(m));
    for (int bi = 0; bi < m; bi += ad::kSeedWidth) {
      const int wi = std::min(ad::kSeedWidth, m - bi);
      for (int bj = bi; bj < m; bj += ad::kSeedWidth) {
        const int wj = std::min(ad::kSeedWidth, m - bj);
        for (int a = 0; a < m; ++a) in[a] = DualXX(ad::DualX(x[args[a]]));
        for (int k = 0; k < wi; ++k) in[bi + k].d[k] = ad::DualX(1.0);
        for (int l = 0; l < wj; ++l) in[bj + l].v.d[l] = 1.0;
        const DualXX out = t.term->eval_ad2({in.data(), in.size()});
        for (int k = 0; k < wi; ++k)
          for (int l = 0; l < wj; ++l) {
            const double v = out.d[k].d[l];
            t.hess(bi + k, bj + l) = v;
            t.hess(bj + l, bi + k) = v;
          }
      }
    }
    t.hess_valid = true;
    t.hess_x.resize(m);
    for (int a = 0; a < m; ++a) t.hess_x[a] = x[args[a]];
  }

  void accumulate_block(const BlockState& s, const Eigen::VectorXd& w,
                        Eigen::VectorXd* grad) const {
    const auto& args = s.block->args;
    for (size_t a = 0; a < args.size(); ++a) {
      double acc = 0.0;
      for (int r = 0; r < s.block->rows; ++r) acc += s.jac(r, static_cast<int>(a)) * w[s.row_offset + r];
      (*grad)[args[a]] += acc;
    }
  }

  const NlpProblem& p_;
  std::vector<BlockState> eq_, in_;
  std::vector<TermState> terms_;
  int m_eq_ = 0, m_in_ = 0;
  std::vector<double> xloc_, cloc_;
  std::vector<ad::DualX> xloc_ad_, cloc_ad_;
};

struct LbfgsMemory {
  std::deque<Eigen::VectorXd> s, y;
  std::deque<double> rho;
  int capacity = 15;

  void clear() {
    s.clear();
    y.clear();
    rho.clear();
  }
  void push(const Eigen::VectorXd& si, const Eigen::VectorXd& yi) {
    const double sy = si.dot(yi);
    if (sy <= 1e-12 * si.norm() * yi.norm()) return;
    s.push_back(si);
    y.push_back(yi);
    rho.push_back(1.0 / sy);
    if (static_cast<int>(s.size()) > capacity) {
      s.pop_front();
      y.pop_front();
      rho.pop_front();
    }
  }
  Eigen::VectorXd direction(const Eigen::VectorXd& g) const {
    if (s.empty()) {
      const double gn = g.lpNorm<Eigen::Infinity>();
      return -g / std::max(1.0, gn);
    }
    Eigen::VectorXd q = g;
    const int k = static_cast<int>(s.size());
    std::vector<double> alpha(k);
    for (int i = k - 1; i >= 0; --i) {
      alpha[i] = rho[i] * s[i].dot(q);
      q -= alpha[i] * y[i];
    }
    const double gamma = s.back().dot(y.back()) / y.back().squaredNorm();
    q *= gamma;
    for (int i = 0; i < k; ++i) {
      const double beta = rho[i] * y[i].dot(q);
      q += (alpha[i] - beta) * s[i];
    }
    return -q;
  }
};

}  // namespace

double max_constraint_violation(const NlpProblem& problem, const Eigen::VectorXd& x) {
  Evaluator ev(problem);
  Eigen::VectorXd ceq, cin;
  ev.constraints(x, &ceq, &cin);
  double v = 0.0;
  for (int i = 0; i < ceq.size(); ++i) v = std::max(v, std::abs(ceq[i]));
  for (int i = 0; i < cin.size(); ++i) v = std::max(v, cin[i]);
  return v;
}

SolveResult solve(const NlpProblem& problem, const SolverOptions& opt) {
  const auto t_start = std::chrono::steady_clock::now();
  problem.validate();

  const int n = problem.n_vars;
  Eigen::Map<const Eigen::VectorXd> lb(problem.lb.data(), n);
  Eigen::Map<const Eigen::VectorXd> ub(problem.ub.data(), n);

  auto project = [&](const Eigen::VectorXd& x) {
    return x.cwiseMax(lb).cwiseMin(ub).eval();
  };

  Evaluator ev(problem);
  const int m_eq = ev.m_eq();
  const int m_in = ev.m_in();

  Eigen::VectorXd x = project(Eigen::Map<const Eigen::VectorXd>(problem.x0.data(), n));
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(m_eq);
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(m_in);
  double rho = opt.penalty_init;

  Eigen::VectorXd ceq(m_eq), cin(m_in);

  auto violation = [&](const Eigen::VectorXd& e, const Eigen::VectorXd& i) {
    double v = 0.0;
    for (int k = 0; k < e.size(); ++k) v = std::max(v, std::abs(e[k]));
    for (int k = 0; k < i.size(); ++k) v = std::max(v, i[k]);
    return v;
  };

  auto aug_value = [&](const Eigen::VectorXd& xv, double* f_out) -> double {
    ScopedTimer perf_timer(&g_perf.t_value, &g_perf.n_value);
    const double f = ev.objective(xv);
    if (f_out) *f_out = f;
    Eigen::VectorXd e(m_eq), g(m_in);
    ev.constraints(xv, &e, &g);
    double phi = f;
    for (int k = 0; k < m_eq; ++k) phi += lambda[k] * e[k] + 0.5 * rho * e[k] * e[k];
    for (int k = 0; k < m_in; ++k) {
      const double t = std::max(0.0, mu[k] + rho * g[k]);
      phi += (t * t - mu[k] * mu[k]) / (2.0 * rho);
    }
    return phi;
  };

  // Gradient of the augmented Lagrangian; refreshes constraint values, block
  // Jacobians, and the multiplier-penalty weights at xv as a side effect.
  Eigen::VectorXd w_eq(m_eq), w_in(m_in);
  auto aug_gradient = [&](const Eigen::VectorXd& xv) -> Eigen::VectorXd {
    ScopedTimer perf_timer(&g_perf.t_grad, &g_perf.n_grad);
    ev.constraints(xv, &ceq, &cin);
    ev.jacobians(xv);
    Eigen::VectorXd g = ev.objective_gradient(xv);
    for (int k = 0; k < m_eq; ++k) w_eq[k] = lambda[k] + rho * ceq[k];
    for (int k = 0; k < m_in; ++k) w_in[k] = std::max(0.0, mu[k] + rho * cin[k]);
    ev.accumulate_jtw(w_eq, w_in, &g);
    return g;
  };

  auto proj_grad_norm = [&](const Eigen::VectorXd& xv, const Eigen::VectorXd& g) {
    return (project(xv - g) - xv).lpNorm<Eigen::Infinity>();
  };

  SolveReport report;
  int total_inner = 0;
  int stagnation = 0;
  // forcing sequences: multipliers only update when the violation is below
  // eta, otherwise the penalty grows; omega is the inner stationarity target
  double omega = (m_eq + m_in == 0) ? opt.opt_tol * 0.9 : 1e-2;
  double eta = 1e-2;
  double sigma = 1e-3;  // Levenberg damping, adapted from step quality; persists
  double viol_prev = std::numeric_limits<double>::infinity();

  auto finish = [&](SolveStatus status, const std::string& msg) {
    report.status = status;
    report.message = msg;
    report.iterations = total_inner;
    report.objective = ev.objective(x);
    ev.constraints(x, &ceq, &cin);
    report.max_violation = violation(ceq, cin);
    ev.jacobians(x);
    Eigen::VectorXd gl = ev.objective_gradient(x);
    ev.accumulate_jtw(lambda, mu, &gl);
    report.kkt_residual = proj_grad_norm(x, gl);
    report.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    if (opt.verbose)
      std::fprintf(stderr,
                   "[perf] value %.1fs/%ld grad %.1fs/%ld hess %.1fs/%ld cholprep %.1fs/%ld\n",
                   g_perf.t_value, g_perf.n_value, g_perf.t_grad, g_perf.n_grad, g_perf.t_hess,
                   g_perf.n_hess, g_perf.t_chol, g_perf.n_chol);
    return SolveResult{x, {lambda, mu}, report};
  };

  Eigen::MatrixXd H(n, n);
  std::vector<int> free_idx;
  free_idx.reserve(static_cast<size_t>(n));

  for (int outer = 0; outer < opt.max_outer; ++outer) {
    report.outer_iterations = outer + 1;

    // ---- inner: projected damped Newton on the augmented Lagrangian, with
    // a Gauss-Newton curvature model; quasi-Newton and steepest fallbacks ----
    LbfgsMemory mem;
    mem.capacity = opt.lbfgs_memory;
    Eigen::VectorXd g;
    try {
      g = aug_gradient(x);
    } catch (const Error& e) {
      return finish(SolveStatus::NumericFailure, std::string("gradient: ") + e.what());
    }
    if (!g.allFinite()) return finish(SolveStatus::NumericFailure, "non-finite gradient");

    double phi_x = aug_value(x, nullptr);
    double phi_window_best = phi_x;
    int window_start = 0;
    bool inner_converged = false;
    bool inner_stalled = false;
    for (int inner = 0; inner < opt.max_inner; ++inner) {
      const double pg = proj_grad_norm(x, g);
      if (opt.verbose && inner % 100 == 0) {
        const Eigen::VectorXd pgv = project(x - g) - x;
        int imax = 0;
        pgv.cwiseAbs().maxCoeff(&imax);
        std::fprintf(stderr, "    [inner %4d] phi=%.10e pg=%.3e sigma=%.1e argmax=%d\n", inner,
                     phi_x, pg, sigma, imax);
      }
      if (pg <= omega) {
        inner_converged = true;
        break;
      }
      // grind detection: no meaningful descent over a window means the
      // subproblem will not reach omega at this penalty; let the outer act
      if (inner - window_start >= 40) {
        if (phi_window_best - phi_x <= 1e-7 * (1.0 + std::abs(phi_x))) break;
        phi_window_best = phi_x;
        window_start = inner;
      }
      if (++total_inner > opt.max_total_inner)
        return finish(SolveStatus::MaxIter, "total inner iteration cap reached");

      // free variables: inside the box, or at a bound the gradient pulls away from
      free_idx.clear();
      for (int i = 0; i < n; ++i) {
        if (lb[i] == ub[i]) continue;
        if (x[i] <= lb[i] && g[i] > 0.0) continue;
        if (x[i] >= ub[i] && g[i] < 0.0) continue;
        free_idx.push_back(i);
      }

      bool accepted = false;
      Eigen::VectorXd x_acc, g_acc;
      double phi_acc = 0.0;

      auto try_accept = [&](const Eigen::VectorXd& x_try, double phi_try) -> bool {
        Eigen::VectorXd g_new;
        try {
          g_new = aug_gradient(x_try);
        } catch (const Error&) {
          return false;
        }
        if (!g_new.allFinite()) return false;
        x_acc = x_try;
        g_acc = std::move(g_new);
        phi_acc = phi_try;
        return true;
      };

      // --- damped Newton ---
      if (!free_idx.empty()) {
        ev.assemble_newton(x, rho, w_eq, w_in, std::clamp(0.5 * omega, 1e-4, 0.05), &H);
        const int nf = static_cast<int>(free_idx.size());
        Eigen::MatrixXd Hff(nf, nf);
        Eigen::VectorXd gf(nf);
        for (int a = 0; a < nf; ++a) {
          gf[a] = g[free_idx[a]];
          for (int b = 0; b < nf; ++b) Hff(a, b) = H(free_idx[a], free_idx[b]);
        }
        for (int lm = 0; lm < 10 && !accepted; ++lm) {
          Eigen::MatrixXd Hd;
          {
            ScopedTimer perf_timer(&g_perf.t_chol, &g_perf.n_chol);
            Hd = Hff;
            Hd.diagonal().array() += sigma;
          }
          const Eigen::LLT<Eigen::MatrixXd> llt(Hd);
          if (llt.info() != Eigen::Success) {
            sigma = std::min(sigma * 10.0, 1e12);
            continue;
          }
          const Eigen::VectorXd df = llt.solve(-gf);
          if (!df.allFinite()) {
            sigma = std::min(sigma * 10.0, 1e12);
            continue;
          }
          Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
          for (int a = 0; a < nf; ++a) d[free_idx[a]] = df[a];
          const Eigen::VectorXd x_try = project(x + d);
          const Eigen::VectorXd step = x_try - x;
          if (step.lpNorm<Eigen::Infinity>() == 0.0) {
            sigma = std::min(sigma * 10.0, 1e12);
            continue;
          }
          const double gTs = g.dot(step);
          const double pred =
              gTs + 0.5 * step.dot(H * step) + 0.5 * sigma * step.squaredNorm();
          double phi_try;
          bool ok = true;
          try {
            phi_try = aug_value(x_try, nullptr);
          } catch (const Error&) {
            ok = false;
            phi_try = 0.0;
          }
          if (ok && std::isfinite(phi_try) && pred < 0.0 &&
              phi_try <= phi_x + 1e-4 * std::min(gTs, 0.0) && try_accept(x_try, phi_try)) {
            const double ratio = (phi_try - phi_x) / pred;
            if (ratio > 0.75) {
              sigma = std::max(sigma * 0.33, 1e-8);
            } else if (ratio < 0.25) {
              sigma = std::min(sigma * 2.0, 1e12);
            }
            accepted = true;
          } else {
            sigma = std::min(sigma * 5.0, 1e12);
          }
        }
      }

      // --- quasi-Newton, then steepest-descent fallback with backtracking ---
      for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
        const Eigen::VectorXd d =
            attempt == 0 ? mem.direction(g)
                         : (-g / std::max(1.0, g.lpNorm<Eigen::Infinity>())).eval();
        double alpha = 1.0;
        while (alpha >= 1e-14 && !accepted) {
          const Eigen::VectorXd x_try = project(x + alpha * d);
          const Eigen::VectorXd step = x_try - x;
          if (step.lpNorm<Eigen::Infinity>() == 0.0) break;
          double phi_try;
          bool ok = true;
          try {
            phi_try = aug_value(x_try, nullptr);
          } catch (const Error&) {
            ok = false;
            phi_try = 0.0;
          }
          if (ok && std::isfinite(phi_try) && phi_try <= phi_x + 1e-4 * g.dot(step) &&
              try_accept(x_try, phi_try)) {
            accepted = true;
            break;
          }
          alpha *= 0.5;
        }
      }

      if (!accepted) {
        inner_stalled = true;  // no descent in any direction; let the outer loop decide
        break;
      }
      mem.push(x_acc - x, g_acc - g);
      x = std::move(x_acc);
      g = std::move(g_acc);
      phi_x = phi_acc;
    }

    // ---- outer bookkeeping ----
    ev.constraints(x, &ceq, &cin);
    const double viol = violation(ceq, cin);
    const bool accept = viol <= std::max(opt.feas_tol, eta) &&
                        (inner_converged || viol <= 0.5 * viol_prev);
    const bool settled = true;  // act on every subproblem exit

    if (settled && accept) {
      lambda += rho * ceq;
      for (int k = 0; k < m_in; ++k) mu[k] = std::max(0.0, mu[k] + rho * cin[k]);
    }

    ev.jacobians(x);
    Eigen::VectorXd gl = ev.objective_gradient(x);
    ev.accumulate_jtw(lambda, mu, &gl);
    const double kkt = proj_grad_norm(x, gl);

    if (opt.verbose) {
      std::fprintf(stderr,
                   "[al] outer=%d inner_total=%d viol=%.3e kkt=%.3e rho=%.1e omega=%.1e eta=%.1e "
                   "%s%s\n",
                   outer, total_inner, viol, kkt, rho, omega, eta,
                   settled ? (accept ? "update" : "penalize") : "resume",
                   inner_stalled ? " (stalled)" : "");
    }

    if (viol <= opt.feas_tol && kkt <= opt.opt_tol)
      return finish(SolveStatus::Optimal, "converged");

    if (settled) {
      if (accept) {
        eta = std::max(0.5 * opt.feas_tol, std::min(eta * 0.2, viol * 0.2));
        // penalty grows per the reduction rule only while still infeasible
        if (viol > opt.feas_tol && viol > opt.required_reduction * viol_prev)
          rho = std::min(rho * opt.penalty_growth, opt.penalty_cap);
      } else {
        rho = std::min(rho * opt.penalty_growth, opt.penalty_cap);
        eta = std::clamp(10.0 / rho, opt.feas_tol * 0.5, 1e-1);
      }
      // stationarity is demanded loosely until feasibility is in hand;
      // near-feasible high-penalty subproblems are where Newton is sharp
      if (viol <= 10.0 * opt.feas_tol) {
        omega = std::max(opt.opt_tol * 0.3, omega * 0.2);
      } else {
        omega = 1e-2;
      }
      if (viol >= 0.9 * viol_prev && viol > opt.feas_tol && rho >= 1e8) {
        if (++stagnation >= opt.stagnation_limit)
          return finish(SolveStatus::Infeasible, "violation stagnated at large penalty");
      } else if (inner_stalled && viol <= opt.feas_tol) {
        // feasible but the inner solver cannot improve stationarity further
        if (++stagnation >= opt.stagnation_limit)
          return finish(SolveStatus::MaxIter, "stationarity stalled at feasible point");
      } else {
        stagnation = 0;
      }
      viol_prev = viol;
    }
    // !settled: the subproblem simply ran out of budget; resume it unchanged
  }
  return finish(SolveStatus::MaxIter, "outer iteration cap reached");
}

}  // namespace dmcc
