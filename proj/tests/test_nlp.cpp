#include <doctest.h>

#include <cmath>

#include "dmcc/nlp.hpp"
#include "dmcc/smallvec.hpp"

using namespace dmcc;

namespace {

// smoothed |t - 3|, piecewise linear away from the kink
template <typename T>
T distance_fn(const T& t) {
  using std::sqrt;
  const T d = t - 3.0;
  return sqrt(d * d + 1e-12) - 1e-6;
}

}  // namespace

TEST_SUITE_BEGIN("nlp");

TEST_CASE("active bound: min (x-1)^2 subject to x >= 2") {
  NlpProblem p;
  p.add_variable(2.0, 10.0, 5.0);
  p.add_objective_term({0}, [](auto in) { return (in[0] - 1.0) * (in[0] - 1.0); });
  const SolveResult r = solve(p);
  CHECK(r.report.status == SolveStatus::Optimal);
  CHECK(r.x[0] == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("equality constraint: min x^2 + y^2 subject to x + y = 1") {
  NlpProblem p;
  p.add_variables(2, -10.0, 10.0, 0.0);
  p.add_objective_term({0, 1}, [](auto in) { return in[0] * in[0] + in[1] * in[1]; });
  p.add_block("sum", BlockKind::Equality, {0, 1}, 1, true,
              [](auto in, auto out) { out[0] = in[0] + in[1] - 1.0; });
  const SolveResult r = solve(p);
  CHECK(r.report.status == SolveStatus::Optimal);
  CHECK(r.x[0] == doctest::Approx(0.5).epsilon(1e-5));
  CHECK(r.x[1] == doctest::Approx(0.5).epsilon(1e-5));
  CHECK(r.report.max_violation <= 1e-6);
}

TEST_CASE("inequality: min x subject to 1 - x^2 <= 0, x >= 0") {
  NlpProblem p;
  p.add_variable(0.0, 5.0, 3.0);
  p.add_objective_term({0}, [](auto in) { return in[0]; });
  p.add_block("unit", BlockKind::Inequality, {0}, 1, false,
              [](auto in, auto out) { out[0] = 1.0 - in[0] * in[0]; });
  const SolveResult r = solve(p);
  CHECK(r.report.status == SolveStatus::Optimal);
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("relaxed complementarity toy lands on the contact time") {
  // brute-force oracle first: smallest grid t whose distance fits inside the
  // relaxation bound
  const double nu_max = 1e-3;
  double t_oracle = -1.0;
  for (double t = 0.0; t <= 6.0; t += 1e-4) {
    if (distance_fn(t) <= nu_max) {
      t_oracle = t;
      break;
    }
  }
  REQUIRE(t_oracle > 0.0);
  CHECK(t_oracle == doctest::Approx(3.0).epsilon(1e-3));

  NlpProblem p;
  const int t_i = p.add_variable(0.0, 6.0, 1.0);
  const int eps_i = p.add_variable(0.0, 1.0, 0.5);
  const int nu_i = p.add_variable(0.0, nu_max, 0.5 * nu_max);
  p.add_objective_term({t_i}, [](auto in) { return in[0]; });
  p.add_block("contact", BlockKind::Equality, {t_i, eps_i, nu_i}, 1, false,
              [](auto in, auto out) { out[0] = in[1] * (distance_fn(in[0]) - in[2]); });
  p.add_block("progress", BlockKind::Equality, {eps_i}, 1, true,
              [](auto in, auto out) { out[0] = in[0] - 1.0; });
  const SolveResult r = solve(p);
  CHECK(r.report.status == SolveStatus::Optimal);
  CHECK(std::abs(r.x[t_i] - t_oracle) < 2e-3);
}

TEST_CASE("determinism: identical problem and options give identical iterates") {
  auto build = [] {
    NlpProblem p;
    p.add_variables(3, -5.0, 5.0, 1.0);
    p.add_objective_term({0, 1, 2}, [](auto in) {
      return (in[0] - 0.3) * (in[0] - 0.3) + in[1] * in[1] * in[1] * in[1] + in[2] * in[2] +
             0.1 * in[0] * in[1];
    });
    p.add_block("c", BlockKind::Equality, {0, 2}, 1, false,
                [](auto in, auto out) { out[0] = in[0] * in[1] - 0.1; });
    return p;
  };
  const SolveResult a = solve(build());
  const SolveResult b = solve(build());
  REQUIRE(a.x.size() == b.x.size());
  for (int i = 0; i < a.x.size(); ++i) CHECK(a.x[i] == b.x[i]);
  CHECK(a.report.iterations == b.report.iterations);
}

TEST_CASE("argmin is invariant under positive objective scaling") {
  for (double scale : {1.0, 5.0, 0.2}) {
    NlpProblem p;
    p.add_variables(2, -4.0, 4.0, 2.0);
    p.add_objective_term({0, 1}, [scale](auto in) {
      return scale * ((in[0] - 1.0) * (in[0] - 1.0) + 2.0 * (in[1] + 0.5) * (in[1] + 0.5));
    });
    const SolveResult r = solve(p);
    CHECK(r.report.status == SolveStatus::Optimal);
    CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(r.x[1] == doctest::Approx(-0.5).epsilon(1e-5));
  }
}

TEST_CASE("reports are replayable from the returned point") {
  NlpProblem p;
  p.add_variables(2, -3.0, 3.0, 0.5);
  p.add_objective_term({0, 1}, [](auto in) { return in[0] * in[0] + 0.5 * in[1] * in[1]; });
  p.add_block("eq", BlockKind::Equality, {0, 1}, 1, false,
              [](auto in, auto out) { out[0] = in[0] + in[1] * in[1] - 1.0; });
  p.add_block("in", BlockKind::Inequality, {1}, 1, true,
              [](auto in, auto out) { out[0] = -0.8 - in[0]; });
  const SolveResult r = solve(p);
  CHECK(max_constraint_violation(p, r.x) == doctest::Approx(r.report.max_violation).epsilon(1e-12));
}

TEST_CASE("validation rejects malformed problems") {
  NlpProblem p;
  p.add_variable(1.0, -1.0, 0.0);  // lb > ub
  p.add_objective_term({0}, [](auto in) { return in[0]; });
  CHECK_THROWS_AS(solve(p), ValidationError);

  NlpProblem p2;
  p2.add_variable(0.0, 1.0, 0.5);
  p2.add_block("bad", BlockKind::Equality, {3}, 1, false, [](auto, auto out) { out[0] = 0.0; });
  CHECK_THROWS_AS(solve(p2), ValidationError);
}

TEST_CASE("guess outside the box is clipped, not rejected") {
  NlpProblem p;
  p.add_variable(0.0, 1.0, 7.0);
  p.add_objective_term({0}, [](auto in) { return (in[0] - 0.25) * (in[0] - 0.25); });
  const SolveResult r = solve(p);
  CHECK(r.report.status == SolveStatus::Optimal);
  CHECK(r.x[0] == doctest::Approx(0.25).epsilon(1e-6));
}

TEST_SUITE_END();
