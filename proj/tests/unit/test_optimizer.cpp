#include <algorithm>
#include <doctest.h>

#include <cmath>
#include <limits>

#include "enksgd/optimizer.hpp"
#include "enksgd/problems.hpp"
#include "support.hpp"

using namespace enksgd;
using testing::quadratic_1d;
using testing::random_matrix;

namespace {

// Evaluations charged per iteration: K particles, the mean, then one per
// line-search trial.
std::uint64_t expected_iteration_cost(const IterationRecord& rec, const OptimizerConfig& c) {
  const int trials = rec.dt > 0.0 ? rec.backtracks + 1 : c.l_max;
  return static_cast<std::uint64_t>(c.particles + 1 + trials);
}

}  // namespace

TEST_CASE("config validation") {
  OptimizerConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.mu_ls == 1.0);
  CHECK(c.c_ls == 1e-4);
  CHECK(c.tau_ls == 0.1);
  CHECK(c.l_max == 15);
  CHECK(c.gamma_lb == 1e-4);
  CHECK(c.gamma_ub == 1e4);
  CHECK(c.sigma_0 == 1e-2);
  auto bad = [](auto mutate) {
    OptimizerConfig c;
    mutate(c);
    CHECK_THROWS_AS(c.validate(), UsageError);
  };
  bad([](OptimizerConfig& c) { c.particles = 1; });
  bad([](OptimizerConfig& c) { c.beta = -1; });
  bad([](OptimizerConfig& c) { c.delta = 0; });
  bad([](OptimizerConfig& c) { c.c_ls = 1; });
  bad([](OptimizerConfig& c) { c.tau_ls = 0; });
  bad([](OptimizerConfig& c) { c.gamma_ub = c.gamma_lb; });
  bad([](OptimizerConfig& c) { c.l_max = -1; });
}

TEST_CASE("line search: zero projected gradient is accepted immediately") {
  OptimizerConfig c;
  const Vector mean{{1.0, 2.0}};
  int calls = 0;
  auto objective = [&](const Vector&) {
    ++calls;
    return 5.0;
  };
  const auto ls = backtracking_line_search(5.0, Vector::Zero(3), DeviationMatrix(Matrix::Ones(2, 3)),
                                           Matrix::Zero(3, 3), mean, objective, c);
  CHECK(ls.accepted);
  CHECK(ls.backtracks == 0);
  CHECK(ls.dt == 1.0);
  CHECK(ls.mean_next == mean);
  CHECK(calls == 1);
}

TEST_CASE("line search: small first step on a convex quadratic is accepted at l = 0") {
  // Phi(x) = x^2 / 2 at x = 1 with a single deviation direction.
  OptimizerConfig c;
  c.mu_ls = 1e-3;
  const Matrix y{{-0.1, 0.1}};
  const Vector q = y.transpose() * Vector::Ones(1);
  const Matrix h = y.transpose() * y;
  auto phi = [](const Vector& x) { return 0.5 * x.squaredNorm(); };
  const auto ls = backtracking_line_search(0.5, q, DeviationMatrix(y), h, Vector::Ones(1), phi, c);
  CHECK(ls.accepted);
  CHECK(ls.backtracks == 0);
  CHECK(ls.dt == 1e-3);
  CHECK(ls.mean_next[0] < 1.0);
}

TEST_CASE("line search: exhaustion returns the unchanged mean") {
  OptimizerConfig c;
  c.l_max = 4;
  const Matrix y{{-0.1, 0.1}};
  int calls = 0;
  auto rising = [&](const Vector&) {
    ++calls;
    return 10.0;
  };
  const auto ls = backtracking_line_search(1.0, Vector{{-1.0, 1.0}}, DeviationMatrix(y), Matrix::Zero(2, 2),
                                           Vector::Ones(1), rising, c);
  CHECK_FALSE(ls.accepted);
  CHECK(ls.dt == 0.0);
  CHECK(ls.backtracks == 4);
  CHECK(ls.mean_next == Vector::Ones(1));
  CHECK(ls.transform.t == Matrix::Identity(2, 2));
  CHECK(ls.phi_next == 1.0);
  CHECK(calls == 4);
}

TEST_CASE("1-D quadratic converges to its minimizer") {
  ProblemSpec p = quadratic_1d(2.0, 3.0, 5.0);
  OptimizerConfig c;
  c.particles = 3;
  c.beta = 0.0;
  c.delta = 1.0;
  c.n_max = 50;
  const RunResult r = enksgd_minimize(p, p.x0, c);
  CHECK(r.terminal_phi <= 1e-16);
  CHECK(r.terminal_mean[0] == doctest::Approx(1.5).epsilon(1e-8));
  CHECK(r.trace.size() <= 51);
}

TEST_CASE("zero initial deviations never move the mean") {
  ProblemSpec p = quadratic_1d(1.0, 1.0, 4.0);
  OptimizerConfig c;
  c.particles = 4;
  c.sigma_0 = 0.0;
  c.n_max = 5;
  const RunResult r = enksgd_minimize(p, p.x0, c);
  CHECK(r.terminal_mean[0] == 4.0);
  for (std::size_t i = 1; i < r.trace.size(); ++i) {
    CHECK(r.trace[i].dt == c.mu_ls);
    CHECK(r.trace[i].backtracks == 0);
    CHECK(r.trace[i].phi_mean == r.trace[0].phi_mean);
  }
}

TEST_CASE("ill-conditioned least squares: monotone decrease and exact accounting") {
  ProblemSpec p = linear_ls_problem(13);
  OptimizerConfig c;
  c.particles = 20;
  c.beta = 1e-8;
  c.delta = 1.0;
  c.n_max = 40;
  c.seed = 17;
  const RunResult r = enksgd_minimize(p, p.x0, c);
  REQUIRE(r.trace.size() == 41);
  CHECK(r.trace.front().phi_mean == doctest::Approx(p.objective(Vector::Constant(13, 1e5))));
  std::uint64_t evals = 0;
  for (std::size_t i = 1; i < r.trace.size(); ++i) {
    CHECK(r.trace[i].phi_mean <= r.trace[i - 1].phi_mean);
    evals += expected_iteration_cost(r.trace[i], c);
    CHECK(r.trace[i].cumulative_evals == evals);
  }
  CHECK(r.total_evals == evals);
  CHECK(r.terminal_phi == r.trace.back().phi_mean);
  CHECK(r.terminal_phi < 1e-3 * r.trace.front().phi_mean);
}

TEST_CASE("budget stops after the iteration that reaches it") {
  ProblemSpec p = nls_problem("nls_rosenbrock");
  OptimizerConfig c;
  c.particles = 8;
  c.budget = 95;
  c.n_max = 1000;
  const RunResult r = enksgd_minimize(p, p.x0, c);
  CHECK(r.total_evals >= 95);
  REQUIRE(r.trace.size() >= 2);
  CHECK(r.trace[r.trace.size() - 2].cumulative_evals < 95);
}

TEST_CASE("same seed replays bit-identically") {
  ProblemSpec p = nls_problem("mgh18");
  OptimizerConfig c;
  c.particles = 10;
  c.beta = 1e-6;
  c.n_max = 30;
  c.seed = 123;
  const RunResult a = enksgd_minimize(p, p.x0, c);
  const RunResult b = enksgd_minimize(p, p.x0, c);
  REQUIRE(a.trace.size() == b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    CHECK(a.trace[i].phi_mean == b.trace[i].phi_mean);
    CHECK(a.trace[i].dt == b.trace[i].dt);
  }
  CHECK(a.terminal_mean == b.terminal_mean);
  c.seed = 124;
  CHECK(enksgd_minimize(p, p.x0, c).terminal_mean != a.terminal_mean);
}

TEST_CASE("EnKF variant keeps shrinking the ensemble") {
  ProblemSpec p = nls_problem("nls_rosenbrock");
  OptimizerConfig c;
  c.particles = 8;
  c.beta = 1e-8;
  c.delta = 1e-3;
  c.budget = 500;
  c.n_max = 10000;
  c.variant = UpdateVariant::EnKF;
  const double enkf = enksgd_minimize(p, p.x0, c).terminal_phi;
  c.variant = UpdateVariant::EnKSGD;
  const double enksgd = enksgd_minimize(p, p.x0, c).terminal_phi;
  CHECK(enksgd < 1e-10);
  CHECK(enkf > 1e-2);
}

TEST_CASE("non-finite values are reported") {
  SUBCASE("at the start") {
    ProblemSpec p = quadratic_1d(1.0, 0.0);
    p.forward = [](const Vector& x) -> Vector { return x.array().log(); };
    OptimizerConfig c;
    CHECK_THROWS_AS(enksgd_minimize(p, Vector::Constant(1, -1.0), c), NonFiniteError);
  }
  SUBCASE("during an iteration") {
    ProblemSpec p = quadratic_1d(1.0, 0.0);
    p.forward = [](const Vector& x) -> Vector {
      return x[0] > 1.02 ? Vector::Constant(1, std::numeric_limits<double>::quiet_NaN()) : x;
    };
    OptimizerConfig c;
    c.particles = 5;
    c.sigma_0 = 1.0;
    try {
      enksgd_minimize(p, Vector::Constant(1, 1.0), c);
      FAIL("expected NonFiniteError");
    } catch (const NonFiniteError& e) {
      CHECK(std::string(e.what()).find("iteration 0") != std::string::npos);
    }
  }
}

TEST_CASE("explicit initial deviations") {
  ProblemSpec p = quadratic_1d(1.0, 2.0);
  OptimizerConfig c;
  c.particles = 3;
  c.n_max = 3;
  const DeviationMatrix y0(Matrix{{-0.1, 0.0, 0.1}});
  const RunResult r = enksgd_minimize(p, Vector::Zero(1), y0, c);
  CHECK(r.trace.size() == 4);
  CHECK_THROWS_AS(enksgd_minimize(p, Vector::Zero(1), DeviationMatrix(Matrix::Zero(1, 4)), c), DimensionMismatch);
}

TEST_CASE("central differences") {
  auto sq = [](const Vector& x) { return x.squaredNorm(); };
  auto cube = [](const Vector& x) { return std::pow(x[0], 3); };
  auto flat = [](const Vector&) { return 7.0; };
  for (double h : {0.5, 0.25, 0.125}) CHECK(cfd_gradient(sq, Vector::Ones(1), h)[0] == 2.0);
  CHECK(cfd_gradient(sq, Vector::Ones(1), 1e-4)[0] == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(cfd_gradient(cube, Vector::Ones(1), 0.1)[0] == doctest::Approx(3.01).epsilon(1e-12));
  CHECK(cfd_gradient(flat, Vector::Ones(4), 1e-4).norm() == 0.0);
  CHECK_THROWS_AS(cfd_gradient(sq, Vector::Ones(1), 0.0), UsageError);
}

TEST_CASE("CFD gradient descent") {
  SUBCASE("1-D quadratic within 200 evaluations") {
    ProblemSpec p = quadratic_1d(1.0, 2.0, 0.0);
    OptimizerConfig c;
    c.budget = 200;
    c.n_max = 1000;
    const RunResult r = cfd_gd_minimize(p, p.x0, c);
    CHECK(r.terminal_phi <= 1e-12);
    auto hit = std::find_if(r.trace.begin(), r.trace.end(), [](const IterationRecord& rec) { return rec.phi_mean <= 1e-12; });
    REQUIRE(hit != r.trace.end());
    CHECK(hit->cumulative_evals <= 200);
  }
  SUBCASE("constant objective never moves") {
    ProblemSpec p = quadratic_1d(0.0, 1.0, 3.0);
    OptimizerConfig c;
    c.n_max = 5;
    const RunResult r = cfd_gd_minimize(p, p.x0, c);
    CHECK(r.terminal_mean[0] == 3.0);
    for (std::size_t i = 1; i < r.trace.size(); ++i) {
      CHECK(r.trace[i].dt == 1.0);
      CHECK(r.trace[i].backtracks == 0);
    }
  }
  SUBCASE("accounting: one mean call, 2 n_x stencil calls, then trials") {
    ProblemSpec p = linear_ls_problem(13);
    OptimizerConfig c;
    c.n_max = 20;
    const RunResult r = cfd_gd_minimize(p, p.x0, c);
    std::uint64_t evals = 0;
    for (std::size_t i = 1; i < r.trace.size(); ++i) {
      const auto& rec = r.trace[i];
      evals += 1 + 2 * 13 + (rec.dt > 0.0 ? rec.backtracks + 1 : c.l_max);
      CHECK(rec.cumulative_evals == evals);
      CHECK(rec.phi_mean <= r.trace[i - 1].phi_mean);
    }
  }
}
