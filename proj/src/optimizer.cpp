#include "enksgd/optimizer.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "enksgd/stein.hpp"

namespace enksgd {

void OptimizerConfig::validate() const {
  auto fail = [](const std::string& msg) { throw UsageError("optimizer config: " + msg); };
  if (particles < 2) fail("particles must be >= 2");
  if (!(beta >= 0.0)) fail("beta must be >= 0");
  if (!(delta > 0.0)) fail("delta must be > 0");
  if (!(mu_ls > 0.0)) fail("mu_ls must be > 0");
  if (!(c_ls > 0.0 && c_ls < 1.0)) fail("c_ls must lie in (0, 1)");
  if (!(tau_ls > 0.0 && tau_ls < 1.0)) fail("tau_ls must lie in (0, 1)");
  if (l_max < 0) fail("l_max must be >= 0");
  if (!(gamma_lb >= 0.0 && gamma_ub > gamma_lb)) fail("need 0 <= gamma_lb < gamma_ub");
  if (n_max < 0) fail("n_max must be >= 0");
  if (!(sigma_0 >= 0.0)) fail("sigma_0 must be >= 0");
  if (!(cfd_stencil > 0.0)) fail("cfd stencil must be > 0");
}

LineSearchResult backtracking_line_search(double phi_at_mean, const Vector& q, const DeviationMatrix& dev,
                                          const Matrix& h_proj, const Vector& mean, const ObjectiveFn& objective,
                                          const OptimizerConfig& config) {
  const Index k = dev.k_particles();
  require_same(q.size(), k, "projected gradient length");
  const double scale = config.delta * static_cast<double>(k);

  double dt = config.mu_ls;
  for (int l = 0; l < config.l_max; ++l, dt *= config.tau_ls) {
    TransformPair tp = transform_matrix(h_proj, dt, config.delta, k);
    const Vector r = (dt / scale) * (tp.t * q);
    Vector proposal = mean - dev.values() * r;
    const double phi = objective(proposal);
    if (phi <= phi_at_mean - config.c_ls * q.dot(r)) {
      return {dt, std::move(proposal), std::move(tp), l, phi, true};
    }
  }
  return {0.0, mean, TransformPair::identity(k), config.l_max, phi_at_mean, false};
}

namespace {

void check_start(const ProblemSpec& problem, const Vector& x0, const OptimizerConfig& config) {
  problem.validate();
  config.validate();
  require_same(x0.size(), problem.n_x, "starting point length");
}

double start_objective(const ProblemSpec& problem, const Vector& x0) {
  const double phi = problem.objective(x0);
  if (!std::isfinite(phi)) throw NonFiniteError(problem.name + ": objective is not finite at the starting point");
  return phi;
}

[[noreturn]] void rethrow_with_iteration(const Error& e, Index n) {
  throw NonFiniteError("iteration " + std::to_string(n) + ": " + e.what());
}

double trial_objective(const ProblemSpec& problem, ForwardEvaluator& eval, const Vector& x) {
  const Vector y = eval.evaluate_lenient(x);
  if (!y.allFinite()) return std::numeric_limits<double>::infinity();
  return problem.objective_from(x, y);
}

RunResult finish(std::vector<IterationRecord> trace, Vector mean, std::uint64_t evals) {
  RunResult out;
  out.terminal_phi = trace.back().phi_mean;
  out.trace = std::move(trace);
  out.terminal_mean = std::move(mean);
  out.total_evals = evals;
  return out;
}

RunResult run_ensemble(const ProblemSpec& problem, const Vector& x0, const DeviationMatrix& y0,
                       const OptimizerConfig& config, Rng& rng) {
  require_same(y0.n_x(), problem.n_x, "initial deviations rows");
  require_same(y0.k_particles(), config.particles, "initial deviations cols");
  ForwardEvaluator eval(problem, rng);
  const Index k = config.particles;

  Vector mean = x0;
  Ensemble ens = recombine(y0, mean);
  std::vector<IterationRecord> trace;
  trace.push_back({0, start_objective(problem, x0), 0.0, 0, 0});

  for (Index n = 0; n < config.n_max; ++n) {
    if (config.budget && eval.count() >= *config.budget) break;

    EvaluatedEnsemble ev;
    try {
      ev = evaluate_ensemble(ens, mean, problem, eval);
    } catch (const NonFiniteError& e) {
      rethrow_with_iteration(e, n);
    }
    const ProjectedDerivatives pd = project_derivatives(ens, ev, problem);
    const double phi_n = problem.objective_from(mean, ev.forward_at_mean);
    if (!std::isfinite(phi_n)) {
      throw NonFiniteError("iteration " + std::to_string(n) + ": objective at the mean is not finite");
    }

    const DeviationMatrix dev = ensemble_deviations(ens);
    LineSearchResult ls = backtracking_line_search(
        phi_n, pd.q, dev, pd.h_proj, mean,
        [&](const Vector& x) { return trial_objective(problem, eval, x); }, config);

    const Matrix xi = gaussian_perturbations(problem.n_x, k, rng);
    DeviationMatrix next = deviations_step(dev, ls.transform, ls.dt, config.variant, config.beta, config.delta, xi);
    next = clip_deviations(next, config.gamma_lb, config.gamma_ub, problem.n_x);
    mean = std::move(ls.mean_next);
    try {
      ens = recombine(next, mean);
    } catch (const NonFiniteError& e) {
      rethrow_with_iteration(e, n);
    }
    trace.push_back({n + 1, problem.objective(mean), ls.dt, ls.backtracks, eval.count()});
  }
  return finish(std::move(trace), std::move(mean), eval.count());
}

}  // namespace

RunResult enksgd_minimize(const ProblemSpec& problem, const Vector& x0, const OptimizerConfig& config) {
  check_start(problem, x0, config);
  Rng rng(config.seed);
  DeviationMatrix y0(config.sigma_0 * gaussian_perturbations(problem.n_x, config.particles, rng));
  return run_ensemble(problem, x0, y0, config, rng);
}

RunResult enksgd_minimize(const ProblemSpec& problem, const Vector& x0, const DeviationMatrix& initial_deviations,
                          const OptimizerConfig& config) {
  check_start(problem, x0, config);
  Rng rng(config.seed);
  return run_ensemble(problem, x0, initial_deviations, config, rng);
}

Vector cfd_gradient(const ObjectiveFn& objective, const Vector& x, double h) {
  if (!(h > 0.0)) throw UsageError("cfd_gradient: stencil must be positive");
  Vector g(x.size());
  Vector probe = x;
  for (Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = objective(probe);
    probe[i] = x[i] - h;
    const double down = objective(probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

RunResult cfd_gd_minimize(const ProblemSpec& problem, const Vector& x0, const OptimizerConfig& config) {
  check_start(problem, x0, config);
  Rng rng(config.seed);
  ForwardEvaluator eval(problem, rng);
  auto counted = [&](const Vector& x) { return problem.objective_from(x, eval(x)); };

  Vector mean = x0;
  std::vector<IterationRecord> trace;
  trace.push_back({0, start_objective(problem, x0), 0.0, 0, 0});

  for (Index n = 0; n < config.n_max; ++n) {
    if (config.budget && eval.count() >= *config.budget) break;
    double phi_n = 0.0;
    Vector grad;
    try {
      phi_n = counted(mean);
      grad = cfd_gradient(counted, mean, config.cfd_stencil);
    } catch (const NonFiniteError& e) {
      rethrow_with_iteration(e, n);
    }
    const double slope = grad.squaredNorm();

    double dt = config.mu_ls;
    double accepted_dt = 0.0;
    int l = 0;
    for (; l < config.l_max; ++l, dt *= config.tau_ls) {
      Vector proposal = mean - dt * grad;
      if (trial_objective(problem, eval, proposal) <= phi_n - config.c_ls * dt * slope) {
        mean = std::move(proposal);
        accepted_dt = dt;
        break;
      }
    }
    trace.push_back({n + 1, problem.objective(mean), accepted_dt, l, eval.count()});
  }
  return finish(std::move(trace), std::move(mean), eval.count());
}

}  // namespace enksgd
