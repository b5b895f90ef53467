#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "enksgd/ensemble.hpp"
#include "enksgd/problem.hpp"
#include "enksgd/transform.hpp"

namespace enksgd {

/// Tunables of the ensemble minimizer and the finite-difference baseline.
/// Defaults are the standard line-search and deviation-bound settings.
struct OptimizerConfig {
  Index particles = 20;
  double beta = 0.0;
  double delta = 1.0;
  double mu_ls = 1.0;
  double c_ls = 1e-4;
  double tau_ls = 0.1;
  int l_max = 15;
  double gamma_lb = 1e-4;
  double gamma_ub = 1e4;
  Index n_max = 200;
  UpdateVariant variant = UpdateVariant::EnKSGD;
  double sigma_0 = 1e-2;
  /// Stop after the iteration during which this many forward calls are reached.
  std::optional<std::uint64_t> budget;
  std::uint64_t seed = 0;
  /// Central-difference stencil for cfd_gd_minimize.
  double cfd_stencil = 1e-4;

  void validate() const;
};

struct IterationRecord {
  Index n = 0;
  double phi_mean = 0.0;
  double dt = 0.0;
  int backtracks = 0;
  std::uint64_t cumulative_evals = 0;
};

/// Record 0 is the starting point; record n+1 is the state after iteration n.
/// phi_mean is the noise-free objective at the mean, evaluated outside the
/// forward-call budget.
struct RunResult {
  std::vector<IterationRecord> trace;
  Vector terminal_mean;
  double terminal_phi = 0.0;
  std::uint64_t total_evals = 0;
};

using ObjectiveFn = std::function<double(const Vector&)>;

struct LineSearchResult {
  double dt = 0.0;
  Vector mean_next;
  TransformPair transform;
  int backtracks = 0;
  /// Objective at the accepted proposal; phi_at_mean on exhaustion.
  double phi_next = 0.0;
  bool accepted = false;
};

/// Backtracking on the mean with the Stein-approximated Armijo test
///   Phi(x - Y r) <= Phi(x) - c_ls q^T r,  r = dt / (delta K) T(dt) q,
/// trying dt = mu_ls tau_ls^l for l = 0 .. l_max - 1. On exhaustion returns
/// dt = 0, the unchanged mean and an identity transform.
LineSearchResult backtracking_line_search(double phi_at_mean, const Vector& q, const DeviationMatrix& dev,
                                          const Matrix& h_proj, const Vector& mean, const ObjectiveFn& objective,
                                          const OptimizerConfig& config);

/// Derivative-free ensemble minimization. Initial deviations are drawn
/// N(0, sigma_0^2) from the run's RNG stream.
RunResult enksgd_minimize(const ProblemSpec& problem, const Vector& x0, const OptimizerConfig& config);

/// Same, with caller-supplied initial deviations (projected before use).
RunResult enksgd_minimize(const ProblemSpec& problem, const Vector& x0, const DeviationMatrix& initial_deviations,
                          const OptimizerConfig& config);

/// Central differences of `objective` at x; 2 n_x objective calls.
Vector cfd_gradient(const ObjectiveFn& objective, const Vector& x, double h);

/// Gradient descent on central-difference gradients with the same
/// backtracking constants and forward-call accounting as enksgd_minimize.
RunResult cfd_gd_minimize(const ProblemSpec& problem, const Vector& x0, const OptimizerConfig& config);

}  // namespace enksgd
