#pragma once

#include <optional>

#include "enksgd/ensemble.hpp"
#include "enksgd/problem.hpp"

namespace enksgd {

/// Forward-map values of every particle plus the forward value at the
/// ensemble mean. Regularizer values are present only when the matching
/// gradient is missing and the Stein fallback needs them.
struct EvaluatedEnsemble {
  Matrix forward_values;  // N_y x K
  Vector mean_forward;    // column mean of forward_values
  Vector state_mean;      // x bar
  Vector forward_at_mean; // G(x bar), noisy if the problem is noisy
  std::optional<Vector> reg_x_values;
  std::optional<Vector> reg_y_values;

  static EvaluatedEnsemble from_values(Matrix forward_values, Vector state_mean, Vector forward_at_mean);
};

/// Stein estimates of Y^T grad Phi(x bar) and Y^T B(x bar) Y.
struct ProjectedDerivatives {
  Vector q;
  Vector ybar_at_mean;
  Matrix h_proj;
};

/// K particle calls and one call at `mean`, all through `eval` (so all
/// counted). Regularizer values are filled in when the fallbacks need them.
EvaluatedEnsemble evaluate_ensemble(const Ensemble& ens, const Vector& mean, const ProblemSpec& problem,
                                    ForwardEvaluator& eval);

/// Gamma: forward values minus their particle mean.
Matrix forward_deviations(const EvaluatedEnsemble& ev);

Vector scalar_deviations(const Vector& values);

Vector projected_gradient(const Ensemble& ens, const EvaluatedEnsemble& ev, const ProblemSpec& problem);

Matrix projected_hessian(const Ensemble& ens, const EvaluatedEnsemble& ev, const ProblemSpec& problem);

ProjectedDerivatives project_derivatives(const Ensemble& ens, const EvaluatedEnsemble& ev,
                                         const ProblemSpec& problem);

}  // namespace enksgd
