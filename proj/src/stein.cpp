#include "enksgd/stein.hpp"

namespace enksgd {

namespace {

bool needs_reg_values(const std::optional<Regularizer>& reg, double alpha) {
  return alpha != 0.0 && reg && !reg->gradient && reg->value;
}

}  // namespace

EvaluatedEnsemble EvaluatedEnsemble::from_values(Matrix forward_values, Vector state_mean, Vector forward_at_mean) {
  EvaluatedEnsemble ev;
  ev.mean_forward = forward_values.rowwise().mean();
  ev.forward_values = std::move(forward_values);
  ev.state_mean = std::move(state_mean);
  ev.forward_at_mean = std::move(forward_at_mean);
  return ev;
}

EvaluatedEnsemble evaluate_ensemble(const Ensemble& ens, const Vector& mean, const ProblemSpec& problem,
                                    ForwardEvaluator& eval) {
  require_same(ens.n_x(), problem.n_x, "ensemble state dimension");
  require_same(mean.size(), problem.n_x, "mean length");
  const Index k = ens.k_particles();
  Matrix values(problem.n_y, k);
  for (Index j = 0; j < k; ++j) values.col(j) = eval(ens.particle(j));
  Vector at_mean = eval(mean);
  EvaluatedEnsemble ev = EvaluatedEnsemble::from_values(std::move(values), mean, std::move(at_mean));

  if (needs_reg_values(problem.reg_x, problem.alpha_x)) {
    Vector r(k);
    for (Index j = 0; j < k; ++j) r[j] = problem.reg_x->value(ens.particle(j));
    ev.reg_x_values = std::move(r);
  }
  if (needs_reg_values(problem.reg_y, problem.alpha_y)) {
    Vector t(k);
    for (Index j = 0; j < k; ++j) t[j] = problem.reg_y->value(ev.forward_values.col(j));
    ev.reg_y_values = std::move(t);
  }
  return ev;
}

Matrix forward_deviations(const EvaluatedEnsemble& ev) {
  return ev.forward_values.colwise() - ev.mean_forward;
}

Vector scalar_deviations(const Vector& values) {
  if (values.size() < 2) throw InvalidEnsembleSize("scalar deviations need at least 2 values");
  return values.array() - values.mean();
}

Vector projected_gradient(const Ensemble& ens, const EvaluatedEnsemble& ev, const ProblemSpec& problem) {
  if (!problem.loss_grad) throw UnsupportedProblem(problem.name + ": loss gradient is required");
  require_same(ev.forward_values.cols(), ens.k_particles(), "forward values column count");
  const Matrix gamma = forward_deviations(ev);
  const Vector& ybar = ev.forward_at_mean;
  Vector q = gamma.transpose() * problem.loss_grad(ybar);

  if (problem.alpha_x != 0.0) {
    const Matrix dev = ensemble_deviations(ens).values();
    if (problem.reg_x && problem.reg_x->gradient) {
      q += problem.alpha_x * (dev.transpose() * problem.reg_x->gradient(ev.state_mean));
    } else if (ev.reg_x_values) {
      q += problem.alpha_x * scalar_deviations(*ev.reg_x_values);
    } else {
      throw UnsupportedProblem(problem.name + ": R needs a gradient or values");
    }
  }
  if (problem.alpha_y != 0.0) {
    if (problem.reg_y && problem.reg_y->gradient) {
      q += problem.alpha_y * (gamma.transpose() * problem.reg_y->gradient(ybar));
    } else if (ev.reg_y_values) {
      q += problem.alpha_y * scalar_deviations(*ev.reg_y_values);
    } else {
      throw UnsupportedProblem(problem.name + ": T needs a gradient or values");
    }
  }
  return q;
}

Matrix projected_hessian(const Ensemble& ens, const EvaluatedEnsemble& ev, const ProblemSpec& problem) {
  if (!problem.loss_hess) throw UnsupportedProblem(problem.name + ": loss Hessian is required");
  require_same(ev.forward_values.cols(), ens.k_particles(), "forward values column count");
  const Matrix gamma = forward_deviations(ev);
  const Vector& ybar = ev.forward_at_mean;

  Matrix obs_curvature = problem.loss_hess(ybar);
  bool t_identity_fallback = false;
  if (problem.alpha_y != 0.0) {
    if (problem.reg_y && problem.reg_y->hessian) {
      obs_curvature += problem.alpha_y * problem.reg_y->hessian(ybar);
    } else {
      t_identity_fallback = true;
    }
  }
  Matrix h = gamma.transpose() * obs_curvature * gamma;

  if (problem.alpha_x != 0.0 || t_identity_fallback) {
    const Matrix dev = ensemble_deviations(ens).values();
    const Matrix gram = dev.transpose() * dev;
    if (problem.alpha_x != 0.0) {
      if (problem.reg_x && problem.reg_x->hessian) {
        h += problem.alpha_x * (dev.transpose() * problem.reg_x->hessian(ev.state_mean) * dev);
      } else {
        h += problem.alpha_x * gram;
      }
    }
    if (t_identity_fallback) h += problem.alpha_y * gram;
  }
  return 0.5 * (h + h.transpose());
}

ProjectedDerivatives project_derivatives(const Ensemble& ens, const EvaluatedEnsemble& ev,
                                         const ProblemSpec& problem) {
  return {projected_gradient(ens, ev, problem), ev.forward_at_mean, projected_hessian(ens, ev, problem)};
}

}  // namespace enksgd
