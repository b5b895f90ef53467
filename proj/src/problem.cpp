#include "enksgd/problem.hpp"

#include <string>

namespace enksgd {

double ProblemSpec::objective_from(const Vector& x, const Vector& y) const {
  double phi = loss_value(y);
  if (alpha_x != 0.0) {
    if (!reg_x || !reg_x->value) throw UnsupportedProblem(name + ": alpha_x > 0 but R has no value");
    phi += alpha_x * reg_x->value(x);
  }
  if (alpha_y != 0.0) {
    if (!reg_y || !reg_y->value) throw UnsupportedProblem(name + ": alpha_y > 0 but T has no value");
    phi += alpha_y * reg_y->value(y);
  }
  return phi;
}

double ProblemSpec::objective(const Vector& x) const { return objective_from(x, forward(x)); }

void ProblemSpec::validate() const {
  if (n_x < 1 || n_y < 1) throw UsageError(name + ": dimensions must be positive");
  if (!forward) throw UsageError(name + ": forward map missing");
  if (!loss_value) throw UsageError(name + ": loss value missing");
  if (!loss_grad) throw UnsupportedProblem(name + ": loss gradient is required");
  if (!loss_hess) throw UnsupportedProblem(name + ": loss Hessian is required");
  if (alpha_x < 0.0 || alpha_y < 0.0) throw UsageError(name + ": regularization weights must be >= 0");
  if (noise.sigma < 0.0) throw UsageError(name + ": noise sigma must be >= 0");
  if (x0.size() != 0) require_same(x0.size(), n_x, "starting point length");
}

Vector apply_noise(const Vector& y, const NoiseModel& model, Rng& rng) {
  if (model.sigma == 0.0) return y;
  std::normal_distribution<double> normal(0.0, model.sigma);
  Vector out = y;
  for (Index i = 0; i < out.size(); ++i) out[i] += normal(rng);
  return out;
}

Vector ForwardEvaluator::evaluate_lenient(const Vector& x) {
  ++counter_.count;
  Vector y = problem_->forward(x);
  require_same(y.size(), problem_->n_y, "forward map output length");
  return apply_noise(y, problem_->noise, *rng_);
}

Vector ForwardEvaluator::operator()(const Vector& x) {
  Vector y = evaluate_lenient(x);
  if (!y.allFinite()) {
    throw NonFiniteError(problem_->name + ": forward map returned a non-finite value");
  }
  return y;
}

ProblemSpec affine_transform(const ProblemSpec& problem, const Matrix& a, const Vector& b) {
  require_same(a.rows(), problem.n_x, "affine map rows");
  require_same(a.cols(), problem.n_x, "affine map cols");
  require_same(b.size(), problem.n_x, "affine offset length");

  ProblemSpec out = problem;
  out.name = problem.name + "_affine";
  auto to_physical = [a, b](const Vector& xt) -> Vector { return a * xt + b; };

  out.forward = [f = problem.forward, to_physical](const Vector& xt) { return f(to_physical(xt)); };
  if (problem.reg_x) {
    Regularizer r;
    const Regularizer& src = *problem.reg_x;
    if (src.value) r.value = [v = src.value, to_physical](const Vector& xt) { return v(to_physical(xt)); };
    if (src.gradient) {
      r.gradient = [g = src.gradient, to_physical, a](const Vector& xt) -> Vector {
        return a.transpose() * g(to_physical(xt));
      };
    }
    if (src.hessian) {
      r.hessian = [h = src.hessian, to_physical, a](const Vector& xt) -> Matrix {
        return a.transpose() * h(to_physical(xt)) * a;
      };
    }
    out.reg_x = std::move(r);
  }
  if (problem.x0.size() == problem.n_x) {
    out.x0 = a.partialPivLu().solve(problem.x0 - b);
  }
  return out;
}

}  // namespace enksgd
