#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "enksgd/types.hpp"

namespace enksgd {

using VectorFn = std::function<Vector(const Vector&)>;
using ScalarFn = std::function<double(const Vector&)>;
using MatrixFn = std::function<Matrix(const Vector&)>;

/// Regularizer R(x) or T(y). Each callback is independently optional; the
/// Stein estimators fall back to function values or an identity curvature
/// when a derivative is missing.
struct Regularizer {
  ScalarFn value;
  VectorFn gradient;
  MatrixFn hessian;
};

/// Additive i.i.d. Gaussian noise on the forward map output.
struct NoiseModel {
  double sigma = 0.0;
};

/// Black-box objective Phi(x) = D(G(x)) + alpha_x R(x) + alpha_y T(G(x)).
///
/// `forward` is the deterministic map G. Noise from `noise` is added by
/// ForwardEvaluator, which is also the only place forward calls are counted.
struct ProblemSpec {
  std::string name;
  Index n_x = 0;
  Index n_y = 0;

  VectorFn forward;
  ScalarFn loss_value;
  VectorFn loss_grad;
  MatrixFn loss_hess;

  std::optional<Regularizer> reg_x;
  std::optional<Regularizer> reg_y;
  double alpha_x = 0.0;
  double alpha_y = 0.0;

  NoiseModel noise;

  /// Default starting mean.
  Vector x0;

  /// Named arrays describing how the problem was generated (starting point,
  /// simulated data, ...). Written by dump_dataset().
  std::vector<std::pair<std::string, Matrix>> data;

  /// Phi given a state and the (possibly noisy) forward value at that state.
  double objective_from(const Vector& x, const Vector& y) const;

  /// Noise-free Phi(x). Does not go through an evaluator and is not counted.
  double objective(const Vector& x) const;

  /// Throws UsageError/UnsupportedProblem when required parts are missing.
  void validate() const;
};

/// Counter of forward-map calls.
struct EvalCounter {
  std::uint64_t count = 0;
};

/// y + eta with eta ~ N(0, sigma^2 I), fresh draw per call.
Vector apply_noise(const Vector& y, const NoiseModel& model, Rng& rng);

/// The only sanctioned way for optimizers to call the forward map: applies
/// the problem's noise model from the run's RNG stream, counts the call and
/// rejects non-finite outputs.
class ForwardEvaluator {
 public:
  ForwardEvaluator(const ProblemSpec& problem, Rng& rng) : problem_(&problem), rng_(&rng) {}

  /// Counted, noisy evaluation. Throws NonFiniteError on NaN/Inf output.
  Vector operator()(const Vector& x);

  /// Counted, noisy evaluation that passes non-finite output through. Used
  /// for line-search trials, where such a value just rejects the step.
  Vector evaluate_lenient(const Vector& x);

  std::uint64_t count() const { return counter_.count; }

 private:
  const ProblemSpec* problem_;
  Rng* rng_;
  EvalCounter counter_;
};

/// Reparameterized problem x~ -> Phi(A x~ + b). Regularizer derivatives are
/// pulled back through A; the starting point becomes A^{-1}(x0 - b).
ProblemSpec affine_transform(const ProblemSpec& problem, const Matrix& a, const Vector& b);

}  // namespace enksgd
