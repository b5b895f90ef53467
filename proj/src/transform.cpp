#include "enksgd/transform.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace enksgd {

TransformPair TransformPair::identity(Index k) { return {Matrix::Identity(k, k), Matrix::Identity(k, k)}; }

std::string_view to_string(UpdateVariant v) { return v == UpdateVariant::EnKSGD ? "enksgd" : "enkf"; }

TransformPair transform_matrix(const Matrix& h_proj, double dt, double delta, Index k) {
  require_same(h_proj.rows(), k, "projected Hessian rows");
  require_same(h_proj.cols(), k, "projected Hessian cols");
  if (!(dt > 0.0)) throw UsageError("transform_matrix: step size must be positive");
  if (!(delta > 0.0)) throw UsageError("transform_matrix: delta must be positive");

  // M = I + c H shares eigenvectors with H. Decomposing H keeps eigenvalues
  // that are zero up to roundoff from turning into large negative values of M
  // when H has a huge norm.
  const Matrix h = 0.5 * (h_proj + h_proj.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(h);
  if (eig.info() != Eigen::Success) throw NonPositiveTransform("eigendecomposition of transform failed");
  const double c = dt / (delta * static_cast<double>(k));
  const Vector& lam = eig.eigenvalues();
  const double roundoff =
      64.0 * static_cast<double>(k) * std::numeric_limits<double>::epsilon() * lam.cwiseAbs().maxCoeff();
  const Vector lam_clean = lam.unaryExpr([roundoff](double l) { return (l < 0.0 && l >= -roundoff) ? 0.0 : l; });
  const Vector s = (1.0 + c * lam_clean.array() + kTransformJitter).matrix();
  if (!(s.allFinite() && s.minCoeff() > 0.0)) {
    throw NonPositiveTransform("I + dt/(delta K) H has eigenvalue " + std::to_string((s.array() - kTransformJitter).minCoeff()) +
                               "; reduce the step size");
  }
  const Matrix& u = eig.eigenvectors();
  TransformPair tp;
  tp.t = u * s.cwiseInverse().asDiagonal() * u.transpose();
  tp.t_sqrt = u * s.cwiseSqrt().cwiseInverse().asDiagonal() * u.transpose();
  tp.t = 0.5 * (tp.t + tp.t.transpose());
  tp.t_sqrt = 0.5 * (tp.t_sqrt + tp.t_sqrt.transpose());
  return tp;
}

DeviationMatrix deviations_step(const DeviationMatrix& dev, const TransformPair& tp, double dt,
                                UpdateVariant variant, double beta, double delta, const Matrix& xi) {
  if (dt < 0.0) throw UsageError("deviations_step: negative step size");
  require_same(tp.t_sqrt.rows(), dev.k_particles(), "transform size");
  require_same(xi.rows(), dev.n_x(), "perturbation rows");
  require_same(xi.cols(), dev.k_particles(), "perturbation cols");

  const double growth = variant == UpdateVariant::EnKSGD ? std::exp(0.5 * dt) : 1.0;
  Matrix next = growth * (dev.values() * tp.t_sqrt);
  const double noise_scale = std::sqrt(beta * delta * dt);
  if (noise_scale != 0.0) next += noise_scale * xi;
  return DeviationMatrix(std::move(next));
}

DeviationMatrix clip_deviations(const DeviationMatrix& dev, double gamma_lb, double gamma_ub, Index n_x) {
  if (!(gamma_lb >= 0.0) || !(gamma_ub > gamma_lb)) throw UsageError("clip_deviations: need 0 <= gamma_lb < gamma_ub");
  if (n_x < 1) throw UsageError("clip_deviations: n_x must be positive");
  Matrix out = dev.values();
  const double scale = static_cast<double>(n_x);
  for (Index k = 0; k < out.cols(); ++k) {
    auto col = out.col(k);
    double norm = col.norm();
    if (norm / scale > gamma_ub) {
      col *= gamma_ub / norm;
      norm = col.norm();
    }
    if (norm > 0.0 && norm / scale < gamma_lb) col *= gamma_lb / norm;
  }
  return DeviationMatrix(std::move(out));
}

Matrix gaussian_perturbations(Index n_x, Index k, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix xi(n_x, k);
  for (Index c = 0; c < k; ++c) {
    for (Index r = 0; r < n_x; ++r) xi(r, c) = normal(rng);
  }
  return xi;
}

}  // namespace enksgd
