#pragma once

#include <string_view>

#include "enksgd/ensemble.hpp"

namespace enksgd {

/// Diagonal shift added to the eigenvalues of I + (dt / (delta K)) H before
/// inverting.
inline constexpr double kTransformJitter = 1e-7;

/// T = (I + (dt / (delta K)) H)^{-1} and its symmetric square root.
struct TransformPair {
  Matrix t;
  Matrix t_sqrt;

  static TransformPair identity(Index k);
};

/// EnKSGD grows deviations by exp(dt / 2) each step; EnKF does not and
/// collapses its ensemble over time.
enum class UpdateVariant { EnKSGD, EnKF };

std::string_view to_string(UpdateVariant v);

TransformPair transform_matrix(const Matrix& h_proj, double dt, double delta, Index k);

DeviationMatrix deviations_step(const DeviationMatrix& dev, const TransformPair& tp, double dt,
                                UpdateVariant variant, double beta, double delta, const Matrix& xi);

/// Column-wise rescaling when |c|_2 / n_x leaves [gamma_lb, gamma_ub]. The
/// rescaled column gets norm gamma, not gamma * n_x. Zero columns are kept.
DeviationMatrix clip_deviations(const DeviationMatrix& dev, double gamma_lb, double gamma_ub, Index n_x);

/// n_x x k matrix of i.i.d. N(0, 1) draws, filled column by column.
Matrix gaussian_perturbations(Index n_x, Index k, Rng& rng);

}  // namespace enksgd
