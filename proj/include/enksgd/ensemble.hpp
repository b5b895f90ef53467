#pragma once

#include <utility>

#include "enksgd/types.hpp"

namespace enksgd {

/// N_x x K matrix of particle states, one particle per column.
///
/// Construction validates K >= 2 and that every entry is finite; a
/// non-finite entry is reported with the offending particle index.
class Ensemble {
 public:
  explicit Ensemble(Matrix states);

  const Matrix& states() const { return states_; }
  Index n_x() const { return states_.rows(); }
  Index k_particles() const { return states_.cols(); }
  Vector particle(Index k) const { return states_.col(k); }

 private:
  Matrix states_;
};

/// Particle deviations from the ensemble mean (one column per particle).
///
/// Values produced by ensemble_deviations() are centered. The update kernels
/// in transform.hpp may leave a small residual column sum (the Gaussian
/// perturbations are not projected); recombine() removes it.
class DeviationMatrix {
 public:
  DeviationMatrix() = default;
  explicit DeviationMatrix(Matrix values) : values_(std::move(values)) {}

  const Matrix& values() const& { return values_; }
  Matrix& values() & { return values_; }
  Matrix values() && { return std::move(values_); }
  Index n_x() const { return values_.rows(); }
  Index k_particles() const { return values_.cols(); }

 private:
  Matrix values_;
};

/// Centering operator I - (1/K) 1 1^T. Throws InvalidEnsembleSize for k < 2.
Matrix projection_matrix(Index k);

Vector ensemble_mean(const Ensemble& e);

/// x^(k) - mean for every particle, by direct subtraction.
DeviationMatrix ensemble_deviations(const Ensemble& e);

/// (1/K) Y Y^T with Y the centered deviations.
Matrix empirical_covariance(const Ensemble& e);

/// Particles (dev * Pi_K) + mean 1^T. The projection makes the ensemble mean
/// equal `mean` even when the columns of `dev` do not sum to zero.
Ensemble recombine(const DeviationMatrix& dev, const Vector& mean);

}  // namespace enksgd
