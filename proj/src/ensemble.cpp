#include "enksgd/ensemble.hpp"

#include <string>

namespace enksgd {

namespace {

void check_size(Index k) {
  if (k < 2) {
    throw InvalidEnsembleSize("ensemble needs at least 2 particles, got " + std::to_string(k));
  }
}

}  // namespace

Ensemble::Ensemble(Matrix states) : states_(std::move(states)) {
  check_size(states_.cols());
  if (states_.rows() < 1) throw DimensionMismatch("ensemble state dimension must be positive");
  for (Index k = 0; k < states_.cols(); ++k) {
    if (!states_.col(k).allFinite()) {
      throw NonFiniteError("non-finite entry in particle " + std::to_string(k));
    }
  }
}

Matrix projection_matrix(Index k) {
  check_size(k);
  Matrix pi = Matrix::Identity(k, k);
  pi.array() -= 1.0 / static_cast<double>(k);
  return pi;
}

Vector ensemble_mean(const Ensemble& e) { return e.states().rowwise().mean(); }

DeviationMatrix ensemble_deviations(const Ensemble& e) {
  const Vector mean = ensemble_mean(e);
  return DeviationMatrix(e.states().colwise() - mean);
}

Matrix empirical_covariance(const Ensemble& e) {
  const Matrix dev = ensemble_deviations(e).values();
  Matrix cov = dev * dev.transpose() / static_cast<double>(e.k_particles());
  return 0.5 * (cov + cov.transpose());
}

Ensemble recombine(const DeviationMatrix& dev, const Vector& mean) {
  require_same(mean.size(), dev.n_x(), "recombine: mean length");
  check_size(dev.k_particles());
  // dev * Pi_K is the same as subtracting the row means.
  const Vector residual = dev.values().rowwise().mean();
  Matrix states = dev.values().colwise() - residual;
  states.colwise() += mean;
  return Ensemble(std::move(states));
}

}  // namespace enksgd
