#pragma once

#include <functional>

#include "enksgd/types.hpp"

namespace enksgd::meanfield {

// Continuous-time covariance dynamics of the ensemble method for a fixed
// curvature B. Test oracles only; the optimizer does not use them.

/// P - (1/delta) P B P + beta delta I.
Matrix covariance_ode_rhs(const Matrix& p, const Matrix& b, double delta, double beta);

/// delta [(1 - e^{-t}) B + delta e^{-t} P0^{-1}]^{-1}, the beta = 0 solution.
Matrix closed_form_covariance(double t, const Matrix& p0, const Matrix& b, double delta);

/// Stationary covariance eigenvalue for a curvature eigenvalue lambda:
/// (delta / (2 lambda)) (1 + sqrt(1 + 4 beta lambda)).
double stationary_eigen_relation(double lambda, double delta, double beta);

using MatrixOde = std::function<Matrix(const Matrix&)>;

/// Fixed-step classical RK4 on an autonomous matrix ODE, symmetrizing after
/// each step. Throws NonFiniteError if the state stops being positive definite.
Matrix integrate_matrix_ode(const MatrixOde& rhs, const Matrix& p0, double t_end, int n_steps);

bool is_spd(const Matrix& m);

}  // namespace enksgd::meanfield
