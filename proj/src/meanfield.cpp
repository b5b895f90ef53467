#include "enksgd/meanfield.hpp"

#include <cmath>
#include <string>

namespace enksgd::meanfield {

bool is_spd(const Matrix& m) {
  if (m.rows() != m.cols() || !m.allFinite()) return false;
  if ((m - m.transpose()).norm() > 1e-10 * (1.0 + m.norm())) return false;
  Eigen::LLT<Matrix> llt(0.5 * (m + m.transpose()));
  return llt.info() == Eigen::Success;
}

Matrix covariance_ode_rhs(const Matrix& p, const Matrix& b, double delta, double beta) {
  require_same(b.rows(), p.rows(), "curvature size");
  Matrix out = p - (p * b * p) / delta;
  out.diagonal().array() += beta * delta;
  return 0.5 * (out + out.transpose());
}

Matrix closed_form_covariance(double t, const Matrix& p0, const Matrix& b, double delta) {
  if (t < 0.0) throw UsageError("closed_form_covariance: t must be >= 0");
  if (!is_spd(p0) || !is_spd(b)) throw DomainError("closed_form_covariance: inputs must be SPD");
  if (t == 0.0) return p0;
  const double decay = std::exp(-t);
  const Matrix p0_inv = p0.llt().solve(Matrix::Identity(p0.rows(), p0.cols()));
  const Matrix precision = (1.0 - decay) * b + delta * decay * p0_inv;
  Matrix p = delta * precision.llt().solve(Matrix::Identity(p0.rows(), p0.cols()));
  return 0.5 * (p + p.transpose());
}

double stationary_eigen_relation(double lambda, double delta, double beta) {
  if (!(lambda > 0.0) || !(delta > 0.0) || !(beta >= 0.0)) {
    throw UsageError("stationary_eigen_relation: need lambda > 0, delta > 0, beta >= 0");
  }
  return delta / (2.0 * lambda) * (1.0 + std::sqrt(1.0 + 4.0 * beta * lambda));
}

Matrix integrate_matrix_ode(const MatrixOde& rhs, const Matrix& p0, double t_end, int n_steps) {
  if (n_steps < 1) throw UsageError("integrate_matrix_ode: n_steps must be >= 1");
  const double h = t_end / n_steps;
  Matrix p = p0;
  for (int s = 0; s < n_steps; ++s) {
    const Matrix k1 = rhs(p);
    const Matrix k2 = rhs(p + 0.5 * h * k1);
    const Matrix k3 = rhs(p + 0.5 * h * k2);
    const Matrix k4 = rhs(p + h * k3);
    p += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    p = 0.5 * (p + p.transpose());
    if (!is_spd(p)) {
      throw NonFiniteError("integrate_matrix_ode: lost positive definiteness at step " + std::to_string(s));
    }
  }
  return p;
}

}  // namespace enksgd::meanfield
