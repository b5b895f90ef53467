#pragma once

#include <cmath>
#include <random>
#include <string>

#include "enksgd/problem.hpp"

namespace enksgd::testing {

// D(y) = |y - y_obs|^2 / 2 around the linear map y = G x.
inline ProblemSpec linear_problem(const Matrix& g, const Vector& y_obs, const std::string& name = "linear") {
  ProblemSpec p;
  p.name = name;
  p.n_x = g.cols();
  p.n_y = g.rows();
  p.forward = [g](const Vector& x) -> Vector { return g * x; };
  p.loss_value = [y_obs](const Vector& y) { return 0.5 * (y - y_obs).squaredNorm(); };
  p.loss_grad = [y_obs](const Vector& y) -> Vector { return y - y_obs; };
  p.loss_hess = [n = g.rows()](const Vector&) -> Matrix { return Matrix::Identity(n, n); };
  p.x0 = Vector::Zero(g.cols());
  return p;
}

inline ProblemSpec quadratic_1d(double g, double y, double x0 = 0.0) {
  ProblemSpec p = linear_problem(Matrix::Constant(1, 1, g), Vector::Constant(1, y), "quadratic_1d");
  p.x0 = Vector::Constant(1, x0);
  return p;
}

inline Matrix random_matrix(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = n(rng);
  return m;
}

inline Matrix random_spd(Index n, Rng& rng, double shift = 0.5) {
  const Matrix a = random_matrix(n, n, rng);
  Matrix s = a * a.transpose() / static_cast<double>(n);
  s.diagonal().array() += shift;
  return 0.5 * (s + s.transpose());
}

// Orthogonal factor times a log-uniform spectrum in [1, cond].
inline Matrix random_conditioned(Index n, double cond, Rng& rng) {
  Eigen::HouseholderQR<Matrix> qr1(random_matrix(n, n, rng));
  Eigen::HouseholderQR<Matrix> qr2(random_matrix(n, n, rng));
  const Matrix u = qr1.householderQ();
  const Matrix v = qr2.householderQ();
  Vector s(n);
  for (Index i = 0; i < n; ++i) s[i] = std::pow(cond, n > 1 ? static_cast<double>(i) / (n - 1) : 0.0);
  return u * s.asDiagonal() * v.transpose();
}

inline double rel_err(const Matrix& got, const Matrix& want) {
  const double scale = want.norm();
  return (got - want).norm() / (scale > 0 ? scale : 1.0);
}

}  // namespace enksgd::testing
