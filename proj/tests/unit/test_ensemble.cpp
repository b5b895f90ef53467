#include <doctest.h>

#include "enksgd/ensemble.hpp"
#include "support.hpp"

using namespace enksgd;
using testing::random_matrix;

TEST_CASE("projection matrix for k=2") {
  Matrix expect(2, 2);
  expect << 0.5, -0.5, -0.5, 0.5;
  CHECK((projection_matrix(2) - expect).norm() == 0.0);
}

TEST_CASE("projection matrix is a symmetric idempotent annihilator of constants") {
  for (Index k = 2; k <= 64; ++k) {
    const Matrix pi = projection_matrix(k);
    CHECK((pi - pi.transpose()).norm() <= 1e-14);
    CHECK((pi * pi - pi).norm() <= 1e-13);
    CHECK((pi * Vector::Ones(k)).norm() <= 1e-14);
  }
}

TEST_CASE("projection matrix rejects k < 2") {
  CHECK_THROWS_AS(projection_matrix(1), InvalidEnsembleSize);
  CHECK_THROWS_AS(projection_matrix(0), InvalidEnsembleSize);
}

TEST_CASE("ensemble construction validates size and finiteness") {
  CHECK_THROWS_AS(Ensemble(Matrix::Zero(3, 1)), InvalidEnsembleSize);
  CHECK_THROWS_AS(Ensemble(Matrix::Zero(0, 4)), DimensionMismatch);
  Matrix bad = Matrix::Zero(2, 3);
  bad(1, 2) = std::nan("");
  try {
    Ensemble e(bad);
    FAIL("expected NonFiniteError");
  } catch (const NonFiniteError& err) {
    CHECK(std::string(err.what()).find("particle 2") != std::string::npos);
  }
}

TEST_CASE("mean, deviations and covariance on small ensembles") {
  SUBCASE("one dimension, two particles") {
    Ensemble e(Matrix{{1.0, 3.0}});
    CHECK(ensemble_mean(e)[0] == 2.0);
    CHECK(ensemble_deviations(e).values() == Matrix{{-1.0, 1.0}});
    CHECK(empirical_covariance(e)(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("2 x 3") {
    Ensemble e(Matrix{{1, 2, 3}, {4, 5, 6}});
    CHECK(ensemble_mean(e) == Vector{{2.0, 5.0}});
    CHECK(ensemble_deviations(e).values() == Matrix{{-1, 0, 1}, {-1, 0, 1}});
  }
  SUBCASE("identical columns") {
    Vector c{{0.3, -7.0, 2.5}};
    Ensemble e(c.replicate(1, 4));
    CHECK((ensemble_mean(e) - c).norm() <= 1e-15);
    CHECK(ensemble_deviations(e).values().norm() <= 1e-15);
    CHECK(empirical_covariance(e).norm() <= 1e-30);
  }
}

TEST_CASE("deviations agree with X Pi_K") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix x = random_matrix(5, 7, rng) * 10.0;
    Ensemble e(x);
    CHECK((ensemble_deviations(e).values() - x * projection_matrix(7)).norm() <= 1e-12);
  }
}

TEST_CASE("empirical covariance matches brute-force sum") {
  Rng rng(3);
  const Matrix x = random_matrix(3, 5, rng);
  Ensemble e(x);
  const Vector m = x.rowwise().mean();
  Matrix brute = Matrix::Zero(3, 3);
  for (Index k = 0; k < 5; ++k) brute += (x.col(k) - m) * (x.col(k) - m).transpose();
  brute /= 5.0;
  const Matrix cov = empirical_covariance(e);
  CHECK((cov - brute).norm() <= 1e-12);
  CHECK((cov - cov.transpose()).norm() == 0.0);
}

TEST_CASE("empirical covariance: rank, shift invariance and affine covariance") {
  Rng rng(5);
  const Matrix x = random_matrix(6, 4, rng);
  const Matrix cov = empirical_covariance(Ensemble(x));
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
  CHECK(es.eigenvalues().minCoeff() >= -1e-12);
  Eigen::FullPivLU<Matrix> lu(cov);
  lu.setThreshold(1e-10);
  CHECK(lu.rank() <= 3);

  const Vector shift = random_matrix(6, 1, rng) * 100.0;
  const Matrix shifted = x.colwise() + shift;
  CHECK(testing::rel_err(empirical_covariance(Ensemble(shifted)), cov) <= 1e-10);

  const Matrix a = random_matrix(6, 6, rng);
  const Matrix ax = (a * x).colwise() + shift;
  CHECK(testing::rel_err(empirical_covariance(Ensemble(ax)), a * cov * a.transpose()) <= 1e-10);
}

TEST_CASE("recombine") {
  Rng rng(7);
  const Vector m{{1.0, -2.0, 3.0}};

  SUBCASE("zero deviations give copies of the mean") {
    Ensemble e = recombine(DeviationMatrix(Matrix::Zero(3, 4)), m);
    for (Index k = 0; k < 4; ++k) CHECK(e.particle(k) == m);
  }
  SUBCASE("uncentered deviations still land on the mean") {
    Matrix d = random_matrix(3, 6, rng);
    d.col(0) += Vector::Constant(3, 50.0);
    Ensemble e = recombine(DeviationMatrix(d), m);
    CHECK((ensemble_mean(e) - m).norm() <= 1e-12);
    CHECK((ensemble_deviations(e).values() - d * projection_matrix(6)).norm() <= 1e-12);
  }
  SUBCASE("centered deviations are added exactly") {
    Matrix d{{-1, 0, 1}, {2, -4, 2}, {0.5, 0.5, -1.0}};
    Ensemble e = recombine(DeviationMatrix(d), m);
    CHECK(e.states() == (d.colwise() + m).eval());
  }
  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(recombine(DeviationMatrix(Matrix::Zero(2, 4)), m), DimensionMismatch);
  }
}
