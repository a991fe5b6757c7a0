#include "spectral.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace chs;

namespace {

DomainSpec grid(int n) {
  DomainSpec d;
  d.interior_points = n;
  return d;
}

Field sample(const DomainSpec& d, double (*fn)(double)) {
  Field u(d.nodes());
  for (int j = 0; j < d.nodes(); ++j) u(j) = fn(d.position(j));
  return u;
}

}  // namespace

TEST_CASE("domain validation") {
  CHECK_NOTHROW(grid(8).validate());
  CHECK_THROWS_AS(grid(7).validate(), std::invalid_argument);
  DomainSpec d;
  d.dimension = 4;
  CHECK_THROWS(d.validate());
  d = DomainSpec{};
  d.length = 0.0;
  CHECK_THROWS(d.validate());
}

TEST_CASE("trapezoid weights integrate linear functions exactly") {
  const DomainSpec d = grid(20);
  const Eigen::VectorXd w = trapezoid_weights(d);
  CHECK(w.sum() == doctest::Approx(std::numbers::pi).epsilon(1e-14));
  const Field x = sample(d, [](double t) { return t; });
  CHECK(w.dot(x) == doctest::Approx(std::numbers::pi * std::numbers::pi / 2).epsilon(1e-14));
  CHECK(mean(Field::Constant(d.nodes(), 0.3), d) == doctest::Approx(0.3));
}

TEST_CASE("Neumann eigenvalues and A_eps spectrum") {
  for (int k = 1; k <= 10; ++k) {
    CHECK(eigenvalue(k) == doctest::Approx(k * k).epsilon(1e-14));
    const double eps = 0.01;
    const double lam = k * k;
    CHECK(r_eps(k, eps) == doctest::Approx(lam / (eps + 1.0 / lam)).epsilon(1e-14));
  }
  CHECK(eigenvalue(2, 2.0) == doctest::Approx(std::numbers::pi * std::numbers::pi));
  CHECK_THROWS_AS(r_eps(0, 0.01), std::invalid_argument);
}

TEST_CASE("sampled cosine basis is orthonormal in the trapezoid product") {
  const DomainSpec d = grid(16);
  const SpectralBasis basis = SpectralBasis::complete(d);
  const Eigen::VectorXd w = trapezoid_weights(d);
  const Eigen::MatrixXd& e = basis.samples();
  const Eigen::MatrixXd gram = e.transpose() * w.asDiagonal() * e;
  CHECK((gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() < 1e-13);
  CHECK(basis.normalization(3) == doctest::Approx(std::sqrt(2.0 / std::numbers::pi)));
}

TEST_CASE("derivative samples match finite differences of the modes") {
  const DomainSpec d = grid(16);
  const SpectralBasis basis(d, 4);
  const double x = 0.7, h = 1e-6;
  for (int k = 1; k <= 4; ++k) {
    const double c = basis.normalization(k);
    const double fd = c * (std::cos(k * (x + h)) - std::cos(k * (x - h))) / (2 * h);
    CHECK(-c * k * std::sin(k * x) == doctest::Approx(fd).epsilon(1e-8));
    CHECK(basis.derivative_samples()(5, k) ==
          doctest::Approx(-c * k * std::sin(k * d.position(5))).epsilon(1e-12));
  }
}

TEST_CASE("coefficients and synthesis invert each other on mean-zero fields") {
  const DomainSpec d = grid(24);
  const SpectralBasis basis = SpectralBasis::complete(d);
  Field u = sample(d, [](double x) { return std::exp(std::sin(x)) + x * x; });
  u.array() -= mean(u, d);
  const Field back = basis.synthesize(basis.coefficients(u));
  CHECK((back - u).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("Sobolev seminorm of a single mode") {
  const DomainSpec d = grid(32);
  const SpectralBasis basis = SpectralBasis::complete(d);
  const Field e3 = basis.samples().col(3);
  for (double s : {-2.0, -1.0, 0.0, 0.5, 1.5, 2.0})
    CHECK(sobolev_seminorm(e3, s, basis) == doctest::Approx(std::pow(9.0, s / 2)).epsilon(1e-10));
  CHECK_THROWS(sobolev_seminorm(e3, 2.5, basis));
}

TEST_CASE("discrete Laplacian: kernel, symmetry and exact cosine eigenvectors") {
  const DomainSpec d = grid(20);
  const NeumannLaplacian lap(d);
  const Eigen::VectorXd& w = lap.weights();
  CHECK(lap.apply(Field::Ones(d.nodes())).cwiseAbs().maxCoeff() < 1e-10);

  const Eigen::MatrixXd wa = w.asDiagonal() * lap.matrix();
  CHECK((wa - wa.transpose()).cwiseAbs().maxCoeff() < 1e-9 * wa.cwiseAbs().maxCoeff());

  const double dx = d.spacing();
  for (int k = 1; k <= d.last(); ++k) {
    Field c(d.nodes());
    for (int j = 0; j < d.nodes(); ++j) c(j) = std::cos(k * d.position(j));
    const double s = std::sin(0.5 * k * dx);
    const double mu = 4.0 * s * s / (dx * dx);
    CHECK((lap.apply(c) - mu * c).cwiseAbs().maxCoeff() < 1e-9 * mu);
  }
}

TEST_CASE("dense generalized eigensolve reproduces the discrete spectrum") {
  const DomainSpec d = grid(12);
  const NeumannLaplacian lap(d);
  const Eigen::VectorXd& w = lap.weights();
  const Eigen::MatrixXd wa = w.asDiagonal() * lap.matrix();
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (wa + wa.transpose()),
                                                               Eigen::MatrixXd(w.asDiagonal()));
  const double dx = d.spacing();
  for (int k = 0; k <= d.last(); ++k) {
    const double s = std::sin(0.5 * k * dx);
    CHECK(es.eigenvalues()(k) == doctest::Approx(4.0 * s * s / (dx * dx)).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("mean-zero inverse") {
  const DomainSpec d = grid(16);
  const NeumannLaplacian lap(d);
  const Field f = sample(d, [](double x) { return std::cos(x) + 0.4 * x; });
  const Field y = lap.apply_inverse(f);
  CHECK(std::abs(lap.mean(y)) < 1e-13);
  Field deflected = f;
  deflected.array() -= lap.mean(f);
  CHECK((lap.apply(y) - deflected).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((lap.inverse_matrix() * f - y).cwiseAbs().maxCoeff() < 1e-12);
  // Positive on mean-zero fields.
  CHECK(lap.inner(deflected, lap.apply_inverse(deflected)) > 0.0);
}
