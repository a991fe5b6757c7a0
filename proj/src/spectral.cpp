#include "spectral.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace chs {

void DomainSpec::validate() const {
  if (dimension < 1 || dimension > 3)
    throw std::invalid_argument("spatial dimension must be 1, 2 or 3");
  if (interior_points < 8)
    throw std::invalid_argument("need at least 8 interior grid points, got " +
                                std::to_string(interior_points));
  if (!(length > 0.0) || !std::isfinite(length))
    throw std::invalid_argument("domain length must be positive and finite");
}

Eigen::VectorXd trapezoid_weights(const DomainSpec& domain) {
  Eigen::VectorXd w = Eigen::VectorXd::Constant(domain.nodes(), domain.spacing());
  w(0) *= 0.5;
  w(domain.last()) *= 0.5;
  return w;
}

double eigenvalue(int k, double length) {
  if (k < 0) throw std::invalid_argument("mode index must be non-negative");
  const double wave = k * std::numbers::pi / length;
  return wave * wave;
}

double r_eps(int k, double eps, double length) {
  if (k < 1)
    throw std::invalid_argument("A_eps acts on mean-zero fields; mode index must be >= 1");
  if (eps < 0.0) throw std::invalid_argument("viscosity eps must be non-negative");
  const double lam = eigenvalue(k, length);
  return lam * lam / (1.0 + eps * lam);
}

double mean(const Field& u, const DomainSpec& domain) {
  if (u.size() != domain.nodes())
    throw std::invalid_argument("field length does not match the grid");
  return trapezoid_weights(domain).dot(u) / domain.length;
}

SpectralBasis::SpectralBasis(const DomainSpec& domain, int modes)
    : domain_(domain), modes_(modes), weights_(trapezoid_weights(domain)) {
  domain_.validate();
  if (modes < 1 || modes > domain.last())
    throw std::invalid_argument("mode count must lie in 1..N+1, got " + std::to_string(modes));
  const int n = domain.nodes();
  samples_.resize(n, modes + 1);
  derivatives_.resize(n, modes + 1);
  for (int k = 0; k <= modes; ++k) {
    const double wave = k * std::numbers::pi / domain.length;
    const double c = normalization(k);
    for (int j = 0; j < n; ++j) {
      const double x = domain.position(j);
      samples_(j, k) = c * std::cos(wave * x);
      derivatives_(j, k) = -c * wave * std::sin(wave * x);
    }
  }
}

SpectralBasis SpectralBasis::complete(const DomainSpec& domain) {
  return SpectralBasis(domain, domain.last());
}

double SpectralBasis::normalization(int k) const {
  if (k == 0 || k == domain_.last()) return 1.0 / std::sqrt(domain_.length);
  return std::sqrt(2.0 / domain_.length);
}

Eigen::VectorXd SpectralBasis::coefficients(const Field& u) const {
  if (u.size() != domain_.nodes())
    throw std::invalid_argument("field length does not match the grid");
  return samples_.transpose() * weights_.cwiseProduct(u);
}

Field SpectralBasis::synthesize(const Eigen::VectorXd& coeffs) const {
  if (coeffs.size() != modes_ + 1)
    throw std::invalid_argument("coefficient vector must have K+1 entries");
  return samples_.rightCols(modes_) * coeffs.tail(modes_);
}

double sobolev_seminorm(const Field& u, double s, const SpectralBasis& complete) {
  if (s < -2.0 || s > 2.0) throw std::invalid_argument("Sobolev index must lie in [-2, 2]");
  const Eigen::VectorXd c = complete.coefficients(u);
  double acc = 0.0;
  for (int k = 1; k <= complete.modes(); ++k)
    acc += std::pow(complete.eigenvalue(k), s) * c(k) * c(k);
  return std::sqrt(acc);
}

NeumannLaplacian::NeumannLaplacian(const DomainSpec& domain)
    : domain_(domain), weights_(trapezoid_weights(domain)) {
  domain_.validate();
  const int n = domain.nodes();
  const int last = domain.last();
  const double inv_dx2 = 1.0 / (domain.spacing() * domain.spacing());

  matrix_ = Eigen::MatrixXd::Zero(n, n);
  for (int j = 1; j < last; ++j) {
    matrix_(j, j - 1) = -inv_dx2;
    matrix_(j, j) = 2.0 * inv_dx2;
    matrix_(j, j + 1) = -inv_dx2;
  }
  // Ghost-point reflection u_{-1} = u_1 keeps the operator symmetric under
  // the trapezoid weights.
  matrix_(0, 0) = 2.0 * inv_dx2;
  matrix_(0, 1) = -2.0 * inv_dx2;
  matrix_(last, last) = 2.0 * inv_dx2;
  matrix_(last, last - 1) = -2.0 * inv_dx2;

  // Range of A is the weighted-mean-zero subspace, so the multiplier of the
  // bordered system absorbs exactly m(w).
  Eigen::MatrixXd bordered = Eigen::MatrixXd::Zero(n + 1, n + 1);
  bordered.topLeftCorner(n, n) = matrix_;
  bordered.block(0, n, n, 1).setOnes();
  bordered.block(n, 0, 1, n) = weights_.transpose();
  bordered_.compute(bordered);

  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n + 1, n);
  rhs.topRows(n).setIdentity();
  inverse_ = bordered_.solve(rhs).topRows(n);
}

Field NeumannLaplacian::apply_inverse(const Field& w) const {
  if (w.size() != domain_.nodes())
    throw std::invalid_argument("field length does not match the grid");
  Eigen::VectorXd rhs(w.size() + 1);
  rhs.head(w.size()) = w;
  rhs(w.size()) = 0.0;
  Field y = bordered_.solve(rhs).head(w.size());
  if (!y.allFinite()) throw std::runtime_error("mean-zero Neumann solve failed");
  return y;
}

double NeumannLaplacian::mean(const Field& u) const {
  return weights_.dot(u) / domain_.length;
}

double NeumannLaplacian::inner(const Field& a, const Field& b) const {
  return weights_.dot(a.cwiseProduct(b));
}

}  // namespace chs
