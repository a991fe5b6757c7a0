#pragma once

// Neumann eigenstructure on G = (0, L), trapezoid quadrature, and the
// discrete Neumann Laplacian with its mean-zero inverse.
//
// Grid: N interior nodes plus two boundary nodes, x_j = j dx for
// j = 0..N+1, dx = L/(N+1). Every grid vector ("field") has N+2 entries.

#include <Eigen/Dense>

#include <numbers>

namespace chs {

using Field = Eigen::VectorXd;

struct DomainSpec {
  int dimension = 1;                  // n; simulations are 1-D only
  double length = std::numbers::pi;   // |G|
  int interior_points = 128;          // N

  int nodes() const { return interior_points + 2; }
  int last() const { return interior_points + 1; }
  double spacing() const { return length / (interior_points + 1); }
  double position(int j) const { return j * spacing(); }

  // Throws std::invalid_argument when N < 8, n outside 1..3 or L <= 0.
  void validate() const;
};

// Composite trapezoid weights (dx/2 at the two ends, dx inside).
Eigen::VectorXd trapezoid_weights(const DomainSpec& domain);

// lambda_k = (k pi / L)^2, which is k^2 on (0, pi).
double eigenvalue(int k, double length = std::numbers::pi);

// Eigenvalue r_k of A_eps = (eps + A^{-1})^{-1} A. Rejects k = 0.
double r_eps(int k, double eps, double length = std::numbers::pi);

double mean(const Field& u, const DomainSpec& domain);

/// Grid-sampled cosine eigenfunctions e_0..e_K of the Neumann Laplacian,
/// normalized to unit trapezoid norm. For 1 <= k <= N this is the
/// continuous normalization sqrt(2/L) cos(k pi x / L) and the sampled family
/// is exactly orthonormal; k = N+1 (the grid Nyquist mode) gets 1/sqrt(L).
class SpectralBasis {
 public:
  SpectralBasis(const DomainSpec& domain, int modes);

  // All N+1 non-constant discrete modes; used for transforms.
  static SpectralBasis complete(const DomainSpec& domain);

  const DomainSpec& domain() const { return domain_; }
  int modes() const { return modes_; }
  double eigenvalue(int k) const { return chs::eigenvalue(k, domain_.length); }

  // nodes x (K+1); column k samples e_k.
  const Eigen::MatrixXd& samples() const { return samples_; }
  // nodes x (K+1); column k samples the exact derivative e_k'.
  const Eigen::MatrixXd& derivative_samples() const { return derivatives_; }
  double normalization(int k) const;

  // Trapezoid projections (u, e_k) for k = 0..K.
  Eigen::VectorXd coefficients(const Field& u) const;
  // sum_{k=1..K} c_k e_k, where c(0) is ignored.
  Field synthesize(const Eigen::VectorXd& coeffs) const;

 private:
  DomainSpec domain_;
  int modes_;
  Eigen::VectorXd weights_;
  Eigen::MatrixXd samples_;
  Eigen::MatrixXd derivatives_;
};

/// |u|_s = (sum_{k>=1} lambda_k^s u_k^2)^{1/2} over the complete discrete
/// cosine expansion of u. Requires s in [-2, 2].
double sobolev_seminorm(const Field& u, double s, const SpectralBasis& complete);

/// Second-difference Neumann Laplacian A = -Delta (ghost-point reflection at
/// both ends). A is self-adjoint in the trapezoid inner product and its
/// kernel is exactly the constants. The mean-zero inverse is obtained from a
/// bordered LU factorization of [A 1; w^T 0].
class NeumannLaplacian {
 public:
  explicit NeumannLaplacian(const DomainSpec& domain);

  const DomainSpec& domain() const { return domain_; }
  const Eigen::MatrixXd& matrix() const { return matrix_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  // Dense A^{-1} including the deflection w -> w - m(w).
  const Eigen::MatrixXd& inverse_matrix() const { return inverse_; }

  Field apply(const Field& w) const { return matrix_ * w; }
  // Unique mean-zero y with A y = w - m(w).
  Field apply_inverse(const Field& w) const;

  double mean(const Field& u) const;
  double inner(const Field& a, const Field& b) const;

 private:
  DomainSpec domain_;
  Eigen::VectorXd weights_;
  Eigen::MatrixXd matrix_;
  Eigen::PartialPivLU<Eigen::MatrixXd> bordered_;
  Eigen::MatrixXd inverse_;
};

}  // namespace chs
