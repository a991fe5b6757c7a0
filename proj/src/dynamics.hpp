#pragma once

// Pathwise solver for the transformed viscous Cahn-Hilliard system with a
// dynamic boundary condition of intensity eps0.
//
// The unknown is the transformed pair (u, v) = (phi - z1, psi - z2). u is
// stored as a full grid field whose two end slots carry the coupling
// u|_boundary = v + z2 - z1|_boundary.

#include "errors.hpp"
#include "noise.hpp"
#include "spectral.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

namespace chs {

/// f(u) = sum_{k=1}^{D} a_k u^k with coefficients {a_1, ..., a_D}.
class Nonlinearity {
 public:
  // Odd degree D = 2p - 1 >= 3 with a_D > 0.
  static Nonlinearity polynomial(std::vector<double> coefficients);
  // f(u) = u^3 - u.
  static Nonlinearity double_well() { return polynomial({-1.0, 0.0, 1.0}); }
  // f(u) = a u. Only for tangent-flow comparisons; not a valid model
  // potential.
  static Nonlinearity linear(double slope);

  const std::vector<double>& coefficients() const { return coefficients_; }
  int degree() const { return static_cast<int>(coefficients_.size()); }
  int p() const { return (degree() + 1) / 2; }
  bool is_linear() const { return degree() == 1; }

  double value(double u) const;
  double derivative(double u) const;
  // F with F' = f and F(0) = 0.
  double potential(double u) const;

  bool operator==(const Nonlinearity&) const = default;

 private:
  explicit Nonlinearity(std::vector<double> c) : coefficients_(std::move(c)) {}
  std::vector<double> coefficients_;
};

struct ModelParams {
  double eps = 0.01;
  double eps0 = 1.0;
  double lambda = 1.0;
  double sigma1 = 0.1;
  double sigma2 = 0.1;
  Nonlinearity f = Nonlinearity::double_well();
  double beta = 0.0;

  ConvolutionParams convolution() const { return {eps, eps0, lambda, sigma1, sigma2}; }
  // Throws std::invalid_argument naming the violated constraint.
  void validate() const;
};

/// Transformed state at grid time step * dt.
struct SystemState {
  Field u;
  std::array<double, 2> v{0.0, 0.0};
  long step = 0;
  double t = 0.0;
};

/// Physical pair; psi always equals the end values of phi.
struct PhysicalState {
  Field phi;
  std::array<double, 2> psi{0.0, 0.0};
};

/// (phi, psi) inner product eps (a, b) + (A^-1 a, b) + a_0 b_0 + a_M b_M on
/// full fields whose end slots carry the boundary values.
class LEpsMetric {
 public:
  LEpsMetric(const NeumannLaplacian& laplacian, double eps);

  const Eigen::MatrixXd& gram() const { return gram_; }
  double inner(const Field& a, const Field& b) const { return a.dot(gram_ * b); }
  double norm2(const Field& a) const { return inner(a, a); }
  double distance(const Field& a, const Field& b) const;

 private:
  Eigen::MatrixXd gram_;
};

/// Linear algebra of one implicit step of length dt.
///
/// Unknowns are (u_1..u_N, v_0, v_M, c) where c is the multiplier of the
/// trapezoid mass constraint. The bulk rows are
///   (eps + A^-1)(u' - u)/dt - L u' + c = -f(phi),
/// the boundary rows are the half-cell balance
///   (v' - v)/(eps0 dt) + dx/2 [(eps + A^-1)(u' - u)/dt + c + f(phi)]
///     + lambda v' + (one-sided flux of u') = 0,
/// and the last row fixes sum w_j u'_j. u'_0 = v'_0 + b_0 with the known
/// convolution offset b, which is moved to the right-hand side.
class DiscreteOperators {
 public:
  static std::shared_ptr<const DiscreteOperators> assemble(const ModelParams& params,
                                                           const DomainSpec& domain, double dt);

  double dt() const { return dt_; }
  const DomainSpec& domain() const { return domain_; }
  const NeumannLaplacian& laplacian() const { return *laplacian_; }
  // eps I + A^-1 on full fields.
  const Eigen::MatrixXd& mass() const { return mass_; }
  const Eigen::MatrixXd& system() const { return system_; }
  double condition_number() const { return condition_; }
  int unknowns() const { return static_cast<int>(system_.rows()); }

  // Right-hand side columns multiplying the boundary offsets b_0, b_M.
  const Eigen::VectorXd& offset_column(int side) const { return offset_columns_[side]; }

  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const { return lu_.solve(rhs); }

  DiscreteOperators(const ModelParams& params, const DomainSpec& domain, double dt,
                    std::shared_ptr<const NeumannLaplacian> laplacian);

 private:
  DomainSpec domain_;
  double dt_;
  std::shared_ptr<const NeumannLaplacian> laplacian_;
  Eigen::MatrixXd mass_;
  Eigen::MatrixXd system_;
  std::array<Eigen::VectorXd, 2> offset_columns_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  double condition_ = 0.0;
};

struct EnergyReport {
  double l_eps_norm2 = 0.0;
  double v_norm2 = 0.0;
  // Integral of |grad phi|^2 / 2 + F(phi).
  double free_energy = 0.0;
  // free_energy + lambda/2 |psi|^2; non-increasing along noiseless runs.
  double lyapunov_functional = 0.0;
  // F(0) |G|, subtracted from free_energy so the zero state reports 0.
  double potential_offset = 0.0;
};

EnergyReport energy(const PhysicalState& state, const ModelParams& params,
                    const NeumannLaplacian& laplacian);

/// Outward normal derivatives (-u'(0), u'(L)) from second-order one-sided
/// differences.
std::array<double, 2> normal_derivative(const Field& u, const DomainSpec& domain);

/// Smooth cosine field with random coefficients of size amplitude / k over
/// modes 1..modes, shifted to mean beta.
PhysicalState smooth_random_state(const DomainSpec& domain, double beta, double amplitude,
                                  int modes, std::uint64_t seed);

/// One-step map and its derivative for fixed (params, domain, noise
/// covariance, dt). Shareable read-only between threads.
class Integrator {
 public:
  Integrator(const ModelParams& params, const DomainSpec& domain, const CovarianceSpec& noise,
             double dt);

  const ModelParams& params() const { return params_; }
  const DomainSpec& domain() const { return domain_; }
  const CovarianceSpec& noise() const { return noise_; }
  double dt() const { return ops_->dt(); }
  const DiscreteOperators& operators() const { return *ops_; }
  const NeumannLaplacian& laplacian() const { return ops_->laplacian(); }
  const ConvolutionProcess& convolution() const { return convolution_; }
  const SpectralBasis& basis() const { return basis_; }
  const LEpsMetric& metric() const { return metric_; }

  Field noise_field(const ConvolutionState& z) const;

  SystemState transform(const PhysicalState& physical, const ConvolutionState& z, long step) const;
  PhysicalState recover(const SystemState& state, const ConvolutionState& z) const;
  double coupling_residual(const SystemState& state, const ConvolutionState& z) const;

  // Advances state and z by one step using path increments of step
  // state.step. Throws BlowupError when the state leaves [-1e8, 1e8].
  void step(SystemState& state, ConvolutionState& z, const NoisePath& path) const;

  // Derivative of step() applied to each column of `tangents` (full fields
  // with mean zero), linearized about phi = u + z1 before the step.
  void tangent_step(Eigen::MatrixXd& tangents, const Field& phi) const;

 private:
  Eigen::VectorXd explicit_rhs(const Field& u, const std::array<double, 2>& v,
                               const Field& forcing) const;
  void check_path(const NoisePath& path) const;

  ModelParams params_;
  DomainSpec domain_;
  CovarianceSpec noise_;
  std::shared_ptr<const DiscreteOperators> ops_;
  ConvolutionProcess convolution_;
  SpectralBasis basis_;
  LEpsMetric metric_;
};

/// Steps from grid index `from` to `to` along path. state.step must equal
/// from; z must be the convolution state at that time.
void solve_flow(const Integrator& integrator, const NoisePath& path, long from, long to,
                SystemState& state, ConvolutionState& z);

}  // namespace chs
