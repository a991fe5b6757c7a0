#pragma once

// Tangent dynamics, QR Lyapunov spectra, trace estimates of the linearized
// generator and the dimension bound with its eps0 scaling.

#include "dynamics.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace chs {

/// d tangent pairs stored as full mean-zero fields; the end slots of each
/// column are the boundary components.
struct TangentBundle {
  Eigen::MatrixXd vectors;
  long step = 0;

  int size() const { return static_cast<int>(vectors.cols()); }
  std::array<double, 2> psi(int i) const {
    return {vectors(0, i), vectors(vectors.rows() - 1, i)};
  }
};

/// Random L_eps-orthonormal bundle with trapezoid mean zero.
TangentBundle random_bundle(const Integrator& integrator, int directions, std::uint64_t seed,
                            long step);

/// Advances the bundle one step along the base trajectory. The base state
/// and its convolution state must be at the bundle's step (before the base
/// itself is stepped).
void tangent_step(TangentBundle& bundle, const SystemState& base, const ConvolutionState& z,
                  const Integrator& integrator);

/// Modified Gram-Schmidt in the given metric. Returns the diagonal of R.
/// Throws std::runtime_error when a diagonal entry drops below 1e-300.
Eigen::VectorXd orthonormalize(Eigen::MatrixXd& vectors, const LEpsMetric& metric);

/// Largest |G - I| entry of the Gram matrix in the metric.
double gram_deviation(const Eigen::MatrixXd& vectors, const LEpsMetric& metric);

struct BenettinOptions {
  int directions = 4;
  double duration = 100.0;  // measured time after burn-in
  int renorm_every = 10;    // steps between QR renormalizations
  double burn_in = 0.0;
  int blocks = 10;
  std::uint64_t seed = 0;
};

struct LyapunovResult {
  std::vector<double> exponents;   // descending, per unit time
  std::vector<double> halfwidths;  // 2 standard errors over blocks
  double renorm_interval = 0.0;
  double total_time = 0.0;
  long renormalizations = 0;
};

/// Benettin QR method along the base trajectory started from (base, z).
/// Requires directions <= 12 and at least 100 renormalization intervals.
LyapunovResult benettin(const Integrator& integrator, const NoisePath& path, SystemState base,
                        ConvolutionState z, const BenettinOptions& options);

/// j + (mu_1 + ... + mu_j) / |mu_{j+1}|; 0 when mu_1 < 0.
double kaplan_yorke(std::span<const double> exponents);

/// Generator of the linearized flow at phi, xi = L q, from a dt-independent
/// factorization: (eps + A^-1) xi = Delta q - f'(phi) q - c in the bulk with
/// the half-cell balance at the two end nodes and w^T xi = 0.
class TangentGenerator {
 public:
  explicit TangentGenerator(const Integrator& integrator);

  Eigen::MatrixXd apply(const Eigen::MatrixXd& q, const Field& phi) const;
  // sum_i <L q_i, q_i>_{L_eps}. Rejects bases whose Gram matrix deviates
  // from the identity by more than 1e-8.
  double trace(const Eigen::MatrixXd& basis, const Field& phi) const;

 private:
  const Integrator& integrator_;
  Eigen::MatrixXd stiffness_;  // K on full fields
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

/// Time average over [0, duration] of the generator trace along the base
/// trajectory, carrying the basis with the tangent flow and
/// re-orthonormalizing it every step.
double trace_bound(const Integrator& integrator, const NoisePath& path, SystemState base,
                   ConvolutionState z, Eigen::MatrixXd basis, double duration = 1.0);

/// Generic constants of the dimension criterion; n is the spatial dimension
/// entering the exponents.
struct BoundConstants {
  double c1 = 1.0;
  double c2 = 1.0;
  double c3 = 1.0;
  double c = 1.0;
  int n = 1;

  double q() const { return 2.0 + 0.5 * n; }
  double d_exponent() const { return 1.0 + 4.0 / n; }
  double eps0_exponent() const { return (4.0 + n) / (4.0 - n); }
  void validate() const;
};

/// Smallest integer d with c1 d^{1+4/n} > c2 eps0^{(4+n)/(4-n)} + c3 + c M.
/// The static variant drops the eps0 term.
int dimension_bound(const BoundConstants& consts, double eps0, double m_sup,
                    bool static_boundary = false);
/// Real root of c1 d^{1+4/n} = right-hand side.
double critical_dimension(const BoundConstants& consts, double eps0, double m_sup,
                          bool static_boundary = false);

struct EnsembleOptions {
  int members = 4;
  double settle = 20.0;  // time before the final unit interval
  double amplitude = 0.5;
  std::uint64_t seed = 0;
};

/// sup over ensemble members of the time integral over their final unit
/// interval of |f'(phi)|_{L^q}^q.
double measure_m(const Integrator& integrator, double q, const EnsembleOptions& options);

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};
LogLogFit fit_loglog(std::span<const double> x, std::span<const double> y);

struct SweepOptions {
  ModelParams params;
  DomainSpec domain;
  CovarianceSpec noise;
  double dt = 1e-3;
  BenettinOptions benettin;
  EnsembleOptions ensemble;
  BoundConstants consts;
  std::vector<double> bound_eps0{1e2, 1e3, 1e4, 1e5, 1e6};
  std::uint64_t seed = 0;
};

struct SweepRow {
  double eps0 = 0.0;
  double m_sup = 0.0;
  int d_bound = 0;
  int d_bound_static = 0;
  double kaplan_yorke = 0.0;
  std::vector<double> exponents;
  bool failed = false;
};

struct BoundRow {
  double eps0 = 0.0;
  int d_bound = 0;
  int d_bound_static = 0;
  double d_critical = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  // Analytic bound over bound_eps0 at the fixed M = max measured M.
  std::vector<BoundRow> bound_rows;
  double fixed_m = 0.0;
  LogLogFit fit;           // integer d_bound
  LogLogFit critical_fit;  // real critical dimension
  bool static_constant = false;
  bool kaplan_yorke_monotone = false;
  bool partial = false;
  std::string failure;
};

/// Table of the analytic bound over eps0 values at fixed M.
std::vector<BoundRow> bound_table(const BoundConstants& consts, std::span<const double> eps0_list,
                                  double m_sup);

/// Runs flow, M measurement and Benettin per eps0 (in parallel), then the
/// analytic bound scaling. A blow-up stops the sweep with partial = true.
SweepResult sweep_eps0(std::span<const double> eps0_list, const SweepOptions& options);

}  // namespace chs
