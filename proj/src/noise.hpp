#pragma once

// Q-Wiener driving paths, the shift on them, and the per-mode
// Ornstein-Uhlenbeck processes that realize the stochastic convolutions.

#include "spectral.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <initializer_list>
#include <iosfwd>
#include <memory>
#include <span>

namespace chs {

/// Counter-based seed split: splitmix64 finalizer folded over the ids.
/// derive_seed(s, {a, b}) is a pure function; callers use ids of the form
/// (run id, module id, stream id).
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> ids);

/// Diagonal covariances of the interior and boundary Wiener processes.
/// Interior weights are alpha_k = k^-gamma for k = 1..modes.
struct CovarianceSpec {
  double gamma = 2.0;
  int modes = 64;
  std::array<double, 2> boundary{1.0, 1.0};

  double alpha(int k) const;
  // Rejects gamma <= 1 (not trace class), negative weights and modes < 1.
  void validate() const;
};

/// Two-sided discrete Brownian path. Step m covers [m dt, (m+1) dt]; the
/// stored steps are first_step() <= m < end_step(). Channel c < modes is
/// interior mode c+1, channels modes and modes+1 are the two boundary
/// points. Increments are immutable and shared between shifted views.
class NoisePath {
 public:
  static NoisePath sample(const CovarianceSpec& spec, double t_min, double t_max, double dt,
                          std::uint64_t seed);

  double dt() const { return data_->dt; }
  int modes() const { return data_->modes; }
  int channels() const { return data_->modes + 2; }
  std::uint64_t seed() const { return data_->seed; }
  long first_step() const { return data_->first - offset_; }
  long end_step() const { return data_->first + static_cast<long>(data_->increments.rows()) - offset_; }
  double t_min() const { return first_step() * dt(); }
  double t_max() const { return end_step() * dt(); }
  long offset() const { return offset_; }

  bool covers(long from, long to) const { return from >= first_step() && to <= end_step(); }

  // Brownian increments of step m, one per channel.
  std::span<const double> increments(long m) const;
  double increment(long m, int channel) const { return increments(m)[channel]; }
  // W(m dt) for one channel, with W(0) = 0.
  double value(long m, int channel) const;

  // theta_{steps dt}: the returned path satisfies
  // shifted.increments(m) == increments(m + steps).
  NoisePath shifted(long steps) const;
  // Same for a time on the grid; off-grid times are rejected.
  NoisePath shifted_time(double t) const;

  // Sums `factor` consecutive increments; keeps only whole coarse steps.
  NoisePath coarsened(int factor) const;

  // Little-endian binary dump: magic, dt, t_min, t_max, modes, seed,
  // first step, step count, then row-major increments as float64.
  void write(std::ostream& out) const;
  static NoisePath read(std::istream& in);

  bool same_data(const NoisePath& other) const { return data_ == other.data_; }

 private:
  struct Data {
    double dt = 0.0;
    int modes = 0;
    std::uint64_t seed = 0;
    long first = 0;
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> increments;
  };
  NoisePath(std::shared_ptr<const Data> data, long offset) : data_(std::move(data)), offset_(offset) {}

  std::shared_ptr<const Data> data_;
  long offset_ = 0;
};

struct ConvolutionParams {
  double eps = 0.01;
  double eps0 = 1.0;
  double lambda = 1.0;
  double sigma1 = 0.1;
  double sigma2 = 0.1;
};

/// Modal values of the two convolutions. z1(k-1) is the coefficient of e_k.
struct ConvolutionState {
  Eigen::VectorXd z1;
  std::array<double, 2> z2{0.0, 0.0};
};

/// Exact OU transitions per channel. Interior mode k relaxes at r_eps(k)
/// with diffusion scale sigma1 sqrt(alpha_k)/(1 + eps lambda_k); each
/// boundary component relaxes at eps0 lambda with scale eps0 sigma2
/// sqrt(alpha_i).
class ConvolutionProcess {
 public:
  ConvolutionProcess(const CovarianceSpec& spec, const ConvolutionParams& params,
                     double length = std::numbers::pi);

  int modes() const { return spec_.modes; }
  int channels() const { return spec_.modes + 2; }
  double length() const { return length_; }
  const CovarianceSpec& spec() const { return spec_; }
  const ConvolutionParams& params() const { return params_; }

  double rate(int channel) const { return rates_(channel); }
  double scale(int channel) const { return scales_(channel); }
  // scale^2 / (2 rate).
  double stationary_variance(int channel) const;

  ConvolutionState zero() const;
  // Every channel drawn from its stationary law. Throws when a rate is not
  // positive.
  ConvolutionState stationary(std::uint64_t seed) const;

  // One exact transition of length h driven by the given Brownian
  // increments (one per channel). h = 0 leaves the state unchanged.
  void advance(ConvolutionState& z, std::span<const double> increments, double h) const;
  void step(ConvolutionState& z, const NoisePath& path, long m) const;

  // Grid samples of z1, projected to trapezoid mean zero. The basis needs
  // at least modes() modes.
  Field interior_field(const ConvolutionState& z, const SpectralBasis& basis) const;
  // Exact spatial derivative of the truncated z1 expansion at x.
  double interior_gradient(const ConvolutionState& z, double x) const;

  // Continuous-norm helpers used by the absorbing estimate.
  double l_eps_norm2(const ConvolutionState& z) const;
  double interior_sobolev_norm(const ConvolutionState& z, double s) const;
  double boundary_norm2(const ConvolutionState& z) const;

 private:
  CovarianceSpec spec_;
  ConvolutionParams params_;
  double length_;
  Eigen::VectorXd rates_;
  Eigen::VectorXd scales_;
};

/// Half the least-squares log-log slope of the second-order structure
/// function over integer lags in [lag_min, lag_max], capped at 1.
/// Requires >= 1000 samples, a lag range of at least one decade and a
/// non-constant series.
double holder_exponent(std::span<const double> series, int lag_min, int lag_max);

}  // namespace chs
