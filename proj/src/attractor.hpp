#pragma once

#include "dynamics.hpp"

#include <cstdint>
#include <vector>

namespace chs {

/// Pullback experiment: every initial pair is started at -T and evolved to
/// time 0 under the same noise path.
struct PullbackConfig {
  std::vector<double> times;             // increasing, >= 0
  std::vector<PhysicalState> initial;    // >= 2, all with mean beta
  std::uint64_t convolution_seed = 0;    // stationary start of z at -max T

  void validate(const Integrator& integrator) const;
};

struct PullbackRow {
  double T = 0.0;
  int i = 0;
  int j = 0;
  double distance = 0.0;
  double diameter = 0.0;
};

struct PullbackResult {
  std::vector<PullbackRow> rows;
  std::vector<double> times;
  std::vector<double> diameters;
  // Physical states at time 0, indexed [time][initial condition].
  std::vector<std::vector<Field>> final_states;
};

PullbackResult pullback_experiment(const PullbackConfig& config, const Integrator& integrator,
                                   const NoisePath& path);

/// sup_{a in A} inf_{b in B} |a - b|_{L_eps}.
double hausdorff_semidistance(const std::vector<Field>& a, const std::vector<Field>& b,
                              const LEpsMetric& metric);

/// Non-increasing check after replacing each value by the minimum over a
/// window of three consecutive entries.
bool non_increasing_after_smoothing(const std::vector<double>& values);

/// min{lambda_1/4, lambda_1^2/4, lambda}.
double absorption_rate(double lambda1, double lambda);

/// Samples of the convolution norms on [t - H, t].
struct ConvolutionTrace {
  std::vector<double> times;
  std::vector<double> interior_power;  // |z1|_{3/2}^{2p}
  std::vector<double> boundary_square; // |z2|_Gamma^2
  double final_l_eps_norm2 = 0.0;      // |(z1(t), z2(t))|^2_{L_eps}
};

/// Runs z along path from step `from` (state z given there) to `to` and
/// records the integrands of the absorbing estimate on every step.
ConvolutionTrace trace_convolution(const ConvolutionProcess& process, ConvolutionState z,
                                   const NoisePath& path, long from, long to, int p);

struct AbsorbingEstimate {
  double t = 0.0;
  double radius2 = 0.0;           // R_t^2 = 2 (r_t^2 + z_norm_term)
  double r2 = 0.0;
  double kappa = 0.0;
  double constant = 1.0;
  double z_norm_term = 0.0;
  double conv_integral_z1 = 0.0;
  double conv_integral_z2 = 0.0;
  double beta_term = 0.0;         // 1 + beta^{2p}
  double horizon = 0.0;
  double tail_bound = 0.0;        // e^{-kappa H} peak / kappa
};

/// r_t^2 = C (1 + beta^{2p} + |z(t)|^2 + exponentially weighted integrals of
/// the trace), truncated at the trace start.
AbsorbingEstimate absorbing_radius(const ModelParams& params, double constant,
                                   const ConvolutionTrace& trace, double kappa);

/// Smallest C for which every pilot sample satisfies |state|^2 <= R^2.
/// Each sample pairs |state(t)|^2_{L_eps} with the estimate computed at C.
double calibrate_absorbing_constant(const std::vector<std::pair<double, AbsorbingEstimate>>& pilot);

}  // namespace chs
