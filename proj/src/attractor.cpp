#include "attractor.hpp"

#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace chs {

void PullbackConfig::validate(const Integrator& integrator) const {
  if (times.empty()) throw std::invalid_argument("pullback needs at least one time");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] >= 0.0) || !std::isfinite(times[i]))
      throw std::invalid_argument("pullback times must be finite and non-negative");
    if (i > 0 && !(times[i] > times[i - 1]))
      throw std::invalid_argument("pullback times must be strictly increasing");
  }
  if (initial.size() < 2) throw std::invalid_argument("pullback needs at least two initial conditions");
  const DomainSpec& domain = integrator.domain();
  for (const PhysicalState& s : initial) {
    if (s.phi.size() != domain.nodes())
      throw std::invalid_argument("initial condition does not match the grid");
    if (std::abs(mean(s.phi, domain) - integrator.params().beta) > 1e-10)
      throw std::invalid_argument("initial conditions must have mean beta");
  }
}

PullbackResult pullback_experiment(const PullbackConfig& config, const Integrator& integrator,
                                   const NoisePath& path) {
  config.validate(integrator);
  const double h = integrator.dt();
  std::vector<long> starts;
  for (double T : config.times) {
    const double steps = T / h;
    if (std::abs(steps - std::round(steps)) > 1e-9 * std::max(1.0, steps))
      throw std::invalid_argument("pullback time " + std::to_string(T) + " is not on the step grid");
    starts.push_back(-std::lround(steps));
  }
  const long earliest = starts.back();
  if (!path.covers(earliest, 0))
    throw std::out_of_range("noise path horizon does not reach back to -" +
                            std::to_string(config.times.back()));

  // z is one stationary trajectory from the earliest start; its values at
  // each start time are shared by all runs beginning there.
  std::vector<ConvolutionState> z_at_start(starts.size());
  {
    ConvolutionState z = integrator.convolution().stationary(config.convolution_seed);
    long m = earliest;
    for (std::size_t k = starts.size(); k-- > 0;) {
      for (; m < starts[k]; ++m) integrator.convolution().step(z, path, m);
      z_at_start[k] = z;
    }
  }

  const std::size_t ics = config.initial.size();
  auto run = [&](std::size_t task) {
    const std::size_t k = task / ics;
    const std::size_t i = task % ics;
    ConvolutionState z = z_at_start[k];
    SystemState s = integrator.transform(config.initial[i], z, starts[k]);
    solve_flow(integrator, path, starts[k], 0, s, z);
    return integrator.recover(s, z).phi;
  };
  const auto finals = parallel_map(starts.size() * ics, run);

  PullbackResult result;
  result.times = config.times;
  const LEpsMetric& metric = integrator.metric();
  for (std::size_t k = 0; k < starts.size(); ++k) {
    std::vector<Field> states(finals.begin() + k * ics, finals.begin() + (k + 1) * ics);
    std::vector<PullbackRow> rows;
    double diameter = 0.0;
    for (std::size_t i = 0; i < ics; ++i) {
      for (std::size_t j = i + 1; j < ics; ++j) {
        PullbackRow r;
        r.T = config.times[k];
        r.i = static_cast<int>(i);
        r.j = static_cast<int>(j);
        r.distance = metric.distance(states[i], states[j]);
        diameter = std::max(diameter, r.distance);
        rows.push_back(r);
      }
    }
    for (PullbackRow& r : rows) {
      r.diameter = diameter;
      result.rows.push_back(r);
    }
    result.diameters.push_back(diameter);
    result.final_states.push_back(std::move(states));
  }
  return result;
}

double hausdorff_semidistance(const std::vector<Field>& a, const std::vector<Field>& b,
                              const LEpsMetric& metric) {
  if (a.empty() || b.empty()) throw std::invalid_argument("semidistance needs non-empty sets");
  double sup = 0.0;
  for (const Field& x : a) {
    double inf = std::numeric_limits<double>::infinity();
    for (const Field& y : b) inf = std::min(inf, metric.distance(x, y));
    sup = std::max(sup, inf);
  }
  return sup;
}

bool non_increasing_after_smoothing(const std::vector<double>& values) {
  if (values.size() < 3) return true;
  std::vector<double> smooth;
  for (std::size_t i = 0; i + 2 < values.size(); ++i)
    smooth.push_back(std::min({values[i], values[i + 1], values[i + 2]}));
  return std::is_sorted(smooth.rbegin(), smooth.rend());
}

double absorption_rate(double lambda1, double lambda) {
  if (!(lambda1 > 0.0) || !(lambda > 0.0))
    throw std::invalid_argument("absorption rate needs lambda_1 > 0 and lambda > 0");
  return std::min({lambda1 / 4.0, lambda1 * lambda1 / 4.0, lambda});
}

ConvolutionTrace trace_convolution(const ConvolutionProcess& process, ConvolutionState z,
                                   const NoisePath& path, long from, long to, int p) {
  if (to < from) throw std::invalid_argument("trace end precedes its start");
  if (!path.covers(from, to)) throw std::out_of_range("noise path does not cover the trace window");
  ConvolutionTrace trace;
  auto record = [&](long m) {
    trace.times.push_back(m * path.dt());
    trace.interior_power.push_back(std::pow(process.interior_sobolev_norm(z, 1.5), 2.0 * p));
    trace.boundary_square.push_back(process.boundary_norm2(z));
  };
  record(from);
  for (long m = from; m < to; ++m) {
    process.step(z, path, m);
    record(m + 1);
  }
  trace.final_l_eps_norm2 = process.l_eps_norm2(z);
  return trace;
}

AbsorbingEstimate absorbing_radius(const ModelParams& params, double constant,
                                   const ConvolutionTrace& trace, double kappa) {
  if (!(constant > 0.0)) throw std::invalid_argument("absorbing constant must be positive");
  if (!(kappa > 0.0)) throw std::invalid_argument("kappa must be positive");
  if (trace.times.empty()) throw std::invalid_argument("empty convolution trace");
  AbsorbingEstimate e;
  e.t = trace.times.back();
  e.kappa = kappa;
  e.constant = constant;
  e.horizon = e.t - trace.times.front();
  e.z_norm_term = trace.final_l_eps_norm2;
  e.beta_term = 1.0 + std::pow(params.beta, 2.0 * params.f.p());

  double peak = 0.0;
  for (std::size_t i = 0; i < trace.times.size(); ++i)
    peak = std::max(peak, trace.interior_power[i] + trace.boundary_square[i]);
  for (std::size_t i = 1; i < trace.times.size(); ++i) {
    const double dt = trace.times[i] - trace.times[i - 1];
    const double w0 = std::exp(-kappa * (e.t - trace.times[i - 1]));
    const double w1 = std::exp(-kappa * (e.t - trace.times[i]));
    e.conv_integral_z1 += 0.5 * dt * (w0 * trace.interior_power[i - 1] + w1 * trace.interior_power[i]);
    e.conv_integral_z2 += 0.5 * dt * (w0 * trace.boundary_square[i - 1] + w1 * trace.boundary_square[i]);
  }
  e.tail_bound = std::exp(-kappa * e.horizon) * peak / kappa;
  e.r2 = constant * (e.beta_term + e.z_norm_term + e.conv_integral_z1 + e.conv_integral_z2);
  e.radius2 = 2.0 * (e.r2 + e.z_norm_term);
  return e;
}

double calibrate_absorbing_constant(const std::vector<std::pair<double, AbsorbingEstimate>>& pilot) {
  if (pilot.empty()) throw std::invalid_argument("calibration needs a pilot ensemble");
  double c = 0.0;
  for (const auto& [state_norm2, est] : pilot) {
    const double x = est.beta_term + est.z_norm_term + est.conv_integral_z1 + est.conv_integral_z2;
    c = std::max(c, (0.5 * state_norm2 - est.z_norm_term) / x);
  }
  return std::max(c, std::numeric_limits<double>::min());
}

}  // namespace chs
