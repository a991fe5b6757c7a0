#include "experiments.hpp"

#include "attractor.hpp"
#include "errors.hpp"
#include "output.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <ostream>
#include <stdexcept>

namespace chs {

namespace {

long grid_steps(double duration, double dt) {
  const double steps = duration / dt;
  if (std::abs(steps - std::round(steps)) > 1e-9 * std::max(1.0, steps))
    throw std::invalid_argument("duration " + format_number(duration) +
                                " is not a whole number of steps of dt = " + format_number(dt));
  return std::lround(steps);
}

std::vector<std::string> numbered(const std::string& stem, int count) {
  std::vector<std::string> names;
  for (int i = 1; i <= count; ++i) names.push_back(stem + std::to_string(i));
  return names;
}

PhysicalState initial_state(const RunConfig& c, int index) {
  return smooth_random_state(c.domain, c.params.beta, c.ic_amplitude, c.ic_modes,
                             derive_seed(c.seed, {kStreamInitial, static_cast<std::uint64_t>(index)}));
}

void simulate(const RunConfig& c, RunOutput& out, std::ostream& log) {
  const Integrator integrator(c.params, c.domain, c.noise, c.dt);
  const long steps = grid_steps(c.duration, c.dt);
  const NoisePath path =
      NoisePath::sample(c.noise, 0.0, steps * c.dt, c.dt, derive_seed(c.seed, {kStreamPath}));
  ConvolutionState z = integrator.convolution().stationary(derive_seed(c.seed, {kStreamConvolution}));
  SystemState state = integrator.transform(initial_state(c, 0), z, 0);

  std::array<int, 4> probes;
  for (int k = 0; k < 4; ++k) probes[k] = static_cast<int>(std::lround((k + 1) * c.domain.last() / 5.0));

  std::vector<std::string> header{"t", "m_phi", "L_eps_norm2", "V_norm2", "free_energy"};
  for (int k = 0; k < 4; ++k) header.push_back("phi_probe_" + std::to_string(k));
  header.insert(header.end(), {"psi_0", "psi_pi"});
  CsvWriter csv = out.csv("trajectory.csv", header);

  auto record = [&] {
    const PhysicalState phys = integrator.recover(state, z);
    const EnergyReport e = energy(phys, c.params, integrator.laplacian());
    std::vector<double> row{state.t, mean(phys.phi, c.domain), e.l_eps_norm2, e.v_norm2, e.free_energy};
    for (int j : probes) row.push_back(phys.phi(j));
    row.push_back(phys.psi[0]);
    row.push_back(phys.psi[1]);
    csv.row(row);
  };

  record();
  for (long m = 0; m < steps; ++m) {
    integrator.step(state, z, path);
    if ((m + 1) % c.output_every == 0 || m + 1 == steps) record();
  }
  csv.close();
  log << "simulate: " << steps << " steps to t = " << format_number(state.t) << '\n';
}

void pullback(const RunConfig& c, RunOutput& out, std::ostream& log) {
  const Integrator integrator(c.params, c.domain, c.noise, c.dt);
  const double kappa = absorption_rate(eigenvalue(1, c.domain.length), c.params.lambda);
  const long horizon_steps = static_cast<long>(std::ceil(20.0 / kappa / c.dt));
  const long back = std::max(grid_steps(c.pullback_times.back(), c.dt), horizon_steps);
  const NoisePath path =
      NoisePath::sample(c.noise, -back * c.dt, 0.0, c.dt, derive_seed(c.seed, {kStreamPath}));

  PullbackConfig cfg;
  cfg.times = c.pullback_times;
  for (int i = 0; i < c.ic_count; ++i) cfg.initial.push_back(initial_state(c, i));
  cfg.convolution_seed = derive_seed(c.seed, {kStreamConvolution});
  const PullbackResult result = pullback_experiment(cfg, integrator, path);

  CsvWriter csv = out.csv("pullback.csv", {"T", "ic_i", "ic_j", "distance_at_0", "diameter"});
  for (const PullbackRow& r : result.rows)
    csv.row({r.T, static_cast<double>(r.i), static_cast<double>(r.j), r.distance, r.diameter});
  csv.close();

  ConvolutionState z0 = integrator.convolution().stationary(cfg.convolution_seed);
  const ConvolutionTrace trace =
      trace_convolution(integrator.convolution(), z0, path, -horizon_steps, 0, c.params.f.p());
  const AbsorbingEstimate est = absorbing_radius(c.params, c.absorb_constant, trace, kappa);
  double largest = 0.0;
  for (const auto& states : result.final_states)
    for (const Field& phi : states) largest = std::max(largest, integrator.metric().norm2(phi));

  CsvWriter abs = out.csv("absorbing.csv",
                          {"t", "R2", "r2", "kappa", "C", "z_norm_term", "conv_integral_z1",
                           "conv_integral_z2", "beta_term", "horizon", "tail_bound",
                           "max_state_norm2", "absorbed"});
  abs.row({est.t, est.radius2, est.r2, est.kappa, est.constant, est.z_norm_term,
           est.conv_integral_z1, est.conv_integral_z2, est.beta_term, est.horizon, est.tail_bound,
           largest, largest <= est.radius2 ? 1.0 : 0.0});
  abs.close();
  if (largest > est.radius2) out.note("absorbing", "calibration failure: state norm exceeds R^2");
  log << "pullback: diameter at T = " << format_number(result.times.back()) << " is "
      << format_number(result.diameters.back()) << '\n';
}

void lyapunov(const RunConfig& c, RunOutput& out, std::ostream& log) {
  const Integrator integrator(c.params, c.domain, c.noise, c.dt);
  const long burn = grid_steps(c.burn_in, c.dt);
  const long steps = burn + grid_steps(c.duration, c.dt);
  const NoisePath path =
      NoisePath::sample(c.noise, 0.0, steps * c.dt, c.dt, derive_seed(c.seed, {kStreamPath}));
  ConvolutionState z = integrator.convolution().stationary(derive_seed(c.seed, {kStreamConvolution}));
  const SystemState state = integrator.transform(initial_state(c, 0), z, 0);

  BenettinOptions opts;
  opts.directions = c.lyap_directions;
  opts.duration = c.duration;
  opts.renorm_every = c.renorm_every;
  opts.burn_in = c.burn_in;
  opts.seed = derive_seed(c.seed, {kStreamTangent});
  const LyapunovResult r = benettin(integrator, path, state, z, opts);

  SystemState settled = state;
  ConvolutionState zs = z;
  solve_flow(integrator, path, 0, burn, settled, zs);
  const double horizon = std::min(1.0, c.duration);
  const double trace = trace_bound(integrator, path, settled, zs,
                                   random_bundle(integrator, c.lyap_directions, opts.seed, burn).vectors,
                                   horizon);

  CsvWriter csv = out.csv("lyapunov.csv", {"index", "exponent", "halfwidth"});
  for (std::size_t i = 0; i < r.exponents.size(); ++i)
    csv.row({static_cast<double>(i + 1), r.exponents[i], r.halfwidths[i]});
  csv.close();

  double sum = 0.0;
  for (double mu : r.exponents) sum += mu;
  const double ky = kaplan_yorke(r.exponents);
  CsvWriter summary = out.csv("lyapunov_summary.csv",
                              {"directions", "kaplan_yorke", "exponent_sum", "trace_average",
                               "renorm_interval", "total_time", "renormalizations"});
  summary.row({static_cast<double>(r.exponents.size()), ky, sum, trace, r.renorm_interval,
               r.total_time, static_cast<double>(r.renormalizations)});
  summary.close();
  log << "lyapunov: mu_1 = " << format_number(r.exponents.front())
      << ", Kaplan-Yorke = " << format_number(ky) << '\n';
}

int sweep(const RunConfig& c, RunOutput& out, std::ostream& log) {
  SweepOptions opts;
  opts.params = c.params;
  opts.domain = c.domain;
  opts.noise = c.noise;
  opts.dt = c.dt;
  opts.benettin.directions = c.lyap_directions;
  opts.benettin.duration = c.duration;
  opts.benettin.renorm_every = c.renorm_every;
  opts.benettin.burn_in = c.burn_in;
  opts.benettin.seed = derive_seed(c.seed, {kStreamTangent});
  opts.ensemble.members = c.ensemble;
  opts.ensemble.settle = c.settle;
  opts.ensemble.amplitude = c.ic_amplitude;
  opts.ensemble.seed = derive_seed(c.seed, {kStreamEnsemble});
  opts.consts = c.bound;
  opts.bound_eps0 = c.bound_eps0_list;
  opts.seed = c.seed;
  const SweepResult result = sweep_eps0(c.eps0_list, opts);

  const int d_max = c.lyap_directions;
  std::vector<std::string> header{"eps0", "M", "d_bound", "d_bound_static", "kaplan_yorke"};
  for (const std::string& name : numbered("exponents_", d_max)) header.push_back(name);
  header.insert(header.end(), {"fit_slope", "fit_r2"});
  CsvWriter csv = out.csv("sweep.csv", header);
  for (const SweepRow& row : result.rows) {
    if (row.failed) continue;
    std::vector<double> values{row.eps0, row.m_sup, static_cast<double>(row.d_bound),
                               static_cast<double>(row.d_bound_static), row.kaplan_yorke};
    for (int i = 0; i < d_max; ++i)
      values.push_back(i < static_cast<int>(row.exponents.size()) ? row.exponents[i] : NAN);
    values.push_back(result.fit.slope);
    values.push_back(result.fit.r2);
    csv.row(values);
  }
  csv.close();

  CsvWriter bound = out.csv("bound_scaling.csv",
                            {"eps0", "M", "d_bound", "d_bound_static", "d_critical", "fit_slope",
                             "fit_r2", "critical_slope", "critical_r2"});
  for (const BoundRow& row : result.bound_rows)
    bound.row({row.eps0, result.fixed_m, static_cast<double>(row.d_bound),
               static_cast<double>(row.d_bound_static), row.d_critical, result.fit.slope,
               result.fit.r2, result.critical_fit.slope, result.critical_fit.r2});
  bound.close();

  out.note("kaplan_yorke_monotone", result.kaplan_yorke_monotone ? "true" : "false");
  out.note("static_bound_constant", result.static_constant ? "true" : "false");
  log << "sweep-eps0: bound slope " << format_number(result.fit.slope) << " (critical "
      << format_number(result.critical_fit.slope) << ")\n";
  if (result.partial) {
    out.mark_partial(result.failure);
    log << "sweep-eps0: stopped early: " << result.failure << '\n';
    return kExitBlowup;
  }
  return kExitOk;
}

void noise_check(const RunConfig& c, RunOutput& out, std::ostream& log) {
  const ConvolutionProcess process(c.noise, c.params.convolution(), c.domain.length);
  {
    const NoisePath path = NoisePath::sample(c.noise, 0.0, c.noise_steps * c.noise_dt, c.noise_dt,
                                             derive_seed(c.seed, {kStreamPath}));
    const int modes = std::min(8, c.noise.modes);
    ConvolutionState z = process.stationary(derive_seed(c.seed, {kStreamConvolution}));
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(modes);
    Eigen::VectorXd sum2 = Eigen::VectorXd::Zero(modes);
    for (long m = 0; m < c.noise_steps; ++m) {
      process.step(z, path, m);
      sum += z.z1.head(modes);
      sum2 += z.z1.head(modes).cwiseAbs2();
    }
    const double n = static_cast<double>(c.noise_steps);
    CsvWriter csv = out.csv("noise_variance.csv",
                            {"mode", "sample_variance", "stationary_variance", "relative_error"});
    for (int k = 0; k < modes; ++k) {
      const double var = (sum2(k) - sum(k) * sum(k) / n) / (n - 1.0);
      const double expected = process.stationary_variance(k);
      csv.row({static_cast<double>(k + 1), var, expected,
               expected > 0.0 ? std::abs(var - expected) / expected : 0.0});
    }
    csv.close();
  }

  const NoisePath path = NoisePath::sample(c.noise, 0.0, c.holder_samples * c.holder_dt, c.holder_dt,
                                           derive_seed(c.seed, {kStreamHolder}));
  ConvolutionState z = process.stationary(derive_seed(c.seed, {kStreamHolder, kStreamConvolution}));
  const double x = c.domain.position(static_cast<int>(std::lround(c.domain.last() / 4.0)));
  std::vector<double> series;
  series.reserve(c.holder_samples);
  for (long m = 0; m < c.holder_samples; ++m) {
    series.push_back(process.interior_gradient(z, x));
    process.step(z, path, m);
  }
  const int lag_min = 1, lag_max = 10;
  const double exponent = holder_exponent(series, lag_min, lag_max);
  CsvWriter csv = out.csv("holder.csv", {"x", "samples", "dt", "lag_min", "lag_max", "exponent"});
  csv.row({x, static_cast<double>(c.holder_samples), c.holder_dt, static_cast<double>(lag_min),
           static_cast<double>(lag_max), exponent});
  csv.close();
  log << "noise-check: Hoelder exponent of grad z1 at x = " << format_number(x) << " is "
      << format_number(exponent) << '\n';
}

}  // namespace

const std::vector<std::string>& subcommand_names() {
  static const std::vector<std::string> names{"simulate", "pullback", "lyapunov", "sweep-eps0",
                                              "noise-check"};
  return names;
}

bool is_subcommand(const std::string& name) {
  const auto& names = subcommand_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

int run_experiment(const RunConfig& config, const std::string& subcommand, std::ostream& log) {
  if (!is_subcommand(subcommand)) {
    log << "error: unknown subcommand '" << subcommand << "'\n";
    return kExitConfig;
  }
  try {
    validate_config(config);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  const std::string echo = serialize_config(config);
  std::unique_ptr<RunOutput> out;
  try {
    out = std::make_unique<RunOutput>(config.out_dir, subcommand);
    out->text("config.txt", echo);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  int code = kExitOk;
  std::string status = "ok";
  try {
    if (subcommand == "simulate") simulate(config, *out, log);
    else if (subcommand == "pullback") pullback(config, *out, log);
    else if (subcommand == "lyapunov") lyapunov(config, *out, log);
    else if (subcommand == "sweep-eps0") code = sweep(config, *out, log);
    else noise_check(config, *out, log);
    if (code == kExitBlowup) status = "blowup";
  } catch (const BlowupError& e) {
    log << "error: " << e.what() << '\n';
    out->mark_partial(e.what());
    code = kExitBlowup;
    status = "blowup";
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    out->mark_partial(e.what());
    code = kExitConfig;
    status = "error";
  }

  try {
    out->write_manifest(echo, config.seed, status);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    if (code == kExitOk) code = kExitConfig;
  }
  return code;
}

}  // namespace chs
