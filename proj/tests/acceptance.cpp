#include "attractor.hpp"
#include "config.hpp"
#include "dynamics.hpp"
#include "experiments.hpp"
#include "lyapunov.hpp"
#include "noise.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <functional>
#include <string>
#include <vector>

using namespace chs;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

std::uint64_t stream(std::uint64_t seed, SeedStream s, std::uint64_t index = 0) {
  return derive_seed(seed, {static_cast<std::uint64_t>(s), index});
}

Field zero_field(const Field& like) { return Field::Zero(like.size()); }

// Mass conservation over five seeds of the default model.
Outcome mass_conservation() {
  RunConfig c = parse_config("");
  c.dt = 1e-3;
  c.duration = 10.0;
  const Integrator integrator(c.params, c.domain, c.noise, c.dt);
  const long steps = 10000;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const NoisePath path = NoisePath::sample(c.noise, 0.0, c.duration, c.dt, stream(seed, kStreamPath));
    ConvolutionState z = integrator.convolution().stationary(stream(seed, kStreamConvolution));
    const PhysicalState x0 = smooth_random_state(c.domain, 0.2, c.ic_amplitude, c.ic_modes,
                                                 stream(seed, kStreamInitial));
    SystemState s = integrator.transform(x0, z, 0);
    const double m0 = mean(x0.phi, c.domain);
    for (long m = 0; m < steps; ++m) {
      integrator.step(s, z, path);
      worst = std::max(worst, std::abs(mean(integrator.recover(s, z).phi, c.domain) - m0));
    }
  }
  return {worst <= 1e-10, "max |m(phi(t)) - m(phi(0))| = " + fmt(worst) + " over 5 seeds (limit 1e-10)"};
}

// Sample variance of the exact OU recursion against the stationary law.
Outcome ou_variance() {
  const RunConfig c = parse_config("");
  const ConvolutionProcess process(c.noise, c.params.convolution(), c.domain.length);
  const long steps = 100000;
  const double h = 1.0;
  const NoisePath path = NoisePath::sample(c.noise, 0.0, steps * h, h, stream(1, kStreamPath));
  ConvolutionState z = process.stationary(stream(1, kStreamConvolution));
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(8), sum2 = Eigen::VectorXd::Zero(8);
  for (long m = 0; m < steps; ++m) {
    process.step(z, path, m);
    sum += z.z1.head(8);
    sum2 += z.z1.head(8).cwiseAbs2();
  }
  double worst = 0.0;
  for (int k = 0; k < 8; ++k) {
    const double lam = eigenvalue(k + 1, c.domain.length);
    const double r = lam * lam / (1.0 + c.params.eps * lam);
    const double expected = c.params.sigma1 * c.params.sigma1 * c.noise.alpha(k + 1) /
                            (2.0 * r * std::pow(1.0 + c.params.eps * lam, 2));
    const double var = (sum2(k) - sum(k) * sum(k) / steps) / (steps - 1.0);
    worst = std::max(worst, std::abs(var - expected) / expected);
  }
  return {worst <= 0.05, "max relative variance error over modes 1..8 = " + fmt(worst) + " (limit 0.05)"};
}

// Composition and shift identities of the solution operator.
Outcome cocycle() {
  const RunConfig c = parse_config("");
  const Integrator integrator(c.params, c.domain, c.noise, c.dt);
  const LEpsMetric& metric = integrator.metric();
  double worst_split = 0.0, worst_shift = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const NoisePath path = NoisePath::sample(c.noise, 0.0, 3.0, c.dt, stream(seed, kStreamPath));
    const ConvolutionState z0 = integrator.convolution().stationary(stream(seed, kStreamConvolution));
    const PhysicalState x0 = smooth_random_state(c.domain, 0.0, c.ic_amplitude, c.ic_modes,
                                                 stream(seed, kStreamInitial));

    SystemState direct = integrator.transform(x0, z0, 0);
    ConvolutionState zd = z0;
    solve_flow(integrator, path, 0, 2000, direct, zd);

    SystemState first = integrator.transform(x0, z0, 0);
    ConvolutionState zf = z0;
    solve_flow(integrator, path, 0, 1000, first, zf);
    SystemState second = integrator.transform(integrator.recover(first, zf), zf, 1000);
    solve_flow(integrator, path, 1000, 2000, second, zf);
    worst_split = std::max(worst_split, metric.distance(integrator.recover(direct, zd).phi,
                                                        integrator.recover(second, zf).phi));

    const long s = 500;
    SystemState late = integrator.transform(x0, z0, 0);
    ConvolutionState zl = z0;
    solve_flow(integrator, path, 0, s, late, zl);
    const PhysicalState at_s = integrator.recover(late, zl);
    SystemState a = integrator.transform(at_s, zl, s);
    ConvolutionState za = zl;
    solve_flow(integrator, path, s, s + 1000, a, za);
    const NoisePath shifted = path.shifted(s);
    SystemState b = integrator.transform(at_s, zl, 0);
    ConvolutionState zb = zl;
    solve_flow(integrator, shifted, 0, 1000, b, zb);
    worst_shift = std::max(worst_shift, metric.distance(integrator.recover(a, za).phi,
                                                        integrator.recover(b, zb).phi));
  }
  const double worst = std::max(worst_split, worst_shift);
  return {worst <= 1e-12, "composition " + fmt(worst_split) + ", shift " + fmt(worst_shift) +
                              " in L_eps over 5 seeds (limit 1e-12)"};
}

// Finite-difference remainder of the flow against its linearization.
Outcome differentiability() {
  const RunConfig c = parse_config("");
  const Integrator integrator(c.params, c.domain, c.noise, c.dt);
  const LEpsMetric& metric = integrator.metric();
  const long steps = 100;
  const NoisePath path = NoisePath::sample(c.noise, 0.0, 1.0, c.dt, stream(1, kStreamPath));
  const ConvolutionState z0 = integrator.convolution().stationary(stream(1, kStreamConvolution));
  const PhysicalState x = smooth_random_state(c.domain, 0.0, 1.0, 8, stream(1, kStreamInitial, 0));
  Field q = smooth_random_state(c.domain, 0.0, 1.0, 8, stream(1, kStreamInitial, 1)).phi;
  q /= metric.distance(q, zero_field(q));

  auto flow = [&](const Field& phi) {
    const PhysicalState s{phi, {phi(0), phi(phi.size() - 1)}};
    ConvolutionState z = z0;
    SystemState st = integrator.transform(s, z, 0);
    solve_flow(integrator, path, 0, steps, st, z);
    return integrator.recover(st, z).phi;
  };
  const Field base = flow(x.phi);
  Eigen::MatrixXd dq = q;
  ConvolutionState z = z0;
  SystemState st = integrator.transform(x, z, 0);
  for (long m = 0; m < steps; ++m) {
    integrator.tangent_step(dq, integrator.recover(st, z).phi);
    integrator.step(st, z, path);
  }
  std::vector<double> hs{1e-3, 1e-4, 1e-5, 1e-6}, rs;
  std::string values;
  for (double h : hs) {
    const Field r = flow(x.phi + h * q) - base - h * Field(dq.col(0));
    rs.push_back(metric.distance(r, zero_field(r)));
    values += (values.empty() ? "" : ", ") + fmt(rs.back(), 3);
  }
  const LogLogFit fit = fit_loglog(hs, rs);
  return {fit.slope >= 1.9, "remainder slope " + fmt(fit.slope) + " (limit 1.9); remainders " + values};
}

// Benettin on the frozen linearization about zero against the generator spectrum.
Outcome linear_spectrum() {
  ModelParams params;
  params.sigma1 = params.sigma2 = 0.0;
  params.f = Nonlinearity::polynomial({1.0, 0.0, 1.0});
  DomainSpec domain;
  domain.interior_points = 32;
  CovarianceSpec noise;
  noise.modes = 16;
  const double dt = 1e-5;
  const Integrator integrator(params, domain, noise, dt);
  const Field phi = Field::Zero(domain.nodes());

  const Eigen::VectorXd& w = integrator.laplacian().weights();
  const auto n = w.size();
  Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(n, n - 1);
  for (Eigen::Index j = 1; j < n; ++j) {
    basis(j, j - 1) = 1.0;
    basis(0, j - 1) = -w(j) / w(0);
  }
  const Eigen::MatrixXd pinv = (basis.transpose() * basis).inverse() * basis.transpose();
  const Eigen::MatrixXd generator = pinv * TangentGenerator(integrator).apply(basis, phi);
  Eigen::VectorXd oracle = Eigen::EigenSolver<Eigen::MatrixXd>(generator).eigenvalues().real();
  std::sort(oracle.data(), oracle.data() + oracle.size(), std::greater<>());

  BenettinOptions o;
  o.directions = 6;
  o.burn_in = 1.0;
  o.duration = 2.0;
  o.renorm_every = 10;
  o.seed = stream(1, kStreamTangent);
  const double total = o.burn_in + o.duration;
  const NoisePath path = NoisePath::sample(noise, 0.0, total + dt, dt, stream(1, kStreamPath));
  const ConvolutionState z = integrator.convolution().zero();
  const SystemState base = integrator.transform({phi, {0.0, 0.0}}, z, 0);
  const LyapunovResult r = benettin(integrator, path, base, z, o);

  double worst = 0.0;
  std::string pairs;
  for (int i = 0; i < 6; ++i) {
    worst = std::max(worst, std::abs(r.exponents[i] - oracle(i)) / std::abs(oracle(i)));
    pairs += (i ? ", " : "") + fmt(r.exponents[i]) + "/" + fmt(oracle(i));
  }
  return {worst <= 0.02, "max relative error " + fmt(worst) + " (limit 0.02); Benettin/oracle " + pairs};
}

// Pullback diameter of four initial conditions in the default scenario.
Outcome pullback_attraction() {
  const RunConfig c = parse_config("");
  const Integrator integrator(c.params, c.domain, c.noise, c.dt);
  const long back = std::lround(c.pullback_times.back() / c.dt);
  const NoisePath path = NoisePath::sample(c.noise, -back * c.dt, 0.0, c.dt, stream(1, kStreamPath));
  PullbackConfig cfg;
  cfg.times = c.pullback_times;
  for (int i = 0; i < 4; ++i)
    cfg.initial.push_back(smooth_random_state(c.domain, c.params.beta, c.ic_amplitude, c.ic_modes,
                                              stream(1, kStreamInitial, i)));
  cfg.convolution_seed = stream(1, kStreamConvolution);
  const PullbackResult r = pullback_experiment(cfg, integrator, path);
  const bool monotone = non_increasing_after_smoothing(r.diameters);
  std::string series;
  for (std::size_t i = 0; i < r.times.size(); ++i)
    series += (i ? ", " : "") + fmt(r.times[i], 3) + ":" + fmt(r.diameters[i], 3);
  const double last = r.diameters.back();
  return {monotone && last <= 1e-6, std::string("smoothed diameters ") +
                                        (monotone ? "non-increasing" : "increase") + ", diameter at T = 50 is " +
                                        fmt(last) + " (limit 1e-6); T:diameter " + series};
}

// Slope of the analytic bound in eps0 at a fixed measured M.
Outcome bound_scaling() {
  const RunConfig c = scenario_preset("sweep");
  const Integrator integrator(c.params, c.domain, c.noise, c.dt);
  EnsembleOptions e;
  e.members = c.ensemble;
  e.settle = c.settle;
  e.amplitude = c.ic_amplitude;
  e.seed = stream(1, kStreamEnsemble);
  const double m = measure_m(integrator, c.bound.q(), e);

  const auto start = std::chrono::steady_clock::now();
  const std::vector<BoundRow> rows = bound_table(c.bound, c.bound_eps0_list, m);
  std::vector<double> x, d, dc;
  bool static_constant = true;
  std::string table;
  for (const BoundRow& r : rows) {
    x.push_back(r.eps0);
    d.push_back(r.d_bound);
    dc.push_back(r.d_critical);
    static_constant = static_constant && r.d_bound_static == rows.front().d_bound_static;
    table += (table.empty() ? "" : ", ") + std::to_string(r.d_bound);
  }
  const LogLogFit fit = fit_loglog(x, d);
  const LogLogFit critical = fit_loglog(x, dc);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const double rel = std::abs(fit.slope - 1.0 / 3.0) * 3.0;
  return {rel <= 0.02 && static_constant && seconds < 1.0,
          "M = " + fmt(m) + ", integer d* = {" + table + "}, slope " + fmt(fit.slope) +
              " (target 1/3 within 2%, off by " + fmt(100 * rel, 3) + "%), real-root slope " +
              fmt(critical.slope) + ", static column " + (static_constant ? "constant" : "varies")};
}

// Kaplan-Yorke dimension over the eps0 sweep, majority over three seeds.
Outcome directional_impact() {
  const RunConfig c = scenario_preset("sweep");
  int monotone = 0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    SweepOptions o;
    o.params = c.params;
    o.domain = c.domain;
    o.noise = c.noise;
    o.dt = c.dt;
    o.benettin.directions = c.lyap_directions;
    o.benettin.duration = c.duration;
    o.benettin.renorm_every = c.renorm_every;
    o.benettin.burn_in = c.burn_in;
    o.benettin.seed = stream(seed, kStreamTangent);
    o.ensemble.members = c.ensemble;
    o.ensemble.settle = c.settle;
    o.ensemble.amplitude = c.ic_amplitude;
    o.ensemble.seed = stream(seed, kStreamEnsemble);
    o.consts = c.bound;
    o.bound_eps0 = c.bound_eps0_list;
    o.seed = seed;
    const SweepResult r = sweep_eps0(c.eps0_list, o);
    if (r.kaplan_yorke_monotone && !r.partial) ++monotone;
    detail += "; seed " + std::to_string(seed) + ": KY {";
    for (std::size_t i = 0; i < r.rows.size(); ++i)
      detail += (i ? ", " : "") + (r.rows[i].failed ? std::string("failed") : fmt(r.rows[i].kaplan_yorke, 3));
    detail += "}, mu_1 {";
    for (std::size_t i = 0; i < r.rows.size(); ++i)
      detail += (i ? ", " : "") + (r.rows[i].exponents.empty() ? std::string("-") : fmt(r.rows[i].exponents[0], 3));
    detail += "}";
  }
  return {monotone >= 2, std::to_string(monotone) + "/3 seeds non-decreasing" + detail};
}

// Structure-function exponent of the gradient of the rough convolution.
Outcome holder_regularity() {
  const RunConfig c = scenario_preset("rough-noise");
  const ConvolutionProcess process(c.noise, c.params.convolution(), c.domain.length);
  const long samples = 10000;
  const NoisePath path =
      NoisePath::sample(c.noise, 0.0, samples * c.holder_dt, c.holder_dt, stream(1, kStreamHolder));
  ConvolutionState z = process.stationary(stream(1, kStreamConvolution));
  const double x = c.domain.position(static_cast<int>(std::lround(c.domain.last() / 4.0)));
  std::vector<double> series;
  series.reserve(samples);
  for (long m = 0; m < samples; ++m) {
    series.push_back(process.interior_gradient(z, x));
    process.step(z, path, m);
  }
  const double beta = holder_exponent(series, 1, 10);
  return {beta >= 0.15 && beta <= 0.35, "exponent " + fmt(beta) + " at x = " + fmt(x) + " (band [0.15, 0.35])"};
}

// Noiseless energy decay and self-convergence under dt halving.
Outcome deterministic_dissipation() {
  const RunConfig c = scenario_preset("deterministic");
  const PhysicalState x0 = smooth_random_state(c.domain, 0.0, c.ic_amplitude, c.ic_modes,
                                               stream(1, kStreamInitial));
  double worst_rise = 0.0;
  double first = 0.0, last = 0.0;
  {
    const Integrator integrator(c.params, c.domain, c.noise, c.dt);
    const NoisePath path = NoisePath::sample(c.noise, 0.0, 5.0, c.dt, stream(1, kStreamPath));
    ConvolutionState z = integrator.convolution().zero();
    SystemState s = integrator.transform(x0, z, 0);
    const long transient = 100;
    double previous = energy(x0, c.params, integrator.laplacian()).lyapunov_functional;
    first = previous;
    for (long m = 0; m < 5000; ++m) {
      integrator.step(s, z, path);
      const double e = energy(integrator.recover(s, z), c.params, integrator.laplacian()).lyapunov_functional;
      if (m >= transient) worst_rise = std::max(worst_rise, e - previous);
      previous = e;
    }
    last = previous;
  }

  std::vector<Field> finals;
  for (double dt : {4e-3, 2e-3, 1e-3}) {
    const Integrator integrator(c.params, c.domain, c.noise, dt);
    const long steps = std::lround(0.5 / dt);
    const NoisePath path = NoisePath::sample(c.noise, 0.0, steps * dt, dt, stream(1, kStreamPath));
    ConvolutionState z = integrator.convolution().zero();
    SystemState s = integrator.transform(x0, z, 0);
    solve_flow(integrator, path, 0, steps, s, z);
    finals.push_back(integrator.recover(s, z).phi);
  }
  const Integrator reference(c.params, c.domain, c.noise, c.dt);
  const double e1 = reference.metric().distance(finals[0], finals[1]);
  const double e2 = reference.metric().distance(finals[1], finals[2]);
  const double order = std::log2(e1 / e2);
  return {worst_rise <= 1e-8 && order >= 0.9,
          "largest per-step rise " + fmt(worst_rise) + " (limit 1e-8), energy " + fmt(first) + " -> " +
              fmt(last) + ", self-convergence order " + fmt(order) + " (limit 0.9)"};
}

struct Criterion {
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {"mass conservation", 30, mass_conservation},
      {"OU stationary variance", 10, ou_variance},
      {"cocycle identities", 30, cocycle},
      {"differentiability", 60, differentiability},
      {"linear spectrum", 60, linear_spectrum},
      {"pullback attraction", 120, pullback_attraction},
      {"bound scaling in eps0", 60, bound_scaling},
      {"directional impact of eps0", 600, directional_impact},
      {"Hoelder regularity", 30, holder_regularity},
      {"deterministic dissipation", 60, deterministic_dissipation},
  };

  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    const int k = std::atoi(argv[i]);
    if (k < 1 || k > static_cast<int>(criteria.size())) {
      std::fprintf(stderr, "usage: acceptance [1-10 ...]\n");
      return 1;
    }
    selected.push_back(k);
  }
  if (selected.empty())
    for (int k = 1; k <= static_cast<int>(criteria.size()); ++k) selected.push_back(k);

  bool all = true;
  for (int k : selected) {
    const Criterion& c = criteria[k - 1];
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = seconds <= c.budget_s;
    const bool pass = o.pass && in_time;
    all = all && pass;
    std::printf("criterion %d: %s: %s: %s [%.1f s of %.0f s%s]\n", k, pass ? "PASS" : "FAIL", c.name,
                o.detail.c_str(), seconds, c.budget_s, in_time ? "" : ", over budget");
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
