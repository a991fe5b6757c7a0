#include "lyapunov.hpp"

#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

namespace chs {

namespace {

// Projects every column onto trapezoid mean zero.
void remove_mean(Eigen::MatrixXd& vectors, const Integrator& integrator) {
  const Eigen::VectorXd& w = integrator.laplacian().weights();
  const double length = integrator.domain().length;
  for (Eigen::Index i = 0; i < vectors.cols(); ++i)
    vectors.col(i).array() -= w.dot(vectors.col(i)) / length;
}

}  // namespace

TangentBundle random_bundle(const Integrator& integrator, int directions, std::uint64_t seed,
                            long step) {
  const DomainSpec& domain = integrator.domain();
  if (directions < 1 || directions > domain.nodes() - 1)
    throw std::invalid_argument("bundle size must lie in 1..N+1");
  std::mt19937_64 engine(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  TangentBundle bundle;
  bundle.step = step;
  bundle.vectors.resize(domain.nodes(), directions);
  const Eigen::VectorXd& w = integrator.laplacian().weights();
  for (int i = 0; i < directions; ++i) {
    for (int j = 0; j < domain.nodes(); ++j) bundle.vectors(j, i) = normal(engine);
    bundle.vectors.col(i).array() -= w.dot(bundle.vectors.col(i)) / domain.length;
  }
  orthonormalize(bundle.vectors, integrator.metric());
  return bundle;
}

void tangent_step(TangentBundle& bundle, const SystemState& base, const ConvolutionState& z,
                  const Integrator& integrator) {
  if (bundle.step != base.step)
    throw std::invalid_argument("tangent bundle at step " + std::to_string(bundle.step) +
                                " is not synchronized with the base state at step " +
                                std::to_string(base.step));
  integrator.tangent_step(bundle.vectors, integrator.recover(base, z).phi);
  remove_mean(bundle.vectors, integrator);
  ++bundle.step;
}

Eigen::VectorXd orthonormalize(Eigen::MatrixXd& vectors, const LEpsMetric& metric) {
  const auto d = vectors.cols();
  Eigen::VectorXd diag(d);
  const Eigen::MatrixXd& g = metric.gram();
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      const double proj = vectors.col(j).dot(g * vectors.col(i));
      vectors.col(i) -= proj * vectors.col(j);
    }
    const double norm = std::sqrt(std::max(0.0, vectors.col(i).dot(g * vectors.col(i))));
    if (!(norm > 1e-300))
      throw std::runtime_error("tangent bundle lost rank at direction " + std::to_string(i + 1) +
                               "; use a smaller renormalization interval");
    vectors.col(i) /= norm;
    diag(i) = norm;
  }
  return diag;
}

double gram_deviation(const Eigen::MatrixXd& vectors, const LEpsMetric& metric) {
  const Eigen::MatrixXd gram = vectors.transpose() * metric.gram() * vectors;
  return (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
}

LyapunovResult benettin(const Integrator& integrator, const NoisePath& path, SystemState base,
                        ConvolutionState z, const BenettinOptions& options) {
  const int d = options.directions;
  if (d < 1 || d > 12) throw std::invalid_argument("Benettin supports 1..12 directions");
  if (options.renorm_every < 1) throw std::invalid_argument("renorm_every must be positive");
  if (options.blocks < 2) throw std::invalid_argument("need at least two averaging blocks");
  if (options.burn_in < 0.0) throw std::invalid_argument("burn-in must be non-negative");
  const double h = integrator.dt();
  const double interval = options.renorm_every * h;
  const long intervals = std::lround(options.duration / interval);
  if (intervals < 100)
    throw std::invalid_argument("Benettin needs at least 100 renormalization intervals, got " +
                                std::to_string(intervals));
  if (intervals < options.blocks)
    throw std::invalid_argument("fewer renormalizations than averaging blocks");
  const long burn_steps = std::lround(options.burn_in / h);
  const long total_steps = burn_steps + intervals * options.renorm_every;
  if (!path.covers(base.step, base.step + total_steps))
    throw std::out_of_range("noise path too short for the requested Benettin run");

  TangentBundle bundle = random_bundle(integrator, d, options.seed, base.step);
  for (long s = 0; s < burn_steps; ++s) {
    tangent_step(bundle, base, z, integrator);
    integrator.step(base, z, path);
    if ((s + 1) % options.renorm_every == 0) orthonormalize(bundle.vectors, integrator.metric());
  }
  if (burn_steps > 0) orthonormalize(bundle.vectors, integrator.metric());

  Eigen::MatrixXd logs(d, intervals);
  for (long k = 0; k < intervals; ++k) {
    for (int s = 0; s < options.renorm_every; ++s) {
      tangent_step(bundle, base, z, integrator);
      integrator.step(base, z, path);
    }
    logs.col(k) = orthonormalize(bundle.vectors, integrator.metric()).array().log();
  }

  const double total_time = intervals * interval;
  Eigen::VectorXd exponents = logs.rowwise().sum() / total_time;
  const long per_block = intervals / options.blocks;
  Eigen::MatrixXd block_means(d, options.blocks);
  for (int b = 0; b < options.blocks; ++b) {
    const long lo = b * per_block;
    const long hi = b + 1 == options.blocks ? intervals : lo + per_block;
    block_means.col(b) = logs.middleCols(lo, hi - lo).rowwise().sum() / ((hi - lo) * interval);
  }

  std::vector<int> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return exponents(a) > exponents(b); });
  LyapunovResult result;
  result.renorm_interval = interval;
  result.total_time = total_time;
  result.renormalizations = intervals;
  for (int i : order) {
    const Eigen::VectorXd row = block_means.row(i);
    const double mean = row.mean();
    const double var = (row.array() - mean).square().sum() / (options.blocks - 1);
    result.exponents.push_back(exponents(i));
    result.halfwidths.push_back(2.0 * std::sqrt(var / options.blocks));
  }
  return result;
}

double kaplan_yorke(std::span<const double> exponents) {
  if (exponents.empty() || exponents.front() < 0.0) return 0.0;
  double partial = 0.0;
  std::size_t j = 0;
  while (j < exponents.size() && partial + exponents[j] >= 0.0) partial += exponents[j++];
  if (j == exponents.size()) return static_cast<double>(j);
  return static_cast<double>(j) + partial / std::abs(exponents[j]);
}

TangentGenerator::TangentGenerator(const Integrator& integrator) : integrator_(integrator) {
  const DomainSpec& domain = integrator.domain();
  const ModelParams& params = integrator.params();
  const int n = domain.nodes();
  const int last = domain.last();
  const double dx = domain.spacing();
  const Eigen::VectorXd& w = integrator.laplacian().weights();

  stiffness_ = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < last; ++j) {
    stiffness_(j, j) += 1.0 / dx;
    stiffness_(j + 1, j + 1) += 1.0 / dx;
    stiffness_(j, j + 1) -= 1.0 / dx;
    stiffness_(j + 1, j) -= 1.0 / dx;
  }
  stiffness_(0, 0) += params.lambda;
  stiffness_(last, last) += params.lambda;

  Eigen::MatrixXd bordered = Eigen::MatrixXd::Zero(n + 1, n + 1);
  bordered.topLeftCorner(n, n) = w.asDiagonal() * integrator.operators().mass();
  bordered(0, 0) += 1.0 / params.eps0;
  bordered(last, last) += 1.0 / params.eps0;
  bordered.block(0, n, n, 1) = w;
  bordered.block(n, 0, 1, n) = w.transpose();
  lu_.compute(bordered);
}

Eigen::MatrixXd TangentGenerator::apply(const Eigen::MatrixXd& q, const Field& phi) const {
  const int n = integrator_.domain().nodes();
  if (q.rows() != n || phi.size() != n) throw std::invalid_argument("vectors do not match the grid");
  const Eigen::VectorXd& w = integrator_.laplacian().weights();
  const Eigen::VectorXd slope =
      phi.unaryExpr([&](double x) { return integrator_.params().f.derivative(x); });
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n + 1, q.cols());
  rhs.topRows(n) = -(stiffness_ * q) - w.cwiseProduct(slope).asDiagonal() * q;
  return lu_.solve(rhs).topRows(n);
}

double TangentGenerator::trace(const Eigen::MatrixXd& basis, const Field& phi) const {
  const double dev = gram_deviation(basis, integrator_.metric());
  if (dev > 1e-8)
    throw std::invalid_argument("trace basis is not L_eps-orthonormal (Gram deviation " +
                                std::to_string(dev) + ")");
  const Eigen::MatrixXd xi = apply(basis, phi);
  return (basis.transpose() * integrator_.metric().gram() * xi).trace();
}

double trace_bound(const Integrator& integrator, const NoisePath& path, SystemState base,
                   ConvolutionState z, Eigen::MatrixXd basis, double duration) {
  const long steps = std::lround(duration / integrator.dt());
  if (steps < 1) throw std::invalid_argument("trace averaging window shorter than one step");
  if (!path.covers(base.step, base.step + steps))
    throw std::out_of_range("noise path too short for the trace average");
  const TangentGenerator generator(integrator);
  double acc = 0.0;
  for (long s = 0; s < steps; ++s) {
    const Field phi = integrator.recover(base, z).phi;
    acc += generator.trace(basis, phi);
    integrator.tangent_step(basis, phi);
    remove_mean(basis, integrator);
    integrator.step(base, z, path);
    orthonormalize(basis, integrator.metric());
  }
  return acc / steps;
}

void BoundConstants::validate() const {
  if (!(c1 > 0.0)) throw std::invalid_argument("bound constant C1 must be positive");
  if (c2 < 0.0 || c3 < 0.0 || c < 0.0)
    throw std::invalid_argument("bound constants C2, C3, C must be non-negative");
  if (n < 1 || n > 3) throw std::invalid_argument("dimension parameter n must be 1, 2 or 3");
}

namespace {

double bound_rhs(const BoundConstants& consts, double eps0, double m_sup, bool static_boundary) {
  consts.validate();
  if (!(eps0 > 0.0)) throw std::invalid_argument("eps0 must be positive");
  if (!(m_sup >= 0.0)) throw std::invalid_argument("M must be non-negative");
  const double boundary = static_boundary ? 0.0 : consts.c2 * std::pow(eps0, consts.eps0_exponent());
  return boundary + consts.c3 + consts.c * m_sup;
}

}  // namespace

int dimension_bound(const BoundConstants& consts, double eps0, double m_sup, bool static_boundary) {
  const double rhs = bound_rhs(consts, eps0, m_sup, static_boundary);
  const double p = consts.d_exponent();
  auto lhs = [&](long d) { return consts.c1 * std::pow(static_cast<double>(d), p); };
  long d = std::max(0L, static_cast<long>(std::floor(std::pow(rhs / consts.c1, 1.0 / p))));
  while (lhs(d) <= rhs) ++d;
  while (d > 0 && lhs(d - 1) > rhs) --d;
  return static_cast<int>(d);
}

double critical_dimension(const BoundConstants& consts, double eps0, double m_sup,
                          bool static_boundary) {
  const double rhs = bound_rhs(consts, eps0, m_sup, static_boundary);
  return std::pow(rhs / consts.c1, 1.0 / consts.d_exponent());
}

double measure_m(const Integrator& integrator, double q, const EnsembleOptions& options) {
  if (options.members < 1) throw std::invalid_argument("ensemble needs at least one member");
  if (options.settle < 0.0) throw std::invalid_argument("settling time must be non-negative");
  const DomainSpec& domain = integrator.domain();
  const double h = integrator.dt();
  const long settle_steps = std::lround(options.settle / h);
  const long window = std::lround(1.0 / h);
  const Eigen::VectorXd& w = integrator.laplacian().weights();

  auto member = [&](std::size_t i) {
    const NoisePath path = NoisePath::sample(integrator.noise(), 0.0, (settle_steps + window) * h, h,
                                             derive_seed(options.seed, {i, 1}));
    ConvolutionState z = integrator.convolution().stationary(derive_seed(options.seed, {i, 2}));
    const PhysicalState ic =
        smooth_random_state(domain, integrator.params().beta, options.amplitude,
                            std::min(8, domain.interior_points), derive_seed(options.seed, {i, 3}));
    SystemState s = integrator.transform(ic, z, 0);
    solve_flow(integrator, path, 0, settle_steps, s, z);
    auto density = [&]() {
      const Field phi = integrator.recover(s, z).phi;
      double acc = 0.0;
      for (int j = 0; j < phi.size(); ++j)
        acc += w(j) * std::pow(std::abs(integrator.params().f.derivative(phi(j))), q);
      return acc;
    };
    double integral = 0.5 * density();
    for (long k = 1; k <= window; ++k) {
      integrator.step(s, z, path);
      integral += (k == window ? 0.5 : 1.0) * density();
    }
    return integral * h;
  };
  const auto values = parallel_map(static_cast<std::size_t>(options.members), member);
  return *std::max_element(values.begin(), values.end());
}

LogLogFit fit_loglog(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("need >= 2 paired points");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw std::invalid_argument("log-log fit needs positive data");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  const double n = static_cast<double>(lx.size());
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("log-log fit needs distinct x values");
  LogLogFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  return fit;
}

std::vector<BoundRow> bound_table(const BoundConstants& consts, std::span<const double> eps0_list,
                                  double m_sup) {
  std::vector<BoundRow> rows;
  for (double e : eps0_list) {
    BoundRow r;
    r.eps0 = e;
    r.d_bound = dimension_bound(consts, e, m_sup);
    r.d_bound_static = dimension_bound(consts, e, m_sup, true);
    r.d_critical = critical_dimension(consts, e, m_sup);
    rows.push_back(r);
  }
  return rows;
}

SweepResult sweep_eps0(std::span<const double> eps0_list, const SweepOptions& options) {
  if (eps0_list.size() < 4) throw std::invalid_argument("eps0 sweep needs at least 4 values");
  for (double e : eps0_list)
    if (!(e > 0.0) || !std::isfinite(e)) throw std::invalid_argument("eps0 values must be positive");
  const auto [lo, hi] = std::minmax_element(eps0_list.begin(), eps0_list.end());
  if (*hi < 10.0 * *lo) throw std::invalid_argument("eps0 values must span at least one decade");
  if (options.bound_eps0.size() < 2) throw std::invalid_argument("bound scaling needs >= 2 eps0 values");
  options.consts.validate();

  const double h = options.dt;
  const BenettinOptions& bopt = options.benettin;
  const double horizon = bopt.burn_in + bopt.duration + 2.0 * h * bopt.renorm_every;
  const NoisePath path =
      NoisePath::sample(options.noise, 0.0, horizon, h, derive_seed(options.seed, {0x5e, 1}));

  struct Outcome {
    SweepRow row;
    std::string error;
  };
  auto run = [&](std::size_t i) {
    Outcome out;
    out.row.eps0 = eps0_list[i];
    try {
      ModelParams params = options.params;
      params.eps0 = eps0_list[i];
      const Integrator integrator(params, options.domain, options.noise, h);
      EnsembleOptions ens = options.ensemble;
      ens.seed = derive_seed(options.seed, {0x5e, 2});
      out.row.m_sup = measure_m(integrator, options.consts.q(), ens);
      out.row.d_bound = dimension_bound(options.consts, params.eps0, out.row.m_sup);
      out.row.d_bound_static = dimension_bound(options.consts, params.eps0, out.row.m_sup, true);

      ConvolutionState z = integrator.convolution().stationary(derive_seed(options.seed, {0x5e, 3}));
      const PhysicalState ic = smooth_random_state(options.domain, params.beta, ens.amplitude,
                                                   std::min(8, options.domain.interior_points),
                                                   derive_seed(options.seed, {0x5e, 4}));
      BenettinOptions b = bopt;
      b.seed = derive_seed(options.seed, {0x5e, 5});
      const LyapunovResult lr = benettin(integrator, path, integrator.transform(ic, z, 0), z, b);
      out.row.exponents = lr.exponents;
      out.row.kaplan_yorke = kaplan_yorke(lr.exponents);
    } catch (const BlowupError& e) {
      out.row.failed = true;
      out.error = "eps0 = " + std::to_string(eps0_list[i]) + ": " + e.what();
    }
    return out;
  };
  const auto outcomes = parallel_map(eps0_list.size(), run);

  SweepResult result;
  for (const Outcome& o : outcomes) {
    result.rows.push_back(o.row);
    if (o.row.failed && !result.partial) {
      result.partial = true;
      result.failure = o.error;
    }
  }
  for (const SweepRow& r : result.rows)
    if (!r.failed) result.fixed_m = std::max(result.fixed_m, r.m_sup);

  result.bound_rows = bound_table(options.consts, options.bound_eps0, result.fixed_m);
  std::vector<double> xs, ds, dc;
  for (const BoundRow& r : result.bound_rows) {
    xs.push_back(r.eps0);
    ds.push_back(r.d_bound);
    dc.push_back(r.d_critical);
  }
  result.fit = fit_loglog(xs, ds);
  result.critical_fit = fit_loglog(xs, dc);
  result.static_constant = std::all_of(result.bound_rows.begin(), result.bound_rows.end(),
                                       [&](const BoundRow& r) {
                                         return r.d_bound_static == result.bound_rows.front().d_bound_static;
                                       });

  std::vector<std::pair<double, double>> ky;
  for (const SweepRow& r : result.rows)
    if (!r.failed) ky.emplace_back(r.eps0, r.kaplan_yorke);
  std::sort(ky.begin(), ky.end());
  result.kaplan_yorke_monotone = true;
  for (std::size_t i = 1; i < ky.size(); ++i)
    if (ky[i].second < ky[i - 1].second) result.kaplan_yorke_monotone = false;
  return result;
}

}  // namespace chs
