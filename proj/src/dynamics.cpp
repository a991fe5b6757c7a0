#include "dynamics.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

namespace chs {
namespace {

constexpr double kBlowupThreshold = 1e8;

int checked_noise_modes(const CovarianceSpec& noise, const DomainSpec& domain) {
  if (noise.modes > domain.interior_points)
    throw std::invalid_argument("noise modes K = " + std::to_string(noise.modes) +
                                " exceed the interior grid size N = " +
                                std::to_string(domain.interior_points));
  return noise.modes;
}

}  // namespace

Nonlinearity Nonlinearity::polynomial(std::vector<double> coefficients) {
  const auto d = coefficients.size();
  if (d < 3 || d % 2 == 0)
    throw std::invalid_argument("nonlinearity needs an odd degree 2p-1 >= 3, got degree " +
                                std::to_string(d));
  for (double a : coefficients)
    if (!std::isfinite(a)) throw std::invalid_argument("nonlinearity coefficients must be finite");
  if (!(coefficients.back() > 0.0))
    throw std::invalid_argument("leading coefficient of the nonlinearity must be positive");
  return Nonlinearity(std::move(coefficients));
}

Nonlinearity Nonlinearity::linear(double slope) {
  if (!std::isfinite(slope)) throw std::invalid_argument("slope must be finite");
  return Nonlinearity({slope});
}

double Nonlinearity::value(double u) const {
  double acc = 0.0;
  for (auto it = coefficients_.rbegin(); it != coefficients_.rend(); ++it) acc = acc * u + *it;
  return acc * u;
}

double Nonlinearity::derivative(double u) const {
  double acc = 0.0;
  for (int k = degree(); k >= 1; --k) acc = acc * u + k * coefficients_[k - 1];
  return acc;
}

double Nonlinearity::potential(double u) const {
  double acc = 0.0;
  for (int k = degree(); k >= 1; --k) acc = acc * u + coefficients_[k - 1] / (k + 1);
  return acc * u * u;
}

void ModelParams::validate() const {
  auto finite = [](double x) { return std::isfinite(x); };
  if (!finite(eps) || eps < 0.0) throw std::invalid_argument("eps must be finite and >= 0");
  if (!finite(eps0) || !(eps0 > 0.0)) throw std::invalid_argument("eps0 must be > 0");
  if (!finite(lambda) || !(lambda > 0.0)) throw std::invalid_argument("lambda must be > 0");
  if (!finite(sigma1) || sigma1 < 0.0) throw std::invalid_argument("sigma1 must be >= 0");
  if (!finite(sigma2) || sigma2 < 0.0) throw std::invalid_argument("sigma2 must be >= 0");
  if (!finite(beta)) throw std::invalid_argument("beta must be finite");
  if (!f.is_linear() && !(f.coefficients().back() > 0.0))
    throw std::invalid_argument("leading coefficient of the nonlinearity must be positive");
}

LEpsMetric::LEpsMetric(const NeumannLaplacian& laplacian, double eps) {
  const Eigen::VectorXd& w = laplacian.weights();
  const Eigen::MatrixXd weighted = w.asDiagonal() * laplacian.inverse_matrix();
  gram_ = 0.5 * (weighted + weighted.transpose());
  gram_.diagonal() += eps * w;
  const auto last = gram_.rows() - 1;
  gram_(0, 0) += 1.0;
  gram_(last, last) += 1.0;
}

double LEpsMetric::distance(const Field& a, const Field& b) const {
  return std::sqrt(std::max(0.0, norm2(a - b)));
}

std::shared_ptr<const DiscreteOperators> DiscreteOperators::assemble(const ModelParams& params,
                                                                     const DomainSpec& domain,
                                                                     double dt) {
  return std::make_shared<const DiscreteOperators>(params, domain, dt,
                                                   std::make_shared<const NeumannLaplacian>(domain));
}

DiscreteOperators::DiscreteOperators(const ModelParams& params, const DomainSpec& domain, double dt,
                                     std::shared_ptr<const NeumannLaplacian> laplacian)
    : domain_(domain), dt_(dt), laplacian_(std::move(laplacian)) {
  params.validate();
  domain.validate();
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("dt must be positive");

  const int n = domain.nodes();
  const int N = domain.interior_points;
  const int last = domain.last();
  const int size = N + 3;
  const double dx = domain.spacing();
  const double inv_dx2 = 1.0 / (dx * dx);
  const Eigen::VectorXd& w = laplacian_->weights();

  mass_ = laplacian_->inverse_matrix();
  mass_.diagonal().array() += params.eps;

  // Coefficients of the new full field u' per equation, plus coefficients
  // acting directly on (v_0, v_M, c).
  Eigen::MatrixXd on_field = Eigen::MatrixXd::Zero(size, n);
  Eigen::MatrixXd direct = Eigen::MatrixXd::Zero(size, size);
  for (int j = 1; j <= N; ++j) {
    const int r = j - 1;
    on_field.row(r) = mass_.row(j) / dt;
    on_field(r, j - 1) -= inv_dx2;
    on_field(r, j) += 2.0 * inv_dx2;
    on_field(r, j + 1) -= inv_dx2;
    direct(r, N + 2) = 1.0;
  }
  const double boundary_rate = 1.0 / (params.eps0 * dt) + params.lambda;
  for (int side = 0; side < 2; ++side) {
    const int r = N + side;
    const int node = side == 0 ? 0 : last;
    const int inner = side == 0 ? 1 : last - 1;
    on_field.row(r) = 0.5 * dx * mass_.row(node) / dt;
    on_field(r, node) += 1.0 / dx;
    on_field(r, inner) -= 1.0 / dx;
    direct(r, N + side) = boundary_rate;
    direct(r, N + 2) = 0.5 * dx;
  }
  on_field.row(N + 2) = w.transpose();

  system_ = direct;
  system_.leftCols(N) += on_field.middleCols(1, N);
  system_.col(N) += on_field.col(0);
  system_.col(N + 1) += on_field.col(last);
  offset_columns_[0] = on_field.col(0);
  offset_columns_[1] = on_field.col(last);

  Eigen::BDCSVD<Eigen::MatrixXd> svd(system_);
  const auto& s = svd.singularValues();
  condition_ = s(0) / s(s.size() - 1);
  if (!std::isfinite(condition_) || condition_ > 1e15) {
    std::ostringstream msg;
    msg << "implicit step matrix is numerically singular (condition " << condition_
        << ") for N = " << N << ", dt = " << dt << ", eps = " << params.eps
        << ", eps0 = " << params.eps0;
    throw ConfigError(msg.str());
  }
  lu_.compute(system_);
}

EnergyReport energy(const PhysicalState& state, const ModelParams& params,
                    const NeumannLaplacian& laplacian) {
  const Field& phi = state.phi;
  const DomainSpec& domain = laplacian.domain();
  if (phi.size() != domain.nodes()) throw std::invalid_argument("field length does not match the grid");
  const Eigen::VectorXd& w = laplacian.weights();
  const double dx = domain.spacing();
  const double psi2 = state.psi[0] * state.psi[0] + state.psi[1] * state.psi[1];

  const Eigen::VectorXd diffs = phi.tail(phi.size() - 1) - phi.head(phi.size() - 1);
  const double gradient2 = diffs.squaredNorm() / dx;
  const double l2 = w.dot(phi.cwiseAbs2());

  double potential = 0.0;
  for (int j = 0; j < phi.size(); ++j) potential += w(j) * params.f.potential(phi(j));

  EnergyReport e;
  e.l_eps_norm2 = params.eps * l2 + w.dot(phi.cwiseProduct(laplacian.apply_inverse(phi))) + psi2;
  e.v_norm2 = gradient2 + l2 + psi2;
  e.potential_offset = params.f.potential(0.0) * domain.length;
  e.free_energy = 0.5 * gradient2 + potential - e.potential_offset;
  e.lyapunov_functional = e.free_energy + 0.5 * params.lambda * psi2;
  return e;
}

std::array<double, 2> normal_derivative(const Field& u, const DomainSpec& domain) {
  if (u.size() != domain.nodes()) throw std::invalid_argument("field length does not match the grid");
  const int m = domain.last();
  const double dx = domain.spacing();
  return {-(-3.0 * u(0) + 4.0 * u(1) - u(2)) / (2.0 * dx),
          (3.0 * u(m) - 4.0 * u(m - 1) + u(m - 2)) / (2.0 * dx)};
}

PhysicalState smooth_random_state(const DomainSpec& domain, double beta, double amplitude,
                                  int modes, std::uint64_t seed) {
  domain.validate();
  if (modes < 1 || modes > domain.interior_points)
    throw std::invalid_argument("initial condition mode count must lie in 1..N");
  std::mt19937_64 engine(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  PhysicalState s;
  s.phi = Field::Zero(domain.nodes());
  for (int k = 1; k <= modes; ++k) {
    const double a = amplitude / k * normal(engine);
    const double wave = k * std::numbers::pi / domain.length;
    for (int j = 0; j < domain.nodes(); ++j) s.phi(j) += a * std::cos(wave * domain.position(j));
  }
  s.phi.array() += beta - mean(s.phi, domain);
  s.psi = {s.phi(0), s.phi(domain.last())};
  return s;
}

Integrator::Integrator(const ModelParams& params, const DomainSpec& domain,
                       const CovarianceSpec& noise, double dt)
    : params_(params),
      domain_(domain),
      noise_(noise),
      ops_(DiscreteOperators::assemble(params, domain, dt)),
      convolution_(noise, params.convolution(), domain.length),
      basis_(domain, checked_noise_modes(noise, domain)),
      metric_(ops_->laplacian(), params.eps) {}

Field Integrator::noise_field(const ConvolutionState& z) const {
  return convolution_.interior_field(z, basis_);
}

SystemState Integrator::transform(const PhysicalState& physical, const ConvolutionState& z,
                                  long step) const {
  const int last = domain_.last();
  if (physical.phi.size() != domain_.nodes())
    throw std::invalid_argument("field length does not match the grid");
  const double tol = 1e-12 * (1.0 + physical.phi.cwiseAbs().maxCoeff());
  if (std::abs(physical.psi[0] - physical.phi(0)) > tol ||
      std::abs(physical.psi[1] - physical.phi(last)) > tol)
    throw std::invalid_argument("boundary values psi must equal the trace of phi");
  const Field z1 = noise_field(z);
  SystemState s;
  s.u = physical.phi - z1;
  s.v = {physical.psi[0] - z.z2[0], physical.psi[1] - z.z2[1]};
  s.u(0) = s.v[0] + (z.z2[0] - z1(0));
  s.u(last) = s.v[1] + (z.z2[1] - z1(last));
  s.step = step;
  s.t = step * dt();
  return s;
}

PhysicalState Integrator::recover(const SystemState& state, const ConvolutionState& z) const {
  PhysicalState p;
  p.phi = state.u + noise_field(z);
  p.psi = {state.v[0] + z.z2[0], state.v[1] + z.z2[1]};
  return p;
}

double Integrator::coupling_residual(const SystemState& state, const ConvolutionState& z) const {
  const int last = domain_.last();
  const Field z1 = noise_field(z);
  return std::max(std::abs(state.u(0) - (state.v[0] + (z.z2[0] - z1(0)))),
                  std::abs(state.u(last) - (state.v[1] + (z.z2[1] - z1(last)))));
}

void Integrator::check_path(const NoisePath& path) const {
  if (path.modes() != noise_.modes)
    throw std::invalid_argument("noise path mode count does not match the integrator");
  if (std::abs(path.dt() - dt()) > 1e-14 * dt())
    throw std::invalid_argument("noise path dt does not match the integrator dt");
}

Eigen::VectorXd Integrator::explicit_rhs(const Field& u, const std::array<double, 2>& v,
                                         const Field& forcing) const {
  const int N = domain_.interior_points;
  const int last = domain_.last();
  const double h = dt();
  const double half_dx = 0.5 * domain_.spacing();
  const Field su = ops_->mass() * u;
  Eigen::VectorXd rhs(N + 3);
  rhs.head(N) = su.segment(1, N) / h - forcing.segment(1, N);
  rhs(N) = v[0] / (params_.eps0 * h) + half_dx * (su(0) / h - forcing(0));
  rhs(N + 1) = v[1] / (params_.eps0 * h) + half_dx * (su(last) / h - forcing(last));
  rhs(N + 2) = laplacian().weights().dot(u);
  return rhs;
}

void Integrator::step(SystemState& state, ConvolutionState& z, const NoisePath& path) const {
  check_path(path);
  const int N = domain_.interior_points;
  const int last = domain_.last();
  if (state.u.size() != domain_.nodes()) throw std::invalid_argument("state has the wrong length");
  if (coupling_residual(state, z) > 1e-12 * (1.0 + state.u.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("boundary coupling violated on input to step");

  const Field phi = state.u + noise_field(z);
  const Field forcing = phi.unaryExpr([&](double x) { return params_.f.value(x); });
  Eigen::VectorXd rhs = explicit_rhs(state.u, state.v, forcing);

  convolution_.step(z, path, state.step);
  const Field z1 = noise_field(z);
  const double b0 = z.z2[0] - z1(0);
  const double b1 = z.z2[1] - z1(last);
  rhs -= b0 * ops_->offset_column(0) + b1 * ops_->offset_column(1);

  const Eigen::VectorXd y = ops_->solve(rhs);
  state.u.segment(1, N) = y.head(N);
  state.v = {y(N), y(N + 1)};
  state.u(0) = state.v[0] + b0;
  state.u(last) = state.v[1] + b1;
  ++state.step;
  state.t = state.step * dt();

  const double peak = state.u.cwiseAbs().maxCoeff();
  if (!std::isfinite(peak) || peak > kBlowupThreshold ||
      std::abs(state.v[0]) > kBlowupThreshold || std::abs(state.v[1]) > kBlowupThreshold) {
    std::ostringstream msg;
    msg << "state exceeded " << kBlowupThreshold << " at step " << state.step << " (t = " << state.t
        << "); the nonlinear term is explicit, so dt * max|f'(phi)| must stay moderate: try a "
           "smaller dt (currently "
        << dt() << ")";
    throw BlowupError(msg.str(), state.step);
  }
}

void Integrator::tangent_step(Eigen::MatrixXd& tangents, const Field& phi) const {
  const int n = domain_.nodes();
  const int N = domain_.interior_points;
  const int last = domain_.last();
  if (tangents.rows() != n || phi.size() != n)
    throw std::invalid_argument("tangent vectors do not match the grid");
  const double h = dt();
  const double half_dx = 0.5 * domain_.spacing();
  const Eigen::VectorXd slope = phi.unaryExpr([&](double x) { return params_.f.derivative(x); });
  const Eigen::MatrixXd forcing = slope.asDiagonal() * tangents;
  const Eigen::MatrixXd st = ops_->mass() * tangents;

  Eigen::MatrixXd rhs(N + 3, tangents.cols());
  rhs.topRows(N) = st.middleRows(1, N) / h - forcing.middleRows(1, N);
  rhs.row(N) = tangents.row(0) / (params_.eps0 * h) + half_dx * (st.row(0) / h - forcing.row(0));
  rhs.row(N + 1) =
      tangents.row(last) / (params_.eps0 * h) + half_dx * (st.row(last) / h - forcing.row(last));
  rhs.row(N + 2) = laplacian().weights().transpose() * tangents;

  const Eigen::MatrixXd y = ops_->solve(rhs);
  tangents.middleRows(1, N) = y.topRows(N);
  tangents.row(0) = y.row(N);
  tangents.row(last) = y.row(N + 1);
}

void solve_flow(const Integrator& integrator, const NoisePath& path, long from, long to,
                SystemState& state, ConvolutionState& z) {
  if (to < from) throw std::invalid_argument("flow end time precedes start time");
  if (state.step != from) throw std::invalid_argument("state is not at the flow start time");
  if (!path.covers(from, to))
    throw std::out_of_range("flow interval [" + std::to_string(from) + ", " + std::to_string(to) +
                            ") steps is outside the noise horizon");
  while (state.step < to) integrator.step(state, z, path);
}

}  // namespace chs
