#include "noise.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace chs {
namespace {

constexpr long kBlockSteps = 4096;
constexpr char kPathMagic[8] = {'C', 'H', 'S', 'P', 'A', 'T', 'H', '1'};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

long floor_div(long a, long b) {
  long q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

long grid_index(double t, double dt, const char* what) {
  const double x = t / dt;
  const double r = std::round(x);
  if (std::abs(x - r) > 1e-9 * std::max(1.0, std::abs(x)))
    throw std::invalid_argument(std::string(what) + " is not on the path grid");
  return static_cast<long>(r);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes, 8);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char bytes[8];
  in.read(reinterpret_cast<char*>(bytes), 8);
  if (!in) throw std::runtime_error("truncated noise path stream");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}

void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }
double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> ids) {
  std::uint64_t h = splitmix64(master);
  for (std::uint64_t id : ids) h = splitmix64(h ^ splitmix64(id + 0x632be59bd9b4e019ULL));
  return h;
}

double CovarianceSpec::alpha(int k) const {
  if (k < 1 || k > modes) throw std::out_of_range("interior mode index out of range");
  return std::pow(static_cast<double>(k), -gamma);
}

void CovarianceSpec::validate() const {
  if (!(gamma > 1.0) || !std::isfinite(gamma))
    throw std::invalid_argument("covariance exponent gamma must exceed 1 (trace class), got " +
                                std::to_string(gamma));
  if (modes < 1) throw std::invalid_argument("need at least one interior noise mode");
  for (double a : boundary)
    if (!(a >= 0.0) || !std::isfinite(a))
      throw std::invalid_argument("boundary noise weights must be finite and non-negative");
}

NoisePath NoisePath::sample(const CovarianceSpec& spec, double t_min, double t_max, double dt,
                            std::uint64_t seed) {
  spec.validate();
  if (!std::isfinite(t_min) || !std::isfinite(t_max))
    throw std::invalid_argument("noise horizon must be finite");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("dt must be positive");
  if (t_min > 0.0 || t_max < 0.0) throw std::invalid_argument("noise horizon must contain t = 0");

  const long first = -static_cast<long>(std::ceil(-t_min / dt - 1e-9));
  const long end = static_cast<long>(std::ceil(t_max / dt - 1e-9));
  auto data = std::make_shared<Data>();
  data->dt = dt;
  data->modes = spec.modes;
  data->seed = seed;
  data->first = first;
  const int channels = spec.modes + 2;
  data->increments.resize(end - first, channels);

  const double sd = std::sqrt(dt);
  std::vector<double> block(kBlockSteps);
  for (int c = 0; c < channels; ++c) {
    for (long b = floor_div(first, kBlockSteps); b * kBlockSteps < end; ++b) {
      std::mt19937_64 engine(derive_seed(seed, {static_cast<std::uint64_t>(c),
                                                static_cast<std::uint64_t>(b)}));
      std::normal_distribution<double> normal(0.0, 1.0);
      for (double& x : block) x = normal(engine);
      const long lo = std::max(first, b * kBlockSteps);
      const long hi = std::min(end, (b + 1) * kBlockSteps);
      for (long m = lo; m < hi; ++m) data->increments(m - first, c) = sd * block[m - b * kBlockSteps];
    }
  }
  return NoisePath(std::move(data), 0);
}

std::span<const double> NoisePath::increments(long m) const {
  if (m < first_step() || m >= end_step())
    throw std::out_of_range("step " + std::to_string(m) + " outside the stored noise horizon");
  const long row = m + offset_ - data_->first;
  return {data_->increments.data() + row * data_->increments.cols(),
          static_cast<std::size_t>(data_->increments.cols())};
}

double NoisePath::value(long m, int channel) const {
  if (m < first_step() || m > end_step())
    throw std::out_of_range("time index outside the stored noise horizon");
  double w = 0.0;
  if (m >= 0) {
    for (long i = 0; i < m; ++i) w += increment(i, channel);
  } else {
    for (long i = m; i < 0; ++i) w -= increment(i, channel);
  }
  return w;
}

NoisePath NoisePath::shifted(long steps) const {
  if (steps < first_step() || steps > end_step())
    throw std::out_of_range("shift by " + std::to_string(steps) + " steps leaves the noise horizon");
  return NoisePath(data_, offset_ + steps);
}

NoisePath NoisePath::shifted_time(double t) const {
  if (!std::isfinite(t)) throw std::invalid_argument("shift time must be finite");
  return shifted(grid_index(t, dt(), "shift time"));
}

NoisePath NoisePath::coarsened(int factor) const {
  if (factor < 1) throw std::invalid_argument("coarsening factor must be positive");
  const long lo = -floor_div(-first_step(), factor);
  const long hi = floor_div(end_step(), factor);
  if (hi <= lo) throw std::invalid_argument("path too short to coarsen");
  auto data = std::make_shared<Data>();
  data->dt = dt() * factor;
  data->modes = modes();
  data->seed = seed();
  data->first = lo;
  data->increments.setZero(hi - lo, channels());
  for (long m = lo; m < hi; ++m) {
    for (long i = 0; i < factor; ++i) {
      const auto inc = increments(m * factor + i);
      for (int c = 0; c < channels(); ++c) data->increments(m - lo, c) += inc[c];
    }
  }
  return NoisePath(std::move(data), 0);
}

void NoisePath::write(std::ostream& out) const {
  out.write(kPathMagic, sizeof kPathMagic);
  put_f64(out, dt());
  put_f64(out, t_min());
  put_f64(out, t_max());
  put_u64(out, static_cast<std::uint64_t>(modes()));
  put_u64(out, seed());
  put_u64(out, static_cast<std::uint64_t>(first_step()));
  put_u64(out, static_cast<std::uint64_t>(end_step() - first_step()));
  for (long m = first_step(); m < end_step(); ++m)
    for (double x : increments(m)) put_f64(out, x);
  if (!out) throw std::runtime_error("failed writing noise path");
}

NoisePath NoisePath::read(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || !std::equal(magic, magic + 8, kPathMagic))
    throw std::runtime_error("not a noise path stream");
  auto data = std::make_shared<Data>();
  data->dt = get_f64(in);
  get_f64(in);
  get_f64(in);
  data->modes = static_cast<int>(get_u64(in));
  data->seed = get_u64(in);
  data->first = static_cast<long>(get_u64(in));
  const auto steps = static_cast<long>(get_u64(in));
  if (!(data->dt > 0.0) || data->modes < 1 || steps < 0)
    throw std::runtime_error("corrupt noise path header");
  data->increments.resize(steps, data->modes + 2);
  for (long r = 0; r < steps; ++r)
    for (int c = 0; c < data->modes + 2; ++c) data->increments(r, c) = get_f64(in);
  return NoisePath(std::move(data), 0);
}

ConvolutionProcess::ConvolutionProcess(const CovarianceSpec& spec, const ConvolutionParams& params,
                                       double length)
    : spec_(spec), params_(params), length_(length) {
  spec_.validate();
  if (!(params.eps >= 0.0)) throw std::invalid_argument("eps must be non-negative");
  if (!(params.eps0 > 0.0)) throw std::invalid_argument("eps0 must be positive");
  if (!(params.lambda >= 0.0)) throw std::invalid_argument("lambda must be non-negative");
  if (!(params.sigma1 >= 0.0) || !(params.sigma2 >= 0.0))
    throw std::invalid_argument("noise intensities must be non-negative");
  const int c = channels();
  rates_.resize(c);
  scales_.resize(c);
  for (int k = 1; k <= spec.modes; ++k) {
    const double lam = eigenvalue(k, length);
    rates_(k - 1) = r_eps(k, params.eps, length);
    scales_(k - 1) = params.sigma1 * std::sqrt(spec.alpha(k)) / (1.0 + params.eps * lam);
  }
  for (int i = 0; i < 2; ++i) {
    rates_(spec.modes + i) = params.eps0 * params.lambda;
    scales_(spec.modes + i) = params.eps0 * params.sigma2 * std::sqrt(spec.boundary[i]);
  }
}

double ConvolutionProcess::stationary_variance(int channel) const {
  const double r = rates_(channel);
  if (!(r > 0.0)) throw std::domain_error("stationary variance needs a positive rate");
  return scales_(channel) * scales_(channel) / (2.0 * r);
}

ConvolutionState ConvolutionProcess::zero() const {
  ConvolutionState z;
  z.z1 = Eigen::VectorXd::Zero(spec_.modes);
  return z;
}

ConvolutionState ConvolutionProcess::stationary(std::uint64_t seed) const {
  for (int c = 0; c < channels(); ++c)
    if (!(rates_(c) > 0.0))
      throw std::invalid_argument("stationary start needs positive relaxation rates (lambda > 0)");
  ConvolutionState z = zero();
  std::mt19937_64 engine(derive_seed(seed, {0x5747u}));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int k = 0; k < spec_.modes; ++k) z.z1(k) = std::sqrt(stationary_variance(k)) * normal(engine);
  for (int i = 0; i < 2; ++i)
    z.z2[i] = std::sqrt(stationary_variance(spec_.modes + i)) * normal(engine);
  return z;
}

void ConvolutionProcess::advance(ConvolutionState& z, std::span<const double> increments,
                                 double h) const {
  if (static_cast<int>(increments.size()) != channels())
    throw std::invalid_argument("increment count does not match the channel count");
  if (h < 0.0) throw std::invalid_argument("negative step length");
  if (h == 0.0) return;
  const double inv_sqrt_h = 1.0 / std::sqrt(h);
  auto transition = [&](int c, double value) {
    const double r = rates_(c);
    const double var = r > 0.0 ? -std::expm1(-2.0 * r * h) / (2.0 * r) : h;
    return std::exp(-r * h) * value + scales_(c) * std::sqrt(var) * increments[c] * inv_sqrt_h;
  };
  for (int k = 0; k < spec_.modes; ++k) z.z1(k) = transition(k, z.z1(k));
  for (int i = 0; i < 2; ++i) z.z2[i] = transition(spec_.modes + i, z.z2[i]);
}

void ConvolutionProcess::step(ConvolutionState& z, const NoisePath& path, long m) const {
  if (path.modes() != spec_.modes)
    throw std::invalid_argument("noise path mode count does not match the covariance");
  advance(z, path.increments(m), path.dt());
}

Field ConvolutionProcess::interior_field(const ConvolutionState& z, const SpectralBasis& basis) const {
  if (basis.modes() < spec_.modes)
    throw std::invalid_argument("spectral basis has fewer modes than the noise");
  Field f = basis.samples().middleCols(1, spec_.modes) * z.z1;
  const Eigen::VectorXd w = trapezoid_weights(basis.domain());
  f.array() -= w.dot(f) / basis.domain().length;
  return f;
}

double ConvolutionProcess::interior_gradient(const ConvolutionState& z, double x) const {
  const double c = std::sqrt(2.0 / length_);
  double g = 0.0;
  for (int k = 1; k <= spec_.modes; ++k) {
    const double wave = k * std::numbers::pi / length_;
    g -= z.z1(k - 1) * c * wave * std::sin(wave * x);
  }
  return g;
}

double ConvolutionProcess::l_eps_norm2(const ConvolutionState& z) const {
  double acc = 0.0;
  for (int k = 1; k <= spec_.modes; ++k)
    acc += (params_.eps + 1.0 / eigenvalue(k, length_)) * z.z1(k - 1) * z.z1(k - 1);
  return acc + boundary_norm2(z);
}

double ConvolutionProcess::interior_sobolev_norm(const ConvolutionState& z, double s) const {
  double acc = 0.0;
  for (int k = 1; k <= spec_.modes; ++k)
    acc += std::pow(eigenvalue(k, length_), s) * z.z1(k - 1) * z.z1(k - 1);
  return std::sqrt(acc);
}

double ConvolutionProcess::boundary_norm2(const ConvolutionState& z) const {
  return z.z2[0] * z.z2[0] + z.z2[1] * z.z2[1];
}

double holder_exponent(std::span<const double> series, int lag_min, int lag_max) {
  const long n = static_cast<long>(series.size());
  if (n < 1000) throw std::invalid_argument("Hoelder estimate needs at least 1000 samples");
  if (lag_min < 1 || lag_max < 10 * lag_min)
    throw std::invalid_argument("lags must span at least one decade");
  if (lag_max >= n / 2) throw std::invalid_argument("largest lag must stay below half the series");
  if (std::all_of(series.begin(), series.end(), [&](double x) { return x == series.front(); }))
    throw std::invalid_argument("structure function of a constant series is degenerate");

  std::vector<int> lags;
  const int points = 12;
  for (int i = 0; i < points; ++i) {
    const double t = static_cast<double>(i) / (points - 1);
    const int lag = static_cast<int>(std::lround(lag_min * std::pow(double(lag_max) / lag_min, t)));
    if (lags.empty() || lag != lags.back()) lags.push_back(lag);
  }
  std::vector<double> lx, ly;
  for (int lag : lags) {
    double s2 = 0.0;
    for (long t = 0; t + lag < n; ++t) {
      const double d = series[t + lag] - series[t];
      s2 += d * d;
    }
    s2 /= static_cast<double>(n - lag);
    if (!(s2 > 0.0)) throw std::invalid_argument("structure function vanishes at some lag");
    lx.push_back(std::log(static_cast<double>(lag)));
    ly.push_back(std::log(s2));
  }
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / lx.size();
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / ly.size();
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return std::min(1.0, 0.5 * sxy / sxx);
}

}  // namespace chs
