#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace chs {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string format_list(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ", ";
    out += format_double(xs[i]);
  }
  return out;
}

double parse_double(std::string_view key, std::string_view v, int line) {
  double x = 0.0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || ptr != end || !std::isfinite(x))
    throw ConfigError(std::string(key) + " expects a finite real number, got '" + std::string(v) + "'",
                      line);
  return x;
}

long parse_long(std::string_view key, std::string_view v, int line) {
  long x = 0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || ptr != end)
    throw ConfigError(std::string(key) + " expects an integer, got '" + std::string(v) + "'", line);
  return x;
}

int parse_int(std::string_view key, std::string_view v, int line) {
  const long x = parse_long(key, v, line);
  if (x < -2147483647L || x > 2147483647L)
    throw ConfigError(std::string(key) + " is out of integer range", line);
  return static_cast<int>(x);
}

std::uint64_t parse_u64(std::string_view key, std::string_view v, int line) {
  std::uint64_t x = 0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || ptr != end)
    throw ConfigError(std::string(key) + " expects a non-negative 64-bit integer, got '" +
                          std::string(v) + "'",
                      line);
  return x;
}

std::vector<double> parse_list(std::string_view key, std::string_view v, int line) {
  std::vector<double> xs;
  if (trim(v).empty()) return xs;
  std::size_t start = 0;
  while (true) {
    const auto comma = v.find(',', start);
    xs.push_back(parse_double(key, trim(v.substr(start, comma - start)), line));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return xs;
}

struct Key {
  const char* name;
  std::function<void(RunConfig&, std::string_view, int)> set;
  std::function<std::string(const RunConfig&)> get;
};

void require(bool ok, const std::string& what, int line) {
  if (!ok) throw ConfigError(what, line);
}

const std::vector<Key>& keys() {
  using std::string;
  static const std::vector<Key> table = {
      {"scenario", [](RunConfig&, std::string_view, int) {},
       [](const RunConfig& c) { return c.scenario; }},
      {"eps",
       [](RunConfig& c, std::string_view v, int l) {
         c.params.eps = parse_double("eps", v, l);
         require(c.params.eps >= 0.0, "eps must satisfy eps >= 0", l);
       },
       [](const RunConfig& c) { return format_double(c.params.eps); }},
      {"eps0",
       [](RunConfig& c, std::string_view v, int l) {
         c.params.eps0 = parse_double("eps0", v, l);
         require(c.params.eps0 > 0.0, "eps0 must satisfy eps0 > 0", l);
       },
       [](const RunConfig& c) { return format_double(c.params.eps0); }},
      {"lambda",
       [](RunConfig& c, std::string_view v, int l) {
         c.params.lambda = parse_double("lambda", v, l);
         require(c.params.lambda > 0.0, "lambda must satisfy lambda > 0", l);
       },
       [](const RunConfig& c) { return format_double(c.params.lambda); }},
      {"sigma1",
       [](RunConfig& c, std::string_view v, int l) {
         c.params.sigma1 = parse_double("sigma1", v, l);
         require(c.params.sigma1 >= 0.0, "sigma1 must satisfy sigma1 >= 0", l);
       },
       [](const RunConfig& c) { return format_double(c.params.sigma1); }},
      {"sigma2",
       [](RunConfig& c, std::string_view v, int l) {
         c.params.sigma2 = parse_double("sigma2", v, l);
         require(c.params.sigma2 >= 0.0, "sigma2 must satisfy sigma2 >= 0", l);
       },
       [](const RunConfig& c) { return format_double(c.params.sigma2); }},
      {"beta", [](RunConfig& c, std::string_view v, int l) { c.params.beta = parse_double("beta", v, l); },
       [](const RunConfig& c) { return format_double(c.params.beta); }},
      {"f_coeffs",
       [](RunConfig& c, std::string_view v, int l) {
         try {
           c.params.f = Nonlinearity::polynomial(parse_list("f_coeffs", v, l));
         } catch (const std::invalid_argument& e) {
           throw ConfigError(string("f_coeffs: ") + e.what(), l);
         }
       },
       [](const RunConfig& c) { return format_list(c.params.f.coefficients()); }},
      {"N",
       [](RunConfig& c, std::string_view v, int l) {
         c.domain.interior_points = parse_int("N", v, l);
         require(c.domain.interior_points >= 8, "N must satisfy N >= 8", l);
         require(c.domain.interior_points <= 4096, "N must not exceed 4096", l);
       },
       [](const RunConfig& c) { return std::to_string(c.domain.interior_points); }},
      {"K",
       [](RunConfig& c, std::string_view v, int l) {
         c.noise.modes = parse_int("K", v, l);
         require(c.noise.modes >= 1, "K must satisfy K >= 1", l);
       },
       [](const RunConfig& c) { return std::to_string(c.noise.modes); }},
      {"gamma",
       [](RunConfig& c, std::string_view v, int l) {
         c.noise.gamma = parse_double("gamma", v, l);
         require(c.noise.gamma > 1.0, "gamma must satisfy gamma > 1 (trace-class covariance)", l);
       },
       [](const RunConfig& c) { return format_double(c.noise.gamma); }},
      {"alpha2",
       [](RunConfig& c, std::string_view v, int l) {
         const auto xs = parse_list("alpha2", v, l);
         require(xs.size() == 2, "alpha2 expects two boundary weights", l);
         require(xs[0] >= 0.0 && xs[1] >= 0.0, "alpha2 weights must be >= 0", l);
         c.noise.boundary = {xs[0], xs[1]};
       },
       [](const RunConfig& c) { return format_list({c.noise.boundary[0], c.noise.boundary[1]}); }},
      {"dt",
       [](RunConfig& c, std::string_view v, int l) {
         c.dt = parse_double("dt", v, l);
         require(c.dt > 0.0, "dt must satisfy dt > 0", l);
       },
       [](const RunConfig& c) { return format_double(c.dt); }},
      {"T",
       [](RunConfig& c, std::string_view v, int l) {
         c.duration = parse_double("T", v, l);
         require(c.duration >= 0.0, "T must satisfy T >= 0", l);
       },
       [](const RunConfig& c) { return format_double(c.duration); }},
      {"output_every",
       [](RunConfig& c, std::string_view v, int l) {
         c.output_every = parse_int("output_every", v, l);
         require(c.output_every >= 1, "output_every must be >= 1", l);
       },
       [](const RunConfig& c) { return std::to_string(c.output_every); }},
      {"seed", [](RunConfig& c, std::string_view v, int l) { c.seed = parse_u64("seed", v, l); },
       [](const RunConfig& c) { return std::to_string(c.seed); }},
      {"out",
       [](RunConfig& c, std::string_view v, int l) {
         require(!v.empty(), "out must name a directory", l);
         c.out_dir = std::string(v);
       },
       [](const RunConfig& c) { return c.out_dir; }},
      {"ic_count",
       [](RunConfig& c, std::string_view v, int l) {
         c.ic_count = parse_int("ic_count", v, l);
         require(c.ic_count >= 2, "ic_count must be >= 2", l);
       },
       [](const RunConfig& c) { return std::to_string(c.ic_count); }},
      {"ic_amplitude",
       [](RunConfig& c, std::string_view v, int l) {
         c.ic_amplitude = parse_double("ic_amplitude", v, l);
         require(c.ic_amplitude >= 0.0, "ic_amplitude must be >= 0", l);
       },
       [](const RunConfig& c) { return format_double(c.ic_amplitude); }},
      {"ic_modes",
       [](RunConfig& c, std::string_view v, int l) {
         c.ic_modes = parse_int("ic_modes", v, l);
         require(c.ic_modes >= 1, "ic_modes must be >= 1", l);
       },
       [](const RunConfig& c) { return std::to_string(c.ic_modes); }},
      {"pullback_times",
       [](RunConfig& c, std::string_view v, int l) {
         c.pullback_times = parse_list("pullback_times", v, l);
         require(!c.pullback_times.empty(), "pullback_times must not be empty", l);
         for (std::size_t i = 0; i < c.pullback_times.size(); ++i) {
           require(c.pullback_times[i] >= 0.0, "pullback_times must be >= 0", l);
           require(i == 0 || c.pullback_times[i] > c.pullback_times[i - 1],
                   "pullback_times must be strictly increasing", l);
         }
       },
       [](const RunConfig& c) { return format_list(c.pullback_times); }},
      {"absorb_C",
       [](RunConfig& c, std::string_view v, int l) {
         c.absorb_constant = parse_double("absorb_C", v, l);
         require(c.absorb_constant > 0.0, "absorb_C must be > 0", l);
       },
       [](const RunConfig& c) { return format_double(c.absorb_constant); }},
      {"lyap_dirs",
       [](RunConfig& c, std::string_view v, int l) {
         c.lyap_directions = parse_int("lyap_dirs", v, l);
         require(c.lyap_directions >= 1 && c.lyap_directions <= 12, "lyap_dirs must lie in 1..12", l);
       },
       [](const RunConfig& c) { return std::to_string(c.lyap_directions); }},
      {"renorm_every",
       [](RunConfig& c, std::string_view v, int l) {
         c.renorm_every = parse_int("renorm_every", v, l);
         require(c.renorm_every >= 1, "renorm_every must be >= 1", l);
       },
       [](const RunConfig& c) { return std::to_string(c.renorm_every); }},
      {"burn_in",
       [](RunConfig& c, std::string_view v, int l) {
         c.burn_in = parse_double("burn_in", v, l);
         require(c.burn_in >= 0.0, "burn_in must be >= 0", l);
       },
       [](const RunConfig& c) { return format_double(c.burn_in); }},
      {"eps0_list",
       [](RunConfig& c, std::string_view v, int l) {
         c.eps0_list = parse_list("eps0_list", v, l);
         for (double e : c.eps0_list) require(e > 0.0, "eps0_list values must be > 0", l);
       },
       [](const RunConfig& c) { return format_list(c.eps0_list); }},
      {"bound_eps0_list",
       [](RunConfig& c, std::string_view v, int l) {
         c.bound_eps0_list = parse_list("bound_eps0_list", v, l);
         require(c.bound_eps0_list.size() >= 2, "bound_eps0_list needs at least two values", l);
         for (double e : c.bound_eps0_list) require(e > 0.0, "bound_eps0_list values must be > 0", l);
       },
       [](const RunConfig& c) { return format_list(c.bound_eps0_list); }},
      {"ensemble",
       [](RunConfig& c, std::string_view v, int l) {
         c.ensemble = parse_int("ensemble", v, l);
         require(c.ensemble >= 1, "ensemble must be >= 1", l);
       },
       [](const RunConfig& c) { return std::to_string(c.ensemble); }},
      {"settle",
       [](RunConfig& c, std::string_view v, int l) {
         c.settle = parse_double("settle", v, l);
         require(c.settle >= 0.0, "settle must be >= 0", l);
       },
       [](const RunConfig& c) { return format_double(c.settle); }},
      {"bound_C1",
       [](RunConfig& c, std::string_view v, int l) {
         c.bound.c1 = parse_double("bound_C1", v, l);
         require(c.bound.c1 > 0.0, "bound_C1 must be > 0", l);
       },
       [](const RunConfig& c) { return format_double(c.bound.c1); }},
      {"bound_C2",
       [](RunConfig& c, std::string_view v, int l) {
         c.bound.c2 = parse_double("bound_C2", v, l);
         require(c.bound.c2 >= 0.0, "bound_C2 must be >= 0", l);
       },
       [](const RunConfig& c) { return format_double(c.bound.c2); }},
      {"bound_C3",
       [](RunConfig& c, std::string_view v, int l) {
         c.bound.c3 = parse_double("bound_C3", v, l);
         require(c.bound.c3 >= 0.0, "bound_C3 must be >= 0", l);
       },
       [](const RunConfig& c) { return format_double(c.bound.c3); }},
      {"bound_C",
       [](RunConfig& c, std::string_view v, int l) {
         c.bound.c = parse_double("bound_C", v, l);
         require(c.bound.c >= 0.0, "bound_C must be >= 0", l);
       },
       [](const RunConfig& c) { return format_double(c.bound.c); }},
      {"bound_n",
       [](RunConfig& c, std::string_view v, int l) {
         c.bound.n = parse_int("bound_n", v, l);
         require(c.bound.n >= 1 && c.bound.n <= 3, "bound_n must be 1, 2 or 3", l);
       },
       [](const RunConfig& c) { return std::to_string(c.bound.n); }},
      {"noise_steps",
       [](RunConfig& c, std::string_view v, int l) {
         c.noise_steps = parse_long("noise_steps", v, l);
         require(c.noise_steps >= 1, "noise_steps must be >= 1", l);
       },
       [](const RunConfig& c) { return std::to_string(c.noise_steps); }},
      {"noise_dt",
       [](RunConfig& c, std::string_view v, int l) {
         c.noise_dt = parse_double("noise_dt", v, l);
         require(c.noise_dt > 0.0, "noise_dt must be > 0", l);
       },
       [](const RunConfig& c) { return format_double(c.noise_dt); }},
      {"holder_samples",
       [](RunConfig& c, std::string_view v, int l) {
         c.holder_samples = parse_int("holder_samples", v, l);
         require(c.holder_samples >= 1000, "holder_samples must be >= 1000", l);
       },
       [](const RunConfig& c) { return std::to_string(c.holder_samples); }},
      {"holder_dt",
       [](RunConfig& c, std::string_view v, int l) {
         c.holder_dt = parse_double("holder_dt", v, l);
         require(c.holder_dt > 0.0, "holder_dt must be > 0", l);
       },
       [](const RunConfig& c) { return format_double(c.holder_dt); }},
  };
  return table;
}

const Key* find_key(std::string_view name) {
  for (const Key& k : keys())
    if (name == k.name) return &k;
  return nullptr;
}

int line_of(const std::map<std::string, int>& lines, const std::string& key) {
  const auto it = lines.find(key);
  return it == lines.end() ? 0 : it->second;
}

void validate_with_lines(const RunConfig& c, const std::map<std::string, int>& lines) {
  auto fail = [&](const std::string& key, const std::string& what) {
    throw ConfigError(what, line_of(lines, key));
  };
  try {
    c.params.validate();
  } catch (const std::invalid_argument& e) {
    fail("f_coeffs", e.what());
  }
  if (c.domain.interior_points < 8) fail("N", "N must satisfy N >= 8");
  if (c.noise.modes > c.domain.interior_points)
    fail(lines.count("K") ? "K" : "N", "K must not exceed N (noise modes must be resolved on the grid)");
  if (c.ic_modes > c.domain.interior_points) fail("ic_modes", "ic_modes must not exceed N");
  if (!(c.noise.gamma > 1.0)) fail("gamma", "gamma must satisfy gamma > 1 (trace-class covariance)");
  if (c.eps0_list.size() < 4) fail("eps0_list", "eps0_list needs at least 4 values");
  const auto [lo, hi] = std::minmax_element(c.eps0_list.begin(), c.eps0_list.end());
  if (*hi < 10.0 * *lo) fail("eps0_list", "eps0_list must span at least one decade");
  const double steps = c.duration / c.dt;
  if (steps > 1e9) fail("T", "T/dt exceeds 1e9 steps");
  if (c.out_dir.find_first_of("#\n") != std::string::npos)
    fail("out", "out must not contain '#' or line breaks");
  if (scenario_names().end() ==
      std::find(scenario_names().begin(), scenario_names().end(), c.scenario))
    fail("scenario", "unknown scenario '" + c.scenario + "'");
}

}  // namespace

bool RunConfig::operator==(const RunConfig& o) const {
  auto same_params = [](const ModelParams& a, const ModelParams& b) {
    return a.eps == b.eps && a.eps0 == b.eps0 && a.lambda == b.lambda && a.sigma1 == b.sigma1 &&
           a.sigma2 == b.sigma2 && a.f == b.f && a.beta == b.beta;
  };
  auto same_bound = [](const BoundConstants& a, const BoundConstants& b) {
    return a.c1 == b.c1 && a.c2 == b.c2 && a.c3 == b.c3 && a.c == b.c && a.n == b.n;
  };
  return scenario == o.scenario && same_params(params, o.params) &&
         domain.interior_points == o.domain.interior_points && domain.length == o.domain.length &&
         domain.dimension == o.domain.dimension && noise.gamma == o.noise.gamma &&
         noise.modes == o.noise.modes && noise.boundary == o.noise.boundary && dt == o.dt &&
         duration == o.duration && output_every == o.output_every && seed == o.seed &&
         out_dir == o.out_dir && ic_count == o.ic_count && ic_amplitude == o.ic_amplitude &&
         ic_modes == o.ic_modes && pullback_times == o.pullback_times &&
         absorb_constant == o.absorb_constant && lyap_directions == o.lyap_directions &&
         renorm_every == o.renorm_every && burn_in == o.burn_in && eps0_list == o.eps0_list &&
         bound_eps0_list == o.bound_eps0_list && ensemble == o.ensemble && settle == o.settle &&
         same_bound(bound, o.bound) && noise_steps == o.noise_steps && noise_dt == o.noise_dt &&
         holder_samples == o.holder_samples && holder_dt == o.holder_dt;
}

std::vector<std::string> scenario_names() {
  return {"default", "deterministic", "rough-noise", "sweep"};
}

RunConfig scenario_preset(std::string_view name) {
  RunConfig c;
  c.scenario = std::string(name);
  if (name == "default") return c;
  if (name == "deterministic") {
    c.params.sigma1 = 0.0;
    c.params.sigma2 = 0.0;
    return c;
  }
  if (name == "rough-noise") {
    c.params.eps = 0.0;
    c.noise.gamma = 1.01;
    c.holder_dt = 1e-5;
    return c;
  }
  if (name == "sweep") {
    c.domain.interior_points = 32;
    c.noise.modes = 16;
    c.duration = 20.0;
    return c;
  }
  throw ConfigError("unknown scenario '" + std::string(name) + "'");
}

RunConfig parse_config(std::string_view text) {
  struct Entry {
    std::string key;
    std::string value;
    int line;
  };
  std::vector<Entry> entries;
  std::map<std::string, int> lines;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    ++line_no;
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("expected 'key = value'", line_no);
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (!find_key(key)) throw ConfigError("unknown key '" + key + "'", line_no);
    if (lines.count(key)) throw ConfigError("duplicate key '" + key + "'", line_no);
    lines[key] = line_no;
    entries.push_back({key, value, line_no});
  }

  RunConfig config;
  for (const Entry& e : entries) {
    if (e.key != "scenario") continue;
    try {
      config = scenario_preset(e.value);
    } catch (const ConfigError&) {
      throw ConfigError("unknown scenario '" + e.value + "'", e.line);
    }
  }
  for (const Entry& e : entries) find_key(e.key)->set(config, e.value, e.line);
  validate_with_lines(config, lines);
  return config;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const RunConfig& config) {
  std::string out;
  for (const Key& k : keys()) out += std::string(k.name) + " = " + k.get(config) + "\n";
  return out;
}

void validate_config(const RunConfig& config) {
  validate_with_lines(config, {});
  const std::string text = serialize_config(config);
  parse_config(text);
}

}  // namespace chs
