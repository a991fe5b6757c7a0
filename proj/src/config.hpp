#pragma once

// Flat `key = value` run configuration with scenario presets.

#include "dynamics.hpp"
#include "lyapunov.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace chs {

struct RunConfig {
  std::string scenario = "default";

  ModelParams params;
  DomainSpec domain;
  CovarianceSpec noise;

  double dt = 1e-3;
  double duration = 10.0;
  int output_every = 100;
  std::uint64_t seed = 1;
  std::string out_dir = "out";

  int ic_count = 4;
  double ic_amplitude = 0.5;
  int ic_modes = 8;

  std::vector<double> pullback_times{0, 5, 10, 15, 20, 25, 30, 35, 40, 45, 50};
  double absorb_constant = 1.0;

  int lyap_directions = 4;
  int renorm_every = 10;
  double burn_in = 10.0;
  std::vector<double> eps0_list{0.5, 1, 2, 4, 8};
  std::vector<double> bound_eps0_list{1e2, 1e3, 1e4, 1e5, 1e6};
  int ensemble = 4;
  double settle = 20.0;
  BoundConstants bound;

  long noise_steps = 100000;
  double noise_dt = 1.0;
  int holder_samples = 10000;
  double holder_dt = 1e-5;

  bool operator==(const RunConfig&) const;
};

/// Known scenario names: default, deterministic, rough-noise, sweep.
std::vector<std::string> scenario_names();
RunConfig scenario_preset(std::string_view name);

/// Parses `key = value` lines; `#` starts a comment. A `scenario` key, if
/// present, selects the preset that the remaining keys override. Throws
/// ConfigError with the offending line for unknown keys, malformed values
/// and violated invariants.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::string& path);

/// Every key in canonical order, doubles with 17 significant digits.
std::string serialize_config(const RunConfig& config);

/// Cross-field validation; throws ConfigError.
void validate_config(const RunConfig& config);

}  // namespace chs
