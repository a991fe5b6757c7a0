#include "chs/chs.h"

#include "config.hpp"
#include "dynamics.hpp"
#include "errors.hpp"
#include "experiments.hpp"
#include "lyapunov.hpp"
#include "noise.hpp"
#include "version.hpp"

#include <cstring>
#include <filesystem>
#include <iostream>
#include <new>
#include <span>
#include <stdexcept>
#include <string>

struct chs_config {
  chs::RunConfig value;
};

struct chs_simulation {
  chs::RunConfig config;
  chs::Integrator integrator;
  chs::NoisePath path;
  chs::ConvolutionState z;
  chs::SystemState state;
  long horizon;
};

namespace {

thread_local std::string last_error;

chs_status fail(chs_status status, const std::string& message) {
  last_error = message;
  return status;
}

// Maps the active exception to a status code.
chs_status translate() {
  try {
    throw;
  } catch (const chs::ConfigError& e) {
    return fail(CHS_ERROR_CONFIG, e.what());
  } catch (const chs::BlowupError& e) {
    return fail(CHS_ERROR_BLOWUP, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(CHS_ERROR_IO, e.what());
  } catch (const std::ios_base::failure& e) {
    return fail(CHS_ERROR_IO, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(CHS_ERROR_ARGUMENT, e.what());
  } catch (const std::out_of_range& e) {
    return fail(CHS_ERROR_ARGUMENT, e.what());
  } catch (const std::bad_alloc&) {
    return fail(CHS_ERROR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(CHS_ERROR_INTERNAL, e.what());
  } catch (...) {
    return fail(CHS_ERROR_INTERNAL, "unknown error");
  }
}

template <typename Fn>
chs_status guarded(Fn&& fn) {
  last_error.clear();
  try {
    fn();
    return CHS_OK;
  } catch (...) {
    return translate();
  }
}

// Simulations extend their noise path in chunks of this many steps.
constexpr long kPathChunk = 1 << 16;

}  // namespace

extern "C" {

const char* chs_version(void) { return chs::kVersion; }

const char* chs_last_error(void) { return last_error.c_str(); }

chs_status chs_config_parse(const char* text, chs_config** out) {
  if (!text || !out) return fail(CHS_ERROR_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] { *out = new chs_config{chs::parse_config(text)}; });
}

chs_status chs_config_load(const char* path, chs_config** out) {
  if (!path || !out) return fail(CHS_ERROR_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    if (!std::filesystem::exists(path))
      throw std::filesystem::filesystem_error("cannot open config", path,
                                              std::make_error_code(std::errc::no_such_file_or_directory));
    *out = new chs_config{chs::load_config(path)};
  });
}

chs_status chs_config_set_seed(chs_config* config, uint64_t seed) {
  if (!config) return fail(CHS_ERROR_ARGUMENT, "null config");
  config->value.seed = seed;
  return CHS_OK;
}

chs_status chs_config_set_output_dir(chs_config* config, const char* dir) {
  if (!config || !dir) return fail(CHS_ERROR_ARGUMENT, "null argument");
  if (!*dir) return fail(CHS_ERROR_ARGUMENT, "output directory must not be empty");
  config->value.out_dir = dir;
  return CHS_OK;
}

uint64_t chs_config_seed(const chs_config* config) { return config ? config->value.seed : 0; }

chs_status chs_config_serialize(const chs_config* config, char* buf, size_t capacity, size_t* needed) {
  if (!config) return fail(CHS_ERROR_ARGUMENT, "null config");
  return guarded([&] {
    const std::string text = chs::serialize_config(config->value);
    if (needed) *needed = text.size() + 1;
    if (buf && capacity > text.size()) {
      std::memcpy(buf, text.c_str(), text.size() + 1);
    } else if (buf || !needed) {
      throw std::invalid_argument("buffer too small for serialized config");
    }
  });
}

void chs_config_free(chs_config* config) { delete config; }

int chs_run(const chs_config* config, const char* subcommand) {
  if (!config || !subcommand) {
    fail(CHS_ERROR_ARGUMENT, "null argument");
    return chs::kExitConfig;
  }
  last_error.clear();
  try {
    return chs::run_experiment(config->value, subcommand, std::cerr);
  } catch (...) {
    translate();
    return chs::kExitConfig;
  }
}

chs_status chs_simulation_create(const chs_config* config, chs_simulation** out) {
  if (!config || !out) return fail(CHS_ERROR_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    const chs::RunConfig& c = config->value;
    chs::validate_config(c);
    chs::Integrator integrator(c.params, c.domain, c.noise, c.dt);
    chs::NoisePath path = chs::NoisePath::sample(c.noise, 0.0, kPathChunk * c.dt, c.dt,
                                                 chs::derive_seed(c.seed, {chs::kStreamPath}));
    chs::ConvolutionState z =
        integrator.convolution().stationary(chs::derive_seed(c.seed, {chs::kStreamConvolution}));
    const chs::PhysicalState initial = chs::smooth_random_state(
        c.domain, c.params.beta, c.ic_amplitude, c.ic_modes,
        chs::derive_seed(c.seed, {chs::kStreamInitial, 0}));
    chs::SystemState state = integrator.transform(initial, z, 0);
    *out = new chs_simulation{c, std::move(integrator), std::move(path), std::move(z),
                              std::move(state), kPathChunk};
  });
}

chs_status chs_simulation_advance(chs_simulation* sim, long steps) {
  if (!sim) return fail(CHS_ERROR_ARGUMENT, "null simulation");
  if (steps < 0) return fail(CHS_ERROR_ARGUMENT, "steps must be non-negative");
  return guarded([&] {
    const long target = sim->state.step + steps;
    if (target > sim->horizon) {
      // Path blocks are seeded by index, so a longer sample extends the
      // same realization.
      while (sim->horizon < target) sim->horizon += kPathChunk;
      const chs::RunConfig& c = sim->config;
      sim->path = chs::NoisePath::sample(c.noise, 0.0, sim->horizon * c.dt, c.dt,
                                         chs::derive_seed(c.seed, {chs::kStreamPath}));
    }
    chs::solve_flow(sim->integrator, sim->path, sim->state.step, target, sim->state, sim->z);
  });
}

double chs_simulation_time(const chs_simulation* sim) { return sim ? sim->state.t : 0.0; }

double chs_simulation_mean(const chs_simulation* sim) {
  if (!sim) return 0.0;
  return chs::mean(sim->integrator.recover(sim->state, sim->z).phi, sim->config.domain);
}

size_t chs_simulation_nodes(const chs_simulation* sim) {
  return sim ? static_cast<size_t>(sim->config.domain.nodes()) : 0;
}

chs_status chs_simulation_phi(const chs_simulation* sim, double* out, size_t capacity) {
  if (!sim || !out) return fail(CHS_ERROR_ARGUMENT, "null argument");
  const chs::Field phi = sim->integrator.recover(sim->state, sim->z).phi;
  if (capacity < static_cast<size_t>(phi.size()))
    return fail(CHS_ERROR_ARGUMENT, "output buffer smaller than the node count");
  std::memcpy(out, phi.data(), sizeof(double) * phi.size());
  return CHS_OK;
}

void chs_simulation_free(chs_simulation* sim) { delete sim; }

chs_status chs_dimension_bound(double c1, double c2, double c3, double c, int n, double eps0,
                               double m, int* out) {
  if (!out) return fail(CHS_ERROR_ARGUMENT, "null output");
  return guarded([&] {
    const chs::BoundConstants consts{c1, c2, c3, c, n};
    *out = chs::dimension_bound(consts, eps0, m);
  });
}

chs_status chs_kaplan_yorke(const double* exponents, size_t count, double* out) {
  if (!out || (!exponents && count)) return fail(CHS_ERROR_ARGUMENT, "null argument");
  return guarded([&] { *out = chs::kaplan_yorke(std::span<const double>(exponents, count)); });
}

}  // extern "C"
