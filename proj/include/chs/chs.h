#ifndef CHS_CHS_H
#define CHS_CHS_H

/* Stochastic Cahn-Hilliard lab with dynamic boundary conditions: C API.
 *
 * Every function returning chs_status leaves a message for
 * chs_last_error() on failure. Handles are opaque and owned by the caller;
 * release them with the matching _free function. A handle must not be used
 * from two threads at once. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(CHS_BUILDING_LIBRARY)
#    define CHS_API __declspec(dllexport)
#  else
#    define CHS_API __declspec(dllimport)
#  endif
#else
#  define CHS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum chs_status {
  CHS_OK = 0,
  CHS_ERROR_CONFIG = 1,
  CHS_ERROR_BLOWUP = 2,
  CHS_ERROR_IO = 3,
  CHS_ERROR_ARGUMENT = 4,
  CHS_ERROR_INTERNAL = 5
} chs_status;

typedef struct chs_config chs_config;
typedef struct chs_simulation chs_simulation;

CHS_API const char* chs_version(void);

/* Message of the last failed call on this thread; empty if none. */
CHS_API const char* chs_last_error(void);

/* Configuration from `key = value` text or a file. */
CHS_API chs_status chs_config_parse(const char* text, chs_config** out);
CHS_API chs_status chs_config_load(const char* path, chs_config** out);
CHS_API chs_status chs_config_set_seed(chs_config* config, uint64_t seed);
CHS_API chs_status chs_config_set_output_dir(chs_config* config, const char* dir);
CHS_API uint64_t chs_config_seed(const chs_config* config);
/* Writes the canonical text (NUL terminated) into buf when it fits; the
 * required size including the terminator is stored in *needed. */
CHS_API chs_status chs_config_serialize(const chs_config* config, char* buf, size_t capacity,
                                        size_t* needed);
CHS_API void chs_config_free(chs_config* config);

/* Runs a subcommand (simulate, pullback, lyapunov, sweep-eps0,
 * noise-check) into the configured output directory. Progress goes to
 * stderr. Returns the process exit code: 0 success, 1 configuration or I/O
 * error, 2 numerical blow-up. */
CHS_API int chs_run(const chs_config* config, const char* subcommand);

/* Single trajectory of the configured model, started from the first
 * configured initial condition at t = 0. */
CHS_API chs_status chs_simulation_create(const chs_config* config, chs_simulation** out);
CHS_API chs_status chs_simulation_advance(chs_simulation* sim, long steps);
CHS_API double chs_simulation_time(const chs_simulation* sim);
/* Trapezoid mean of phi. */
CHS_API double chs_simulation_mean(const chs_simulation* sim);
/* Number of grid nodes including both ends. */
CHS_API size_t chs_simulation_nodes(const chs_simulation* sim);
/* Copies phi at every node into out (capacity >= nodes). */
CHS_API chs_status chs_simulation_phi(const chs_simulation* sim, double* out, size_t capacity);
CHS_API void chs_simulation_free(chs_simulation* sim);

/* Smallest integer d with c1 d^(1+4/n) > c2 eps0^((4+n)/(4-n)) + c3 + c m. */
CHS_API chs_status chs_dimension_bound(double c1, double c2, double c3, double c, int n,
                                       double eps0, double m, int* out);
/* Kaplan-Yorke dimension of exponents sorted in descending order. */
CHS_API chs_status chs_kaplan_yorke(const double* exponents, size_t count, double* out);

#ifdef __cplusplus
}
#endif

#endif
