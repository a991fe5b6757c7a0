#pragma once

#include "config.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace chs {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitBlowup = 2 };

/// simulate, pullback, lyapunov, sweep-eps0, noise-check.
const std::vector<std::string>& subcommand_names();
bool is_subcommand(const std::string& name);

// Stream ids below the master seed.
enum SeedStream : std::uint64_t {
  kStreamPath = 1,
  kStreamInitial = 2,
  kStreamConvolution = 3,
  kStreamTangent = 4,
  kStreamEnsemble = 5,
  kStreamHolder = 6,
};

/// Runs one subcommand into config.out_dir: the module CSVs, config.txt
/// (the full echoed configuration) and manifest.json. Progress lines go to
/// `log`. Returns 0 on success, 1 on configuration or I/O errors and 2 when
/// the integration blew up (outputs written so far are kept and the
/// manifest is marked partial).
int run_experiment(const RunConfig& config, const std::string& subcommand, std::ostream& log);

}  // namespace chs
