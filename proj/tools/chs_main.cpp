#include "chs/chs.h"

#include <CLI11.hpp>

#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

namespace {

std::optional<std::string> env(const char* name) {
  const char* value = std::getenv(name);
  if (!value || !*value) return std::nullopt;
  return std::string(value);
}

bool parse_seed(const std::string& text, std::uint64_t& seed) {
  try {
    std::size_t used = 0;
    if (!text.empty() && text[0] == '-') return false;
    seed = std::stoull(text, &used, 10);
    return used == text.size();
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic Cahn-Hilliard experiments with dynamic boundary conditions"};
  app.set_version_flag("--version", std::string(chs_version()));
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> seed_flag;
  std::optional<std::string> out_flag;

  const char* help[][2] = {
      {"simulate", "Integrate one trajectory and write trajectory.csv"},
      {"pullback", "Pullback diameters and absorbing-radius estimate"},
      {"lyapunov", "Lyapunov spectrum, Kaplan-Yorke dimension and trace average"},
      {"sweep-eps0", "Dimension bound and Kaplan-Yorke dimension across eps0"},
      {"noise-check", "Stationary OU variances and Hoelder exponent of grad z1"},
  };
  for (const auto& [name, description] : help) {
    CLI::App* sub = app.add_subcommand(name, description);
    sub->add_option("--config", config_path, "Configuration file (key = value)")->required();
    sub->add_option("--seed", seed_flag, "Master seed (overrides CHS_SEED and the config)");
    sub->add_option("--out", out_flag, "Output directory (overrides CHS_OUT and the config)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  const std::string subcommand = app.get_subcommands().front()->get_name();

  chs_config* config = nullptr;
  if (chs_config_load(config_path.c_str(), &config) != CHS_OK) {
    std::cerr << "error: " << chs_last_error() << '\n';
    return 1;
  }

  const std::optional<std::string> seed_text = seed_flag ? seed_flag : env("CHS_SEED");
  if (seed_text) {
    std::uint64_t seed = 0;
    if (!parse_seed(*seed_text, seed)) {
      std::cerr << "error: seed '" << *seed_text << "' is not a non-negative integer\n";
      chs_config_free(config);
      return 1;
    }
    chs_config_set_seed(config, seed);
  }
  const std::optional<std::string> out_dir = out_flag ? out_flag : env("CHS_OUT");
  if (out_dir && chs_config_set_output_dir(config, out_dir->c_str()) != CHS_OK) {
    std::cerr << "error: " << chs_last_error() << '\n';
    chs_config_free(config);
    return 1;
  }

  const int code = chs_run(config, subcommand.c_str());
  chs_config_free(config);
  return code;
}
