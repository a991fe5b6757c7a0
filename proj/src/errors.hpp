#pragma once

#include <stdexcept>
#include <string>

namespace chs {

/// Invalid configuration text or parameter set. `line` is 1-based, 0 when
/// the offending value was not read from a file.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// A trajectory left the finite range the solver is able to represent.
class BlowupError : public std::runtime_error {
 public:
  BlowupError(const std::string& what, long step)
      : std::runtime_error(what), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

}  // namespace chs
