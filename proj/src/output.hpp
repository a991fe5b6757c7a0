#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <vector>

namespace chs {

/// Header row plus rows of numbers printed with 17 significant digits and
/// '.' as decimal separator.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);

  void row(const std::vector<double>& values);
  void close();

 private:
  std::ofstream out_;
  std::size_t columns_;
};

std::string format_number(double x);

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// Output directory of one run. All files pass through this single writer,
/// which records them for the manifest.
class RunOutput {
 public:
  RunOutput(std::filesystem::path directory, std::string subcommand);

  const std::filesystem::path& directory() const { return directory_; }
  std::filesystem::path path(const std::string& name) const { return directory_ / name; }

  CsvWriter csv(const std::string& name, const std::vector<std::string>& header);
  void text(const std::string& name, const std::string& contents);
  // Registers a file written by other means.
  void add(const std::string& name);

  void note(const std::string& key, const std::string& value);
  void mark_partial(const std::string& reason);

  // manifest.json: subcommand, status, config echo, seed, versions, wall
  // time, partial flag and every registered file with its SHA-256.
  void write_manifest(const std::string& config_text, unsigned long long seed,
                      const std::string& status);

 private:
  std::filesystem::path directory_;
  std::string subcommand_;
  std::chrono::steady_clock::time_point started_;
  std::vector<std::string> files_;
  std::vector<std::pair<std::string, std::string>> notes_;
  bool partial_ = false;
  std::string partial_reason_;
  std::mutex mutex_;
};

}  // namespace chs
