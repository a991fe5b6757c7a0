#include "output.hpp"

#include "version.hpp"

#include <Eigen/Core>
#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <memory>
#include <stdexcept>

namespace chs {

std::string format_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary), columns_(header.size()) {
  if (!out_) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
  out_ << '\n';
}

void CsvWriter::row(const std::vector<double>& values) {
  if (values.size() != columns_) throw std::logic_error("CSV row width does not match its header");
  for (std::size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << format_number(values[i]);
  out_ << '\n';
}

void CsvWriter::close() {
  out_.close();
  if (out_.fail()) throw std::runtime_error("failed writing CSV output");
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path.string() + "' for hashing");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 initialization failed");
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

RunOutput::RunOutput(std::filesystem::path directory, std::string subcommand)
    : directory_(std::move(directory)),
      subcommand_(std::move(subcommand)),
      started_(std::chrono::steady_clock::now()) {
  std::error_code ec;
  std::filesystem::create_directories(directory_, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + directory_.string() + "'");
}

CsvWriter RunOutput::csv(const std::string& name, const std::vector<std::string>& header) {
  add(name);
  return CsvWriter(path(name), header);
}

void RunOutput::text(const std::string& name, const std::string& contents) {
  std::ofstream out(path(name), std::ios::binary);
  out << contents;
  if (!out) throw std::runtime_error("failed writing '" + name + "'");
  add(name);
}

void RunOutput::add(const std::string& name) {
  std::lock_guard lock(mutex_);
  if (std::find(files_.begin(), files_.end(), name) == files_.end()) files_.push_back(name);
}

void RunOutput::note(const std::string& key, const std::string& value) {
  std::lock_guard lock(mutex_);
  notes_.emplace_back(key, value);
}

void RunOutput::mark_partial(const std::string& reason) {
  std::lock_guard lock(mutex_);
  partial_ = true;
  partial_reason_ = reason;
}

void RunOutput::write_manifest(const std::string& config_text, unsigned long long seed,
                               const std::string& status) {
  std::lock_guard lock(mutex_);
  using nlohmann::ordered_json;
  ordered_json m;
  m["subcommand"] = subcommand_;
  m["status"] = status;
  m["partial"] = partial_;
  if (partial_) m["partial_reason"] = partial_reason_;
  m["seed"] = seed;
  m["config"] = config_text;
  m["versions"] = {{"chs", kVersion},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                 std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)},
                   {"compiler", __VERSION__}};
  m["wall_time_s"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
  ordered_json notes = ordered_json::object();
  for (const auto& [k, v] : notes_) notes[k] = v;
  m["notes"] = notes;
  ordered_json files = ordered_json::array();
  for (const std::string& name : files_) {
    const auto p = path(name);
    files.push_back({{"name", name},
                     {"bytes", std::filesystem::exists(p) ? std::filesystem::file_size(p) : 0},
                     {"sha256", std::filesystem::exists(p) ? sha256_file(p) : ""}});
  }
  m["files"] = files;
  std::ofstream out(path("manifest.json"), std::ios::binary);
  out << m.dump(2) << '\n';
  if (!out) throw std::runtime_error("failed writing manifest.json");
}

}  // namespace chs
