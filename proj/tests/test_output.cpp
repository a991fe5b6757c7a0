#include "config.hpp"
#include "experiments.hpp"
#include "output.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace chs;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::vector<double>> read_csv(const fs::path& p, std::vector<std::string>& header) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  header.clear();
  std::stringstream hs(line);
  for (std::string cell; std::getline(hs, cell, ',');) header.push_back(cell);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::stringstream rs(line);
    for (std::string cell; std::getline(rs, cell, ',');) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

RunConfig small(const std::string& out) {
  RunConfig c = parse_config("N = 16\nK = 8\ndt = 0.001\nT = 0.3\noutput_every = 50\n");
  c.out_dir = out;
  return c;
}

}  // namespace

TEST_CASE("number formatting round-trips doubles") {
  CHECK(format_number(0.5) == "0.5");
  CHECK(format_number(-3.0) == "-3");
  const double x = 0.1 + 0.2;
  CHECK(std::stod(format_number(x)) == x);
}

TEST_CASE("CSV writer") {
  fs::create_directories("out_csv");
  {
    CsvWriter w("out_csv/a.csv", {"x", "y"});
    w.row({1.0, 0.25});
    CHECK_THROWS_AS(w.row({1.0}), std::logic_error);
    w.close();
  }
  CHECK(slurp("out_csv/a.csv") == "x,y\n1,0.25\n");
}

TEST_CASE("SHA-256 of a known message") {
  fs::create_directories("out_hash");
  std::ofstream("out_hash/abc.txt", std::ios::binary) << "abc";
  CHECK(sha256_file("out_hash/abc.txt") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  std::ofstream("out_hash/empty.txt", std::ios::binary).close();
  CHECK(sha256_file("out_hash/empty.txt") ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK_THROWS(sha256_file("out_hash/missing.txt"));
}

TEST_CASE("manifest lists every file with its hash") {
  fs::remove_all("out_manifest");
  RunOutput out("out_manifest", "simulate");
  CsvWriter w = out.csv("t.csv", {"a"});
  w.row({1.0});
  w.close();
  out.text("notes.txt", "hello\n");
  out.note("k", "v");
  out.write_manifest("eps = 1\n", 9, "ok");
  const auto m = nlohmann::json::parse(slurp("out_manifest/manifest.json"));
  CHECK(m["subcommand"] == "simulate");
  CHECK(m["status"] == "ok");
  CHECK(m["partial"] == false);
  CHECK(m["seed"] == 9);
  CHECK(m["config"] == "eps = 1\n");
  CHECK(m["notes"]["k"] == "v");
  REQUIRE(m["files"].size() == 2);
  for (const auto& f : m["files"]) {
    const std::string name = f["name"];
    CHECK(f["sha256"] == sha256_file(fs::path("out_manifest") / name));
    CHECK(f["bytes"] == fs::file_size(fs::path("out_manifest") / name));
  }
}

TEST_CASE("simulate conserves the mean and is reproducible") {
  fs::remove_all("out_sim_a");
  fs::remove_all("out_sim_b");
  std::ostringstream log;
  REQUIRE(run_experiment(small("out_sim_a"), "simulate", log) == kExitOk);
  REQUIRE(run_experiment(small("out_sim_b"), "simulate", log) == kExitOk);
  CHECK(slurp("out_sim_a/trajectory.csv") == slurp("out_sim_b/trajectory.csv"));

  std::vector<std::string> header;
  const auto rows = read_csv("out_sim_a/trajectory.csv", header);
  REQUIRE(header.size() == 11);
  CHECK(header[1] == "m_phi");
  REQUIRE(rows.size() == 7);
  for (const auto& r : rows) CHECK(std::abs(r[1] - rows[0][1]) < 1e-12);
  CHECK(rows.back()[0] == doctest::Approx(0.3));

  CHECK(parse_config(slurp("out_sim_a/config.txt")) == small("out_sim_a"));
  const auto m = nlohmann::json::parse(slurp("out_sim_a/manifest.json"));
  CHECK(m["status"] == "ok");
  CHECK(m["files"].size() == 2);
}

TEST_CASE("a different seed changes the trajectory") {
  fs::remove_all("out_sim_c");
  RunConfig c = small("out_sim_c");
  c.seed = 2;
  std::ostringstream log;
  REQUIRE(run_experiment(c, "simulate", log) == kExitOk);
  CHECK(slurp("out_sim_c/trajectory.csv") != slurp("out_sim_a/trajectory.csv"));
}

TEST_CASE("error exits") {
  std::ostringstream log;
  CHECK(run_experiment(small("out_bad"), "integrate", log) == kExitConfig);

  RunConfig invalid = small("out_invalid");
  invalid.params.eps0 = 0.0;
  CHECK(run_experiment(invalid, "simulate", log) == kExitConfig);

  fs::remove_all("out_blowup");
  RunConfig blow = parse_config("N = 16\nK = 8\ndt = 0.5\nT = 50\nic_amplitude = 200\n");
  blow.out_dir = "out_blowup";
  CHECK(run_experiment(blow, "simulate", log) == kExitBlowup);
  const auto m = nlohmann::json::parse(slurp("out_blowup/manifest.json"));
  CHECK(m["partial"] == true);
  CHECK(fs::exists("out_blowup/trajectory.csv"));
}
