#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "dyad/harness.hpp"

namespace fs = std::filesystem;

namespace {

std::string cli_path() {
  const char* p = std::getenv("DYAD_CLI");
  REQUIRE_MESSAGE(p != nullptr, "DYAD_CLI must point at the CLI binary");
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd = cli_path() + " " + args + " >/dev/null 2>/dev/null";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("dyad_cli_" + std::to_string(::getpid()) + "_" +
            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string str(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("cli: simulate then estimate end to end") {
  TempDir tmp;
  REQUIRE(run_cli("simulate --design 1 --seed 7 --out " + tmp.str("sim")) == 0);
  REQUIRE(fs::exists(tmp.str("sim") + "/edges.csv"));

  REQUIRE(run_cli("estimate --in " + tmp.str("sim") + "/edges.csv --out " +
                  tmp.str("est") + " --estimator two_step --level 0.95") == 0);
  nlohmann::json report;
  std::ifstream in(tmp.str("est") + "/report.json");
  in >> report;
  CHECK(report.at("method") == "two_step");
  const double slope = report.at("mu_hat")[1].get<double>();
  CHECK(std::abs(slope - 1.0) < 0.5);
  CHECK(report.at("ci_lower")[1].get<double>() < report.at("ci_upper")[1].get<double>());
  CHECK(fs::exists(tmp.str("est") + "/summary.csv"));
}

TEST_CASE("cli: mc sweep emits summary and histograms deterministically") {
  TempDir tmp;
  nlohmann::json config = {{"designs", {"standard2"}},
                           {"estimators", {"ols", "two_step", "oracle_ols"}},
                           {"replications", 4},
                           {"n_grid", {40}},
                           {"seed", 5150}};
  {
    std::ofstream out(tmp.str("config.json"));
    out << config.dump();
  }
  REQUIRE(run_cli("mc --config " + tmp.str("config.json") + " --out " + tmp.str("r1")) == 0);
  REQUIRE(run_cli("mc --config " + tmp.str("config.json") + " --out " + tmp.str("r2")) == 0);
  CHECK(fs::exists(tmp.str("r1") + "/summary.csv"));
  CHECK(fs::exists(tmp.str("r1") + "/hist_design2_ols_n40.csv"));
  CHECK(fs::exists(tmp.str("r1") + "/hist_design2_oracle_ols_n40.csv"));
  CHECK(read_file(tmp.str("r1") + "/summary.csv") == read_file(tmp.str("r2") + "/summary.csv"));
  CHECK(read_file(tmp.str("r1") + "/hist_design2_two_step_n40.csv") ==
        read_file(tmp.str("r2") + "/hist_design2_two_step_n40.csv"));
}

TEST_CASE("cli: spectrum of a simulated design") {
  TempDir tmp;
  nlohmann::json design = {{"n", 300},
                           {"beta", {1.0}},
                           {"regressors", {"intercept"}},
                           {"gamma", 0.0},
                           {"seed", 3}};
  {
    std::ofstream out(tmp.str("design.json"));
    out << design.dump();
  }
  REQUIRE(run_cli("spectrum --config " + tmp.str("design.json") + " --out " + tmp.str("sp")) == 0);
  std::ifstream in(tmp.str("sp") + "/spectrum.csv");
  std::string line;
  std::getline(in, line);
  REQUIRE(line == "eigenvalue");
  double max_abs = 0.0;
  std::size_t count = 0;
  while (std::getline(in, line)) {
    max_abs = std::max(max_abs, std::abs(std::strtod(line.c_str(), nullptr)));
    ++count;
  }
  CHECK(count == 300);
  // spike near N / sqrt(N) = sqrt(300) ~ 17.3 after rescaling by sqrt(N)
  CHECK(max_abs / std::sqrt(300.0) > 12.0);
  CHECK(max_abs / std::sqrt(300.0) < 23.0);
}

TEST_CASE("cli: fnplot tabulates the profile") {
  TempDir tmp;
  nlohmann::json design = {{"n", 60},
                           {"beta", {1.0}},
                           {"regressors", {"intercept"}},
                           {"gamma", 0.0},
                           {"seed", 4}};
  {
    std::ofstream out(tmp.str("design.json"));
    out << design.dump();
  }
  REQUIRE(run_cli("fnplot --config " + tmp.str("design.json") + " --grid 0:2:0.1 --out " +
                  tmp.str("fn")) == 0);
  std::ifstream in(tmp.str("fn") + "/fn_profile.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "mu,f_n,objective_corrected");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 21);
}

TEST_CASE("cli: exit codes") {
  TempDir tmp;
  SUBCASE("unknown subcommand") { CHECK(run_cli("explode") == 1); }
  SUBCASE("unknown flag") { CHECK(run_cli("simulate --frobnicate 3") == 1); }
  SUBCASE("missing input file") {
    CHECK(run_cli("estimate --in " + tmp.str("nope.csv")) == 3);
  }
  SUBCASE("config error") {
    std::ofstream(tmp.str("bad.json")) << "{\"designs\": [\"standard9\"]}";
    CHECK(run_cli("mc --config " + tmp.str("bad.json")) == 1);
  }
  SUBCASE("estimation error on collinear regressors") {
    // x2 duplicates the intercept column -> singular Gram matrix
    std::ofstream out(tmp.str("bad_edges.csv"));
    out << "i,j,y,x1,x2\n";
    for (int i = 0; i < 6; ++i)
      for (int j = i + 1; j < 6; ++j)
        out << i << ',' << j << ',' << (i + j) << ",1,1\n";
    out.close();
    CHECK(run_cli("estimate --in " + tmp.str("bad_edges.csv")) == 2);
  }
}
