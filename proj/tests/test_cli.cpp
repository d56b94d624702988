#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
  std::string cmd = std::string(NCBE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(is), {});
}

}  // namespace

TEST_CASE("list-cases exits cleanly") {
  REQUIRE(run_cli("list-cases") == 0);
  REQUIRE(run_cli("list-cases --discrepancies") == 0);
}

TEST_CASE("invalid configuration yields exit code 2") {
  REQUIRE(run_cli("run --case m1 --n 0 --out cli_test_bad") == 2);
  REQUIRE(run_cli("run --case nosuch --n 8 --out cli_test_bad") == 2);
  REQUIRE(run_cli("run --case m1 --n 8 --mode trapezoid --out cli_test_bad") == 2);
}

TEST_CASE("run produces trajectory and provenance") {
  fs::remove_all("cli_test_run");
  REQUIRE(run_cli("run --case m2 --n 16 --tau 5e-3 --T 0.15 --out cli_test_run") == 0);
  REQUIRE(fs::exists("cli_test_run/trajectory.csv"));
  REQUIRE(fs::exists("cli_test_run/provenance.txt"));
  std::string prov = slurp("cli_test_run/provenance.txt");
  REQUIRE(prov.find("case=m2") != std::string::npos);
  REQUIRE(prov.find("tau=") != std::string::npos);
  fs::remove_all("cli_test_run");
}

TEST_CASE("identical configuration and seed give byte-identical output") {
  fs::remove_all("cli_det_a");
  fs::remove_all("cli_det_b");
  std::string args =
      " --case m2 --n 24 --tau 5e-3 --T 0.15 --grid random --seed 9 --out ";
  REQUIRE(run_cli("run" + args + "cli_det_a") == 0);
  REQUIRE(run_cli("run" + args + "cli_det_b") == 0);
  REQUIRE(slurp("cli_det_a/trajectory.csv") == slurp("cli_det_b/trajectory.csv"));
  REQUIRE(slurp("cli_det_a/provenance.txt") == slurp("cli_det_b/provenance.txt"));
  REQUIRE_FALSE(slurp("cli_det_a/trajectory.csv").empty());
  fs::remove_all("cli_det_a");
  fs::remove_all("cli_det_b");
}

TEST_CASE("moment study emits one table per moment index") {
  fs::remove_all("cli_test_mom");
  REQUIRE(run_cli("moments --case m2 --n-list 8,16 --tau 5e-3 --T 0.15 --out cli_test_mom") == 0);
  REQUIRE(fs::exists("cli_test_mom/moments_m0.csv"));
  REQUIRE(fs::exists("cli_test_mom/moments_m1.csv"));
  std::string csv = slurp("cli_test_mom/moments_m0.csv");
  REQUIRE(csv.find("num_n8") != std::string::npos);
  REQUIRE(csv.find("rel_err_n16") != std::string::npos);
  fs::remove_all("cli_test_mom");
}

TEST_CASE("convergence study emits the error table") {
  fs::remove_all("cli_test_conv");
  REQUIRE(run_cli("convergence --case c1 --n-list 8,16 --degrees 1 --tau 2e-2 --T 0.1 "
                  "--out cli_test_conv") == 0);
  std::string csv = slurp("cli_test_conv/convergence.csv");
  REQUIRE(csv.find("l2_eoc") != std::string::npos);
  REQUIRE(csv.find("h1") != std::string::npos);
  fs::remove_all("cli_test_conv");
}
