#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#ifndef SAIA_CLI_PATH
#error "SAIA_CLI_PATH must point at the saia executable"
#endif

namespace {

namespace fs = std::filesystem;

int run(const std::string& args) {
  const std::string cmd = std::string(SAIA_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string capture(const std::string& args) {
  const auto tmp = fs::temp_directory_path() / "saia_cli_capture.txt";
  const std::string cmd =
      std::string(SAIA_CLI_PATH) + " " + args + " > " + tmp.string() + " 2>/dev/null";
  std::system(cmd.c_str());
  std::ifstream in(tmp);
  std::stringstream ss;
  ss << in.rdbuf();
  fs::remove(tmp);
  return ss.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// nearest table row to a target h
std::pair<double, double> row_nearest(const fs::path& csv, double h_target) {
  std::ifstream in(csv);
  std::string line;
  std::getline(in, line);  // header
  double best_d = 1e300, best_b = 0, best_a = 0;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string f;
    std::vector<double> row;
    while (std::getline(ss, f, ',')) row.push_back(std::stod(f));
    if (std::abs(row[0] - h_target) < best_d) {
      best_d = std::abs(row[0] - h_target);
      best_b = row[1];
      best_a = row[2];
    }
  }
  return {best_b, best_a};
}

const fs::path kDir = fs::temp_directory_path() / "saia_cli_test";

}  // namespace

TEST_CASE("usage errors exit with 1, help with 0") {
  CHECK(run("") == 1);
  CHECK(run("bogus") == 1);
  CHECK(run("--help") == 0);
  CHECK(run("tabulate --k 7") == 1);
  CHECK(run("run --integrators VV") == 1);                       // missing benchmark
  CHECK(run("run --benchmark nope --integrators VV") == 1);      // bad benchmark
  CHECK(run("run --benchmark gaussian2 --integrators XX") == 1); // bad label
}

TEST_CASE("runtime errors exit with 2") {
  CHECK(run("run --benchmark blr:/nonexistent.csv --integrators sAIA2") == 2);
  CHECK(run("analyze /dev/null") == 2);
}

TEST_CASE("tabulate writes the named coefficients") {
  fs::create_directories(kDir);
  const auto p2 = kDir / "t2.csv";
  const auto p3 = kDir / "t3.csv";
  CHECK(run("tabulate --k 2 --n-grid 400 --out " + p2.string()) == 0);
  CHECK(run("tabulate --k 3 --n-grid 400 --out " + p3.string()) == 0);
  {
    std::ifstream in(p2);
    std::string header;
    std::getline(in, header);
    CHECK(header == "h,b,a");
  }
  const auto [b2, a2] = row_nearest(p2, 2.0);
  CHECK(b2 == doctest::Approx(0.211781).epsilon(2e-3));
  CHECK(a2 == doctest::Approx(0.0));
  const auto [b3, a3] = row_nearest(p3, 3.0);
  CHECK(b3 == doctest::Approx(0.118880).epsilon(2e-2));
  CHECK(a3 == doctest::Approx(0.296195).epsilon(2e-2));
}

TEST_CASE("run produces a deterministic sweep with the documented shape") {
  fs::create_directories(kDir);
  const std::string common =
      " --benchmark wishart:6 --integrators VV3,sAIA3 --grid 3 --reps 2 --seed 9"
      " --n-tune 600 --n-burnin 200 --n-pr 300 --n-grid 64 --traces";
  const auto out_a = kDir / "a";
  const auto out_b = kDir / "b";
  REQUIRE(run("run --out " + out_a.string() + common) == 0);
  REQUIRE(run("run --out " + out_b.string() + common) == 0);
  CHECK(slurp(out_a / "summary.csv") == slurp(out_b / "summary.csv"));
  CHECK(slurp(out_a / "runs.csv") == slurp(out_b / "runs.csv"));

  const std::string summary = slurp(out_a / "summary.csv");
  // Table-3-style preamble
  CHECK(summary.find("# S=") != std::string::npos);
  CHECK(summary.find("# S_omega=") != std::string::npos);
  CHECK(summary.find("# sigma=") != std::string::npos);
  CHECK(summary.find("# dt_SL[sAIA3]=") != std::string::npos);
  CHECK(summary.find("integrator,grid_index,dt_center,ar,min_ess_norm,min_inv_mcse_norm,"
                     "max_psrf") != std::string::npos);
  // aggregated rows: |integrators| x grid_points
  int rows = 0;
  std::stringstream ss(summary);
  std::string line;
  while (std::getline(ss, line))
    if (!line.empty() && line[0] != '#' && line[0] != 'i') ++rows;
  CHECK(rows == 2 * 3);
}

TEST_CASE("analyze reproduces the run's inline metrics bit-exactly") {
  const auto out = kDir / "a";
  REQUIRE(fs::exists(out / "trace_sAIA3_g2_r0.csv"));
  const std::string metrics =
      capture("analyze " + (out / "trace_sAIA3_g2_r0.csv").string() + " " +
              (out / "trace_sAIA3_g2_r1.csv").string());
  // pick the runs.csv rows for sAIA3 grid 2
  std::stringstream runs(slurp(out / "runs.csv"));
  std::string line;
  int matched = 0;
  while (std::getline(runs, line)) {
    if (line.rfind("sAIA3,2,", 0) != 0) continue;
    // integrator,grid,rep,dt_center,ar,min_ess,min_ess_norm,min_inv_mcse_norm,div
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string field;
    while (std::getline(ls, field, ',')) f.push_back(field);
    const std::string needle = f[4] + ',' + f[5] + ',' + f[6] + ',' + f[7];
    CHECK(metrics.find(needle) != std::string::npos);
    ++matched;
  }
  CHECK(matched == 2);
  CHECK(metrics.find("# max_psrf=") != std::string::npos);
}

TEST_CASE("config file supplies defaults, flags override") {
  fs::create_directories(kDir);
  const auto cfg = kDir / "exp.cfg";
  {
    std::ofstream out(cfg);
    out << "benchmark = wishart:4\n"
        << "integrators = VV\n"
        << "grid = 2\n"
        << "reps = 1\n"
        << "seed = 3\n"
        << "n-tune = 400\n"
        << "n-burnin = 150\n"
        << "n-pr = 200\n"
        << "n-grid = 64\n";
  }
  const auto out1 = kDir / "cfg1";
  REQUIRE(run("run --config " + cfg.string() + " --out " + out1.string()) == 0);
  CHECK(slurp(out1 / "summary.csv").find("# benchmark=wishart:4") != std::string::npos);
  const auto out2 = kDir / "cfg2";
  REQUIRE(run("run --config " + cfg.string() + " --benchmark wishart:5 --out " +
              out2.string()) == 0);
  CHECK(slurp(out2 / "summary.csv").find("# benchmark=wishart:5") != std::string::npos);
  fs::remove_all(kDir);
}
