#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hcgb/cli.hpp"

using hcgb::cli::run_cli;

namespace {

struct Run {
  int code;
  std::string out, err;
  nlohmann::json json() const { return nlohmann::json::parse(out); }
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string data(const std::string& rel) { return std::string(HCGB_DATA_DIR) + "/" + rel; }

nlohmann::json without_timestamp(nlohmann::json j) {
  j.erase("timestamp");
  return j;
}

}  // namespace

TEST(Cli, CheckPresetPasses) {
  const auto r = run({"check", "--preset", "heisenberg"});
  EXPECT_EQ(r.code, 0) << r.err;
  const auto j = r.json();
  EXPECT_TRUE(j["passes"].get<bool>());
  EXPECT_EQ(j["schema"], 1);
  EXPECT_TRUE(j.contains("seed"));
  EXPECT_TRUE(j.contains("timestamp"));
  EXPECT_EQ(j["torsion"]["rank"], 1);
}

TEST(Cli, CheckPerturbationFails) {
  const auto r = run({"check", "--preset", "heisenberg", "--perturb", "T_cov_h=0.1"});
  EXPECT_EQ(r.code, 1);
  const auto j = r.json();
  EXPECT_FALSE(j["passes"].get<bool>());
  EXPECT_NEAR(j["symmetry"]["residual"].get<double>(), 0.1, 1e-15);
  // Explicit index form hits the same entry.
  const auto r2 = run({"check", "--preset", "heisenberg", "--perturb", "Tcov_h[2,1,1,1]=-0.1"});
  EXPECT_EQ(r2.code, 1);
  EXPECT_EQ(r2.json()["symmetry"]["residual"], j["symmetry"]["residual"]);
}

TEST(Cli, CheckSymmetryGateAtWrongEpsilon) {
  EXPECT_EQ(run({"check", "--preset", "htype-m2", "--kappa", "2", "--epsilon", "0.5"}).code, 0);
  const auto r = run({"check", "--preset", "htype-m2", "--kappa", "2", "--epsilon", "1"});
  EXPECT_EQ(r.code, 1);
  EXPECT_GE(r.json()["symmetry"]["residual"].get<double>(), 1.0 - 1e-12);
}

TEST(Cli, InputErrorsExitTwo) {
  EXPECT_EQ(run({"check", "--model", data("models/bad_antisym.toml")}).code, 2);
  EXPECT_EQ(run({"check", "--model", data("models/missing.toml")}).code, 2);
  EXPECT_EQ(run({"check", "--preset", "nonexistent"}).code, 2);
  EXPECT_EQ(run({"check"}).code, 2);
  EXPECT_EQ(run({"check", "--preset", "heisenberg", "--model", data("models/heisenberg.toml")}).code, 2);
  EXPECT_EQ(run({"check", "--preset", "heisenberg", "--kappa", "2"}).code, 2);
  EXPECT_EQ(run({"check", "--preset", "heisenberg", "--epsilon", "-1"}).code, 2);
  EXPECT_EQ(run({"check", "--preset", "heisenberg", "--perturb", "Q=1"}).code, 2);
  EXPECT_EQ(run({"check", "--preset", "heisenberg", "--perturb", "T[1,3,1]=1"}).code, 2);
  EXPECT_EQ(run({"levy", "--lambda", "4"}).code, 2);
  EXPECT_EQ(run({"levy", "--grid", "100"}).code, 2);
  EXPECT_EQ(run({"ms", "--complex", data("complexes/missing.txt")}).code, 2);
  EXPECT_EQ(run({"ms", "--complex", data("complexes/torus.txt"), "--t", "1,x"}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({}).code, 2);
}

TEST(Cli, ComputationErrorsExitOne) {
  // Flat torsion: the quadrature for J cannot converge.
  const auto r = run({"jconst", "--preset", "flat-torus-product"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("achieved"), std::string::npos);
  // Symmetry failure in the Euler integrand.
  EXPECT_EQ(run({"euler", "--preset", "htype-m2", "--epsilon", "3"}).code, 1);
  // Too few samples for the supertrace estimator.
  EXPECT_EQ(run({"euler", "--preset", "heisenberg", "--mode", "mc", "--samples", "10"}).code, 1);
}

TEST(Cli, EulerParityAndFlat) {
  const auto h = run({"euler", "--preset", "heisenberg"});
  ASSERT_EQ(h.code, 0) << h.err;
  EXPECT_EQ(h.json()["closed_form"]["chi_rounded"], 0);
  EXPECT_TRUE(h.json()["closed_form"]["parity_shortcut"].get<bool>());
  const auto f = run({"euler", "--preset", "flat-torus-product"});
  ASSERT_EQ(f.code, 0) << f.err;
  EXPECT_EQ(f.json()["closed_form"]["chi_raw"].get<double>(), 0.0);
}

TEST(Cli, EulerBothReportsZScore) {
  const auto r = run({"euler", "--preset", "htype-m2", "--mode", "both", "--samples", "2000", "--grid", "64", "--seed", "7"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = r.json();
  EXPECT_LT(std::abs(j["z_score"].get<double>()), 4.0);
  EXPECT_EQ(j["samples"], 2000);
  EXPECT_GT(j["stderr"].get<double>(), 0.0);
}

TEST(Cli, JConstHeisenberg) {
  const auto r = run({"jconst", "--preset", "heisenberg"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(r.json()["value"].get<double>(), 0.25, 1e-8);
}

TEST(Cli, LevyReportsStderr) {
  const auto r = run({"levy", "--lambda", "1", "--samples", "20000", "--grid", "64", "--seed", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = r.json();
  EXPECT_NEAR(j["closed_form"].get<double>(), 1.0 / std::sin(1.0), 1e-12);
  EXPECT_NEAR(j["estimate"].get<double>(), j["closed_form"].get<double>(), 4.0 * j["stderr"].get<double>());
}

TEST(Cli, MsTriangleBoundary) {
  const auto r = run({"ms", "--complex", data("complexes/triangle_boundary.txt"), "--t", "0.1,1,10"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = r.json();
  ASSERT_EQ(j["rows"].size(), 3u);
  for (const auto& row : j["rows"]) EXPECT_NEAR(row["supertrace"].get<double>(), 0.0, 1e-10);
  EXPECT_EQ(j["chi"], 0);
  EXPECT_TRUE(j["pairing_passes"].get<bool>());
}

TEST(Cli, CsvHasOneRowPerTime) {
  const auto r = run({"ms", "--complex", data("complexes/torus.txt"), "--t", "0.5,2", "--format", "csv"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(r.out);
  std::string header, line;
  std::getline(in, header);
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 2);
  EXPECT_NE(header.find("supertrace"), std::string::npos);
  EXPECT_NE(header.find("seed"), std::string::npos);
}

TEST(Cli, OutputFile) {
  const auto path = std::filesystem::temp_directory_path() / "hcgb_cli_test_out.json";
  const auto r = run({"jconst", "--preset", "heisenberg", "--output", path.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.out.empty());
  std::ifstream f(path);
  const auto j = nlohmann::json::parse(f);
  EXPECT_NEAR(j["value"].get<double>(), 0.25, 1e-8);
  std::filesystem::remove(path);
}

TEST(Cli, DeterministicAcrossWorkers) {
  const std::vector<std::vector<std::string>> commands = {
      {"levy", "--samples", "3000", "--grid", "32", "--seed", "5"},
      {"euler", "--preset", "htype-m2", "--mode", "mc", "--samples", "1000", "--grid", "16", "--seed", "5"},
      {"density", "--preset", "heisenberg", "--samples", "10000", "--grid", "16", "--seed", "5"},
  };
  for (auto cmd : commands) {
    auto a = cmd, b = cmd, c = cmd;
    a.insert(a.end(), {"--workers", "1"});
    b.insert(b.end(), {"--workers", "3"});
    const auto ra = run(a), rb = run(b), rc = run(c);
    ASSERT_EQ(ra.code, 0) << ra.err;
    EXPECT_EQ(without_timestamp(ra.json()).dump(), without_timestamp(rb.json()).dump()) << cmd[0];
    EXPECT_EQ(without_timestamp(ra.json()).dump(), without_timestamp(rc.json()).dump()) << cmd[0];
  }
}

TEST(Cli, WorkersFromEnvironment) {
  ::setenv("HCGB_WORKERS", "2", 1);
  const auto a = run({"levy", "--samples", "2000", "--grid", "16"});
  ::unsetenv("HCGB_WORKERS");
  const auto b = run({"levy", "--samples", "2000", "--grid", "16"});
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(without_timestamp(a.json()), without_timestamp(b.json()));
}

TEST(Cli, ModelFileMatchesPreset) {
  const auto a = run({"jconst", "--model", data("models/heisenberg.toml")});
  const auto b = run({"jconst", "--model", data("models/heisenberg.json")});
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_NEAR(a.json()["value"].get<double>(), 0.25, 1e-8);
  EXPECT_EQ(a.json()["value"], b.json()["value"]);
}

TEST(Cli, SeedRecordedEverywhere) {
  const std::string cx = data("complexes/torus.txt");
  for (const auto& args : std::vector<std::vector<std::string>>{{"check", "--preset", "heisenberg", "--seed", "9"},
                                                               {"jconst", "--preset", "heisenberg", "--seed", "9"},
                                                               {"ms", "--complex", cx, "--seed", "9"},
                                                               {"levy", "--samples", "100", "--grid", "4", "--seed", "9"}}) {
    const auto r = run(args);
    ASSERT_EQ(r.code, 0) << args[0] << ": " << r.err;
    EXPECT_EQ(r.json()["seed"], 9) << args[0];
  }
}
