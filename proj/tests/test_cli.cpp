#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <numbers>
#include <sstream>
#include <string>

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::json;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::path(CLI_SCRATCH) / name;
  fs::remove_all(p);
  return p;
}

int run(const std::string& args) {
  const std::string cmd = std::string(CLI_BINARY) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

Json load(const fs::path& p) { return Json::parse(slurp(p)); }

TEST(Cli, SimulateSphereClosesAtTwoPi) {
  const fs::path out = scratch("sphere");
  ASSERT_EQ(run("simulate --axes 1,1,1 --t-max 7 --out " + out.string()), 0);
  const Json j = load(out / "simulate.json");
  EXPECT_EQ(j["schema_version"], 1);
  EXPECT_FALSE(j["version"].get<std::string>().empty());
  EXPECT_EQ(j["config"]["axes"], Json::array({1.0, 1.0, 1.0}));
  EXPECT_EQ(j["seeds"]["seed"], 42);
  EXPECT_TRUE(j["tolerances"].contains("rel_tol"));
  const auto& returns = j["report"]["returns_to_start"];
  ASSERT_EQ(returns.size(), 1u);
  EXPECT_NEAR(returns[0]["time"].get<double>(), 2 * std::numbers::pi, 1e-8);
  EXPECT_LT(returns[0]["angular_deviation"].get<double>(), 1e-8);
  EXPECT_TRUE(fs::exists(out / "trajectory.csv"));
}

TEST(Cli, SimulateIsByteIdenticalAcrossRuns) {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  ASSERT_EQ(run("simulate --axes 4,3,2,1 --squared --seed 42 --out " + a.string()), 0);
  ASSERT_EQ(run("simulate --axes 4,3,2,1 --squared --seed 42 --out " + b.string()), 0);
  const std::string csv = slurp(a / "trajectory.csv");
  EXPECT_GT(csv.size(), 1000u);
  EXPECT_EQ(csv, slurp(b / "trajectory.csv"));
}

TEST(Cli, UsageErrorsExitWithTwo) {
  EXPECT_EQ(run("simulate"), 2);
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("simulate --axes 1,2"), 2);
  EXPECT_EQ(run("simulate --axes 1,2,3 --bogus"), 2);
  EXPECT_EQ(run("focal-scan --axes 3,2,1 --point 5,5,5"), 2);
  EXPECT_EQ(run("suite --only nothing"), 2);
  EXPECT_EQ(run("simulate --axes 1,2,3 --rel-tol 1e-30"), 2);
  EXPECT_EQ(run("--help"), 0);
}

TEST(Cli, IntegrationFailureExitsWithThreeAndKeepsPartialOutput) {
  const fs::path out = scratch("fail");
  EXPECT_EQ(run("simulate --axes 4,3,2,1 --max-steps 10 --out " + out.string()), 3);
  const Json j = load(out / "simulate.json");
  EXPECT_EQ(j["report"]["status"], "integration-failure");
  EXPECT_GT(slurp(out / "trajectory.csv").size(), 100u);
}

TEST(Cli, FocalScanPresets) {
  const fs::path u = scratch("scan_umbilic");
  ASSERT_EQ(run("focal-scan --axes 3,2,1 --squared --point umbilic --directions 16 --out " + u.string()), 0);
  EXPECT_EQ(load(u / "focal-scan.json")["report"]["verdict"], "self-focal-evidence");

  const fs::path s = scratch("scan_special");
  ASSERT_EQ(run("focal-scan --axes 3,2,2,1 --squared --point special --directions 16 --out " + s.string()), 0);
  EXPECT_EQ(load(s / "focal-scan.json")["report"]["verdict"], "self-focal-evidence");

  const fs::path g = scratch("scan_generic");
  ASSERT_EQ(run("focal-scan --axes 4,3,2,1 --squared --directions 16 --out " + g.string()), 0);
  EXPECT_EQ(load(g / "focal-scan.json")["report"]["verdict"], "not-self-focal");
}

TEST(Cli, ConfigFileWithFlagOverride) {
  const fs::path out = scratch("config");
  fs::create_directories(out);
  {
    std::ofstream cfg(out / "run.cfg");
    cfg << "# umbilic of [3,2,1]\naxes = 3,2,1\nsquared = true\npoint = umbilic\ndirections = 12\n";
  }
  ASSERT_EQ(run("focal-scan --config " + (out / "run.cfg").string() + " --directions 10 --out " + out.string()), 0);
  const Json j = load(out / "focal-scan.json");
  EXPECT_EQ(j["config"]["directions"], 10);
  EXPECT_EQ(j["config"]["axes_are_squared"], true);
  EXPECT_EQ(j["report"]["directions"], 10);
  EXPECT_EQ(j["report"]["verdict"], "self-focal-evidence");

  {
    std::ofstream cfg(out / "bad.cfg");
    cfg << "axes = 3,2,1\nno_such_key = 1\n";
  }
  EXPECT_EQ(run("focal-scan --config " + (out / "bad.cfg").string()), 2);
}

TEST(Cli, ReturnMapNeedsCommonTime) {
  const fs::path out = scratch("return_map");
  ASSERT_EQ(run("return-map --axes 3,2,1 --squared --point umbilic --directions 64 --out " + out.string()), 0);
  const Json j = load(out / "return-map.json");
  EXPECT_EQ(j["report"]["fixed_directions"], 2);
  EXPECT_EQ(run("return-map --axes 4,3,2,1 --squared --out " + out.string()), 2);
}

TEST(Cli, RosochatiusReport) {
  const fs::path out = scratch("rosochatius");
  ASSERT_EQ(run("rosochatius --axes 3,2,1 --squared --directions 4 --j-grid 0,0.1,0.2 --out " + out.string()), 0);
  const Json j = load(out / "rosochatius.json");
  EXPECT_EQ(j["report"]["summaries"].size(), 3u);
  std::istringstream csv(slurp(out / "rosochatius.csv"));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "j,direction_index,return_time,miss_distance,halted_flag");
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, 12);
}

TEST(Cli, SuiteOnlyFiltersToLaxCriteria) {
  const fs::path out = scratch("suite");
  ASSERT_EQ(run("suite --only lax --out " + out.string()), 0);
  const Json j = load(out / "suite.json");
  std::vector<int> ids;
  for (const auto& c : j["report"]["criteria"]) {
    ids.push_back(c["id"].get<int>());
    EXPECT_EQ(c["status"], "PASS");
    EXPECT_FALSE(c["measurements"].empty());
  }
  EXPECT_EQ(ids, (std::vector<int>{4, 5, 8, 9, 10, 11}));
}

}  // namespace
