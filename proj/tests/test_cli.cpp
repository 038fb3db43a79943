#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string output;
};

Result run(const std::string& args) {
  const auto log = fs::temp_directory_path() / "flightwp_cli_output.txt";
  const std::string cmd = std::string(FLIGHTWP_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  std::ifstream in(log);
  std::stringstream buf;
  buf << in.rdbuf();
  return {WEXITSTATUS(status), buf.str()};
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("flightwp_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& file) {
  std::ifstream in(file);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Path files embed the run config, whose output directory differs per run.
nlohmann::json path_file(const fs::path& file) {
  auto j = nlohmann::json::parse(slurp(file));
  j["meta"]["config"].erase("out");
  return j;
}

std::size_t count_files(const fs::path& dir) {
  std::size_t n = 0;
  for (const auto& entry : fs::directory_iterator(dir)) n += entry.is_regular_file();
  return n;
}

}  // namespace

TEST(Cli, SimulateWritesPathFilesDeterministically) {
  const auto a = fresh_dir("sim_a");
  const auto b = fresh_dir("sim_b");
  const std::string args = "simulate --regime poly --alpha 1.0 --n 100 --m 10 --seed 7 --out ";
  ASSERT_EQ(run(args + a.string()).code, 0);
  ASSERT_EQ(run(args + b.string()).code, 0);
  EXPECT_EQ(count_files(a), 10u);
  for (const auto& entry : fs::directory_iterator(a))
    EXPECT_EQ(path_file(entry.path()), path_file(b / entry.path().filename()));
  const auto j = nlohmann::json::parse(slurp(a / "path_0003.json"));
  EXPECT_EQ(j["t"].size(), 101u);
  EXPECT_EQ(j["meta"]["config"]["seed"], 7);
}

TEST(Cli, RejectsInvalidAlpha) {
  const auto r = run("simulate --regime poly --alpha 0.4 --out " + fresh_dir("bad").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("alpha > 1/2"), std::string::npos) << r.output;
}

TEST(Cli, SeedFromEnvironment) {
  const auto a = fresh_dir("env_a");
  const auto b = fresh_dir("env_b");
  ASSERT_EQ(run("simulate --regime exp --m 2 --seed 11 --out " + a.string()).code, 0);
  ASSERT_EQ(std::system(("FLIGHT_SEED=11 " + std::string(FLIGHTWP_CLI) + " simulate --regime exp --m 2 --out " +
                         b.string() + " > /dev/null")
                            .c_str()),
            0);
  EXPECT_EQ(path_file(a / "path_0001.json"), path_file(b / "path_0001.json"));
}

TEST(Cli, WassersteinSuperExponentialBounded) {
  const auto dir = fresh_dir("ws");
  const auto r = run("wasserstein --regime superexp --n 10 40 --m 20 --repeats 2 --out " + dir.string());
  ASSERT_EQ(r.code, 0) << r.output;
  const auto j = nlohmann::json::parse(slurp(dir / "convergence.json"));
  EXPECT_EQ(j["config"]["p"], 1.0);
  for (const auto& rec : j["records"]) EXPECT_LE(rec["w_p"].get<double>(), 2.0);
  EXPECT_TRUE(fs::exists(dir / "convergence.csv"));
}

TEST(Cli, BruteSolverLimitedToEightPaths) {
  const auto r = run("wasserstein --regime exp --solver brute --m 9 --out " + fresh_dir("brute").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(run("wasserstein --regime exp --solver brute --m 6 --n 10 --repeats 1 --out " +
                fresh_dir("brute_ok").string())
                .code,
            0);
}

TEST(Cli, TailsBoundedRegime) {
  const auto dir = fresh_dir("tails");
  ASSERT_EQ(run("tails --regime exp --beta 2 --R 0.5 1.25 2 --m 100 --out " + dir.string()).code, 0);
  const auto j = nlohmann::json::parse(slurp(dir / "tails.json"));
  for (const auto& cell : j["cells"])
    if (cell["R"].get<double>() > 1.0) EXPECT_EQ(cell["estimate"].get<double>(), 0.0);
}

TEST(Cli, VerifyExactLemmaHasZeroSlack) {
  const auto dir = fresh_dir("verify_l3");
  ASSERT_EQ(run("verify --only lemma3 --alpha 1 --out " + dir.string()).code, 0);
  const auto j = nlohmann::json::parse(slurp(dir / "lemma3.json"));
  EXPECT_EQ(j["slack"].get<double>(), 0.0);
  EXPECT_TRUE(j["verdict"].get<bool>());
  EXPECT_EQ(j["config"]["alpha"], 1.0);
}

TEST(Cli, VerifyDriftControlFails) {
  const auto dir = fresh_dir("verify_doob");
  EXPECT_EQ(run("verify --only doob --corrupt-drift --out " + dir.string()).code, 1);
  EXPECT_TRUE(fs::exists(dir / "doob.json"));  // written even on failure
  EXPECT_EQ(run("verify --only doob --out " + fresh_dir("verify_doob_ok").string()).code, 0);
}

TEST(Cli, VerifyAllWritesOneReportPerCheck) {
  const auto dir = fresh_dir("verify_all");
  const auto r = run("verify --replicas 4000 --out " + dir.string());
  EXPECT_EQ(count_files(dir), 11u) << r.output;
}

TEST(Cli, ConfigFileFlagsWinAndUnknownKeysRejected) {
  const auto dir = fresh_dir("config");
  fs::create_directories(dir);
  {
    std::ofstream cfg(dir / "run.json");
    cfg << R"({"regime": "poly", "alpha": 0.4, "m": 3, "n": 20})";
  }
  const auto out = dir / "paths";
  // The file's alpha is invalid, but the flag overrides it.
  ASSERT_EQ(run("simulate --config " + (dir / "run.json").string() + " --alpha 1.5 --out " + out.string()).code, 0);
  EXPECT_EQ(count_files(out), 3u);
  const auto j = nlohmann::json::parse(slurp(out / "path_0000.json"));
  EXPECT_EQ(j["meta"]["config"]["alpha"], 1.5);
  {
    std::ofstream cfg(dir / "bad.json");
    cfg << R"({"alpah": 1.0})";
  }
  const auto r = run("simulate --config " + (dir / "bad.json").string() + " --out " + out.string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("alpah"), std::string::npos);
}
