#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::path(::testing::TempDir()) / ("nlerg_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + NLERG_CLI_PATH + std::string(" ") + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Cli, ContinuumIsUncertified) {
  const auto dir = scratch("continuum");
  EXPECT_EQ(run("chain --kernel continuum --alpha 0.2 --lambda 0.8 -o " + dir.string()), 0);
  const auto report = slurp(dir / "report.json");
  EXPECT_NE(report.find("\"regime\": \"uncertified\""), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "trajectory.csv"));
  EXPECT_TRUE(fs::exists(dir / "resolved_config.json"));
  EXPECT_TRUE(fs::exists(dir / "metadata.json"));
}

TEST(Cli, MarkovExampleRateHasNoViolations) {
  const auto dir = scratch("markov");
  EXPECT_EQ(run("chain --kernel markov-example --steps 50 -o " + dir.string()), 0);
  const auto csv = slurp(dir / "rate.csv");
  EXPECT_EQ(csv.rfind("# nlerg-csv/1 rate\nn,measured,bound\n", 0), 0u);
  EXPECT_NE(slurp(dir / "report.json").find("\"status\": \"pass\""), std::string::npos);
}

TEST(Cli, MissingRequiredFieldIsUsageError) {
  const auto dir = scratch("missing");
  EXPECT_EQ(run("chain -o " + dir.string()), 2);
  EXPECT_FALSE(fs::exists(dir / "report.json"));
}

TEST(Cli, Counterexamples) {
  const auto dir = scratch("cx");
  EXPECT_EQ(run("counterexample oscillation --gamma 0.4 --a 0.25 -o " + dir.string()), 0);
  EXPECT_EQ(run("counterexample no-invariant --alpha 0.3 --lambda 0.6 --n-max 50 -o " + dir.string()), 0);
  EXPECT_EQ(run("counterexample continuum --alpha 0.5 --lambda 0.4 -o " + dir.string()), 2);
  EXPECT_EQ(run("counterexample oscillation --gamma 0.4 --a 0.1 -o " + dir.string()), 2);
}

TEST(Cli, BoundaryLambdaIsFalsification) {
  const auto dir = scratch("boundary");
  EXPECT_EQ(run("counterexample no-invariant --alpha 0.2 --lambda 1 -o " + dir.string()), 1);
  EXPECT_NE(slurp(dir / "report.json").find("\"status\": \"fail\""), std::string::npos);
}

TEST(Cli, BadNumbersAndUnknownFlags) {
  const auto dir = scratch("bad");
  EXPECT_EQ(run("smve simulate --h 0 -o " + dir.string()), 2);
  EXPECT_EQ(run("smve simulate --n abc -o " + dir.string()), 2);
  EXPECT_EQ(run("smve simulate --init nonsense -o " + dir.string()), 2);
  EXPECT_EQ(run("smve decay --bogus 1 -o " + dir.string()), 2);
  EXPECT_EQ(run("nonexistent"), 2);
}

TEST(Cli, SmveDecayOu) {
  const auto dir = scratch("decay");
  EXPECT_EQ(run("smve decay --preset ou --epsilon 0 --n 2000 --t 10 -o " + dir.string()), 0);
  const auto report = slurp(dir / "report.json");
  EXPECT_NE(report.find("\"theta\""), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "tv.csv"));
  EXPECT_TRUE(fs::exists(dir / "decay.csv"));
}

TEST(Cli, ConfigFileWithFlagOverride) {
  const auto dir = scratch("config");
  const auto cfg = dir / "run.json";
  std::ofstream(cfg) << R"J({"command": "counterexample oscillation", "gamma": 0.4, "a": 0.9})J";
  EXPECT_EQ(run("counterexample oscillation --config " + cfg.string() + " -o " + (dir / "a").string()), 2);
  EXPECT_EQ(run("counterexample oscillation --config " + cfg.string() + " --a 0.25 -o " + (dir / "b").string()), 0);
  const auto resolved = slurp(dir / "b" / "resolved_config.json");
  EXPECT_NE(resolved.find("\"a\": 0.25"), std::string::npos);
  EXPECT_NE(resolved.find("\"gamma\": 0.40000000000000002"), std::string::npos);
  EXPECT_NE(resolved.find("\"grid_resolution\": 50"), std::string::npos);
}

TEST(Cli, ConfigErrorsNameTheField) {
  const auto dir = scratch("config_bad");
  std::ofstream(dir / "unknown.json") << R"J({"gama": 0.4})J";
  std::ofstream(dir / "typed.json") << R"J({"gamma": "big"})J";
  std::ofstream(dir / "broken.json") << "{";
  std::ofstream(dir / "wrong.json") << R"J({"command": "chain"})J";
  for (const char* f : {"unknown.json", "typed.json", "broken.json", "wrong.json"}) {
    const auto err = dir / (std::string(f) + ".err");
    const std::string cmd = std::string(NLERG_CLI_PATH) + " counterexample oscillation --config " +
                            (dir / f).string() + " -o " + (dir / "out").string() + " 2> " + err.string();
    const int status = std::system(cmd.c_str());
    EXPECT_EQ(WEXITSTATUS(status), 2) << f;
    EXPECT_NE(slurp(err).find("error:"), std::string::npos) << f;
  }
  EXPECT_NE(slurp(dir / "unknown.json.err").find("gama"), std::string::npos);
  EXPECT_NE(slurp(dir / "typed.json.err").find("gamma"), std::string::npos);
}

TEST(Cli, OutputDirectoryFromEnvironment) {
  const auto dir = scratch("env");
  EXPECT_EQ(run("counterexample no-invariant", "NLERG_OUTPUT_DIR=" + (dir / "envout").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "envout" / "report.json"));
}

TEST(Cli, RerunsAreByteIdentical) {
  const auto dir = scratch("rerun");
  const std::string base = "smve girsanov-check --n 500 --calibration-pairs 3";
  ASSERT_EQ(run(base + " --workers 2 -o " + (dir / "a").string()), 0);
  ASSERT_EQ(run(base + " --workers 1 -o " + (dir / "b").string()), 0);
  ASSERT_EQ(run(base + " --workers 2 -o " + (dir / "c").string()), 0);
  for (const char* f : {"report.json", "girsanov.csv"}) {
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "c" / f)) << f;
  }
  EXPECT_EQ(slurp(dir / "a" / "resolved_config.json"), slurp(dir / "c" / "resolved_config.json"));
  EXPECT_NE(slurp(dir / "a" / "metadata.json").find("started_utc"), std::string::npos);
}

TEST(Cli, HmDefaultChainCertifies) {
  const auto dir = scratch("hm");
  EXPECT_EQ(run("hm -o " + dir.string()), 0);
  EXPECT_NE(slurp(dir / "report.json").find("\"sublevel_states\": [1, 2, 3, 4, 5]"), std::string::npos);
  EXPECT_EQ(run("hm --gamma 0.5 --K 0.5 -o " + dir.string()), 2);
}

TEST(Cli, LyapunovAndLocalAlpha) {
  const auto dir = scratch("lyap");
  EXPECT_EQ(run("smve lyapunov --n 500 -o " + dir.string()), 0);
  EXPECT_TRUE(fs::exists(dir / "lyapunov.csv"));
  EXPECT_EQ(run("smve local-alpha --preset ou --n-sims 10000 -o " + dir.string()), 0);
  EXPECT_NE(slurp(dir / "report.json").find("ou_exact_alpha_worst_pair"), std::string::npos);
}
