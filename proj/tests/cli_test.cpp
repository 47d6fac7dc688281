#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "coverage/io.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("coverage_cli_test_" +
            std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  struct Result {
    int code;
    std::string out;
    std::string err;
  };

  // Runs the tool with `args`, capturing stdout and stderr into files.
  Result run(const std::string& args) const {
    const auto out = dir_ / "stdout.txt";
    const auto err = dir_ / "stderr.txt";
    const std::string cmd = std::string("\"") + COVERAGE_CLI + "\" " + args + " >\"" +
                            out.string() + "\" 2>\"" + err.string() + "\"";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
  }

  fs::path write(const std::string& name, const std::string& contents) const {
    std::ofstream(dir_ / name) << contents;
    return dir_ / name;
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, Version) {
  const auto r = run("--version");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find(coverage::kVersion), std::string::npos);
}

TEST_F(Cli, EstimateSucceeds) {
  const auto input = write("counts.txt", "3\n1\n1\n2\n");
  const auto r = run("estimate --input " + input.string() + " --variance-mode f1-only");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_EQ(j["estimate"]["mode"], "f1-only");
  EXPECT_DOUBLE_EQ(j["estimate"]["q_hat"].get<double>(), 2.0 / 7.0);
}

TEST_F(Cli, AllSingletonsIsDegenerateNotAnError) {
  const auto input = write("ones.txt", "1\n1\n1\n1\n1\n");
  const auto r = run("estimate --input " + input.string());
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_EQ(j["estimate"]["q_hat"].get<double>(), 1.0);
  EXPECT_TRUE(j["estimate"]["degenerate"].get<bool>());
  EXPECT_FALSE(j["warnings"].empty());
}

TEST_F(Cli, MalformedInputExitsOneWithLineNumber) {
  const auto input = write("bad.txt", "1\n2\nthree\n");
  const auto r = run("estimate --input " + input.string());
  EXPECT_EQ(r.code, 1);
  const auto j = json::parse(r.err);
  EXPECT_NE(j["error"]["message"].get<std::string>().find(":3:"), std::string::npos);
}

TEST_F(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
  EXPECT_EQ(run("simulate --family pareto:b=3 --n abc").code, 1);
  EXPECT_EQ(run("estimate --input x --strict --declared").code, 1);
  const auto r = run("simulate --family pareto:b=3 --n 100 --replicates 0 --level 3");
  EXPECT_EQ(r.code, 1);
  const auto j = json::parse(r.err);
  EXPECT_EQ(j["error"]["kind"], "usage");
  const std::string msg = j["error"]["message"];
  EXPECT_NE(msg.find("replicates"), std::string::npos) << msg;
  EXPECT_NE(msg.find("level"), std::string::npos) << msg;
}

TEST_F(Cli, ComputationErrorsExitTwo) {
  const auto r = run("model --family pareto:b=1.001 --n 1000000");
  EXPECT_EQ(r.code, 2);
  const auto j = json::parse(r.err);
  EXPECT_EQ(j["error"]["kind"], "computation");
  EXPECT_EQ(j["error"]["version"], coverage::kVersion);
}

TEST_F(Cli, SimulateIsByteIdenticalAcrossRuns) {
  for (const char* format : {"json", "csv"}) {
    const auto a = dir_ / (std::string("a.") + format);
    const auto b = dir_ / (std::string("b.") + format);
    const std::string common =
        std::string(" --family pareto:b=3 --n 5000 --replicates 10 --seed 77 --coupled --format ") +
        format;
    ASSERT_EQ(run("simulate" + common + " --out " + a.string()).code, 0);
    ASSERT_EQ(run("simulate" + common + " --threads 3 --out " + b.string()).code, 0);
    const auto first = slurp(a);
    EXPECT_FALSE(first.empty());
    EXPECT_EQ(first, slurp(b)) << format;
  }
  const auto c = dir_ / "c.json";
  ASSERT_EQ(run("simulate --family pareto:b=3 --n 5000 --replicates 10 --seed 78 --coupled "
                "--out " + c.string()).code, 0);
  EXPECT_NE(slurp(c), slurp(dir_ / "a.json"));
}

TEST_F(Cli, ReproduceFixture) {
  const auto r = run("reproduce-example4");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_NEAR(j["f1_only"]["ci_low"].get<double>(), 0.5392, 1e-4);
  EXPECT_NEAR(j["f1_only"]["ci_high"].get<double>(), 0.5776, 1e-4);
  EXPECT_EQ(j["published"]["ci_high"].get<double>(), 0.5777);
}

TEST_F(Cli, ConditionsJson) {
  const auto r = run("conditions --family exponential:scale=1,power=0.5 --n-grid 1e3,1e4 "
                     "--epsilons 0.1,1 --thresholds mass=20,lindeberg=0.5");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_EQ(j["command"], "conditions");
  EXPECT_EQ(j["rows"].size(), 2u);
  EXPECT_TRUE(j.contains("config"));
  // E F1 + E F2 at n = 1e4 is about 150, so the mass cutoff of 20 is met.
  EXPECT_TRUE(j["heuristic_classification"]["mass_large"].get<bool>()) << j.dump();
}
