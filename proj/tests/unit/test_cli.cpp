#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("r1fm_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Runs the CLI with `args`; stdout and stderr go to files in the temp dir.
  int run(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " " + std::string(R1FM_CLI_PATH) + " " + args + " >" +
                            (dir_ / "stdout").string() + " 2>" + (dir_ / "stderr").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string slurp(const std::string& name) const {
    std::ifstream is(dir_ / name, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
  }

  void write(const std::string& name, const std::string& text) const {
    std::ofstream(dir_ / name) << text;
  }

  fs::path dir_;
};

int count_lines(const std::string& s) {
  return static_cast<int>(std::count(s.begin(), s.end(), '\n'));
}

}  // namespace

TEST_F(Cli, RecoverWritesTraceAndMetadata) {
  ASSERT_EQ(run("recover --n 8 --m 60 --iters 20 --out " + path("t.csv")), 0) << slurp("stderr");
  const std::string csv = slurp("t.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,loss,dist,incoherence,step");
  EXPECT_EQ(count_lines(csv), 22);
  const std::string meta = slurp("t.csv.json");
  EXPECT_NE(meta.find("\"generator_id\""), std::string::npos);
  EXPECT_NE(meta.find("\"library_version\""), std::string::npos);
  EXPECT_NE(meta.find("\"base_seed\": 1"), std::string::npos);
  EXPECT_EQ(meta.find("wall_seconds"), std::string::npos);
}

TEST_F(Cli, InvalidArgumentsExitTwo) {
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("recover --n 0"), 2);
  EXPECT_EQ(run("recover --no-such-flag 1"), 2);
  EXPECT_EQ(run("recover --step-rule bogus"), 2);
  EXPECT_EQ(run("recover --step-rule fixed --n 8 --m 40"), 2);  // fixed needs --mu
  EXPECT_EQ(run("recover --n 4 --r 5 --m 40"), 2);
  EXPECT_EQ(run("loo --n 8 --m 20 --subset 21"), 2);
  EXPECT_EQ(run("phase --n 8 --r 1 --trials 1"), 2);  // no m and no ratio
  EXPECT_EQ(run("recover --load-ensemble " + path("missing.bin")), 2);
  EXPECT_EQ(run("recover --config " + path("missing.json")), 2);
}

TEST_F(Cli, NumericalFailureExitsThree) {
  EXPECT_EQ(run("recover --n 8 --m 40 --iters 200 --step-rule fixed --mu 1e6 --out " +
                path("x.csv")),
            3);
  EXPECT_EQ(run("loo --n 8 --m 40 --iters 200 --subset 2 --step-rule fixed --mu 1e6 --out " +
                path("l.csv")),
            3);
}

TEST_F(Cli, OutputsAreByteIdenticalAcrossRunsAndThreadCounts) {
  const std::string phase =
      "phase --n 10 --r 1 --m-ratio 2 5 --trials 4 --iters 200 --seed 3 --out ";
  ASSERT_EQ(run(phase + path("p1.csv"), "R1FM_THREADS=1"), 0) << slurp("stderr");
  ASSERT_EQ(run(phase + path("p8.csv"), "R1FM_THREADS=8"), 0);
  EXPECT_EQ(slurp("p1.csv"), slurp("p8.csv"));
  EXPECT_EQ(slurp("p1.csv.json"), slurp("p8.csv.json"));

  ASSERT_EQ(run("converge --n 8 --m 60 --iters 30"), 0);
  const std::string first = slurp("stdout");
  ASSERT_EQ(run("converge --n 8 --m 60 --iters 30"), 0);
  EXPECT_EQ(slurp("stdout"), first);
  EXPECT_EQ(count_lines(first), 32);
}

TEST_F(Cli, JsonConfigMirrorsFlagsAndCliWins) {
  write("cfg.json", R"({"n": 8, "m": 60, "iters": 10, "seed": 5})");
  ASSERT_EQ(run("converge --config " + path("cfg.json") + " --out " + path("a.csv")), 0)
      << slurp("stderr");
  ASSERT_EQ(run("converge --n 8 --m 60 --iters 10 --seed 5 --out " + path("b.csv")), 0);
  EXPECT_EQ(slurp("a.csv"), slurp("b.csv"));
  EXPECT_EQ(count_lines(slurp("a.csv")), 12);

  ASSERT_EQ(run("converge --config " + path("cfg.json") + " --iters 4 --out " + path("c.csv")),
            0);
  EXPECT_EQ(count_lines(slurp("c.csv")), 6);

  // Sections keyed by subcommand name apply to that subcommand only.
  write("nested.json", R"({"converge": {"n": 8, "m": 60, "iters": 3, "trace_every": 1}})");
  ASSERT_EQ(run("converge --config " + path("nested.json") + " --out " + path("d.csv")), 0)
      << slurp("stderr");
  EXPECT_EQ(count_lines(slurp("d.csv")), 5);

  write("bad.json", R"({"n": "eight"})");
  EXPECT_EQ(run("converge --config " + path("bad.json")), 2);
}

TEST_F(Cli, EnsembleFilesRoundTripIntoBlindRecovery) {
  ASSERT_EQ(run("recover --n 8 --m 80 --iters 5 --save-ensemble " + path("e.bin") +
                " --save-measurements " + path("y.bin") + " --out " + path("a.csv")),
            0)
      << slurp("stderr");
  ASSERT_EQ(run("recover --rank 1 --iters 3000 --load-ensemble " + path("e.bin") +
                " --load-measurements " + path("y.bin") + " --out " + path("b.csv")),
            0)
      << slurp("stderr");
  const std::string meta = slurp("b.csv.json");
  EXPECT_NE(meta.find("\"success\": true"), std::string::npos) << meta;
  // Blind runs have no distance column values.
  const std::string csv = slurp("b.csv");
  const auto second = csv.substr(csv.find('\n') + 1);
  EXPECT_NE(second.find(",,,"), std::string::npos) << second.substr(0, 80);

  ASSERT_EQ(run("recover --n 8 --m 81 --iters 5 --save-ensemble " + path("e2.bin") +
                " --out " + path("z.csv")),
            0);
  EXPECT_EQ(run("recover --load-ensemble " + path("e2.bin") + " --load-measurements " +
                path("y.bin")),
            2);
}

TEST_F(Cli, SketchAndLooAndSelftest) {
  ASSERT_EQ(run("sketch --stream 50 --iters 20 --out " + path("s.json")), 0) << slurp("stderr");
  EXPECT_NE(slurp("s.json").find("insufficient stream"), std::string::npos);
  ASSERT_EQ(run("loo --n 8 --m 60 --iters 10 --subset 3 --out " + path("l.csv")), 0)
      << slurp("stderr");
  EXPECT_EQ(slurp("l.csv").substr(0, 32), "t,max_proximity,dist,incoherence");
  ASSERT_EQ(run("selftest"), 0);
  const std::string out = slurp("stdout");
  EXPECT_EQ(out.find("FAIL"), std::string::npos);
  EXPECT_GE(count_lines(out), 6);
}
