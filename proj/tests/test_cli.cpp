#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "robust_sp/io.hpp"

namespace fs = std::filesystem;
using robust_sp::io::json;

namespace {

const std::string kCli = ROBUST_SP_CLI;
const std::string kConfigs = ROBUST_SP_CONFIGS;

int run(const std::string& args) {
  const int status = std::system((kCli + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("robust_sp_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  void write(const std::string& name, const std::string& text) const { std::ofstream(dir_ / name) << text; }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, SimulateThenFitRecoversTheta) {
  ASSERT_EQ(run("simulate --config " + kConfigs + "/poisson_table41.json --seed 4 --out " + path("sim")), 0);
  ASSERT_TRUE(fs::exists(path("sim/path.csv")));
  ASSERT_EQ(run("fit --config " + kConfigs + "/poisson_table41.json --data " + path("sim/path.csv") +
                " --alpha 0.4 --out " + path("fit")),
            0);
  const json fit = json::parse(slurp(path("fit/fit.json")));
  EXPECT_TRUE(fit.at("converged").get<bool>());
  EXPECT_NEAR(fit.at("theta_hat")[0].get<double>(), 9.0, 4.0);
}

TEST_F(CliTest, AlphaPathFitOnAr1) {
  ASSERT_EQ(run("simulate --config " + kConfigs + "/ar1_table43.json --seed 9 --delta 0 --out " + path("sim")), 0);
  ASSERT_EQ(run("fit --config " + kConfigs + "/ar1_table43.json --data " + path("sim/path.csv") +
                " --alphas 0,0.4 --out " + path("fit")),
            0);
  const json fits = json::parse(slurp(path("fit/fit.json")));
  ASSERT_EQ(fits.size(), 2U);
  EXPECT_NEAR(fits[1].at("theta_hat")[0].get<double>(), 0.7, 0.35);
}

TEST_F(CliTest, StudyCsvIsByteIdenticalAcrossThreadCounts) {
  const std::string base = "study --config " + kConfigs + "/poisson_table41.json --replications 6 --alphas 0,0.4 --seed 5";
  ASSERT_EQ(run(base + " --threads 1 --out " + path("t1")), 0);
  ASSERT_EQ(run(base + " --threads 3 --out " + path("t3")), 0);
  const std::string a = slurp(path("t1/study.csv"));
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(path("t3/study.csv")));
  EXPECT_EQ(slurp(path("t1/replicates.csv")), slurp(path("t3/replicates.csv")));
  EXPECT_TRUE(fs::exists(path("t1/box_delta0_theta1.svg")));
}

TEST_F(CliTest, InfluenceVarianceAndMotivate) {
  ASSERT_EQ(run("influence --config " + kConfigs + "/brownian_if.json --alphas 0,0.5 --out " + path("if")), 0);
  EXPECT_TRUE(fs::exists(path("if/influence.csv")));
  EXPECT_TRUE(fs::exists(path("if/influence_theta1.svg")));
  ASSERT_EQ(run("variance --config " + kConfigs + "/brownian_variance.json --alphas 0,0.4 --out " + path("var")), 0);
  const json v = json::parse(slurp(path("var/variance.json")));
  ASSERT_EQ(v.size(), 2U);
  EXPECT_EQ(v[1].at("psi_n").size(), 2U);
  ASSERT_EQ(run("motivate --config " + kConfigs + "/motivate.json --replications 4 --out " + path("mot")), 0);
  EXPECT_TRUE(fs::exists(path("mot/motivate.csv")));
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("study --bogus"), 1);
  write("bad.json", "{ not json");
  EXPECT_EQ(run("study --config " + path("bad.json")), 1);
  write("neg.json", R"({"model":{"family":"poisson"},"theta_true":9,"grid":{"n":5},"replications":-1})");
  EXPECT_EQ(run("study --config " + path("neg.json")), 1);
  write("huge.json", R"({"model":{"family":"poisson"},"theta":1e13,"grid":{"n":5}})");
  EXPECT_EQ(run("variance --config " + path("huge.json") + " --alpha 0.5"), 2);
}
