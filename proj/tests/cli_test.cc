#include "cli.h"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace mprf::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const std::string kData = MPRF_DATA_DIR;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("mprf_cli_" + std::string(info->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string Dir(const std::string& sub) const { return (dir_ / sub).string(); }

  int Run(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    return RunCli(args, out_, err_);
  }

  static std::string Slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    EXPECT_TRUE(in) << path;
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }
  static json Load(const std::string& path) { return json::parse(Slurp(path)); }

  static std::vector<std::vector<double>> Rows(const std::string& csv) {
    std::istringstream in(Slurp(csv));
    std::string line;
    std::getline(in, line);
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
      std::vector<double> row;
      std::istringstream cells(line);
      std::string cell;
      while (std::getline(cells, cell, ',')) row.push_back(std::stod(cell));
      rows.push_back(row);
    }
    return rows;
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

TEST_F(CliTest, SampleRunsAreByteIdentical) {
  for (const char* sub : {"a", "b"}) {
    ASSERT_EQ(Run({"--seed", "7", "--out-dir", Dir(sub), "sample", "bernoulli", "--count", "100"}),
              0)
        << err_.str();
  }
  EXPECT_EQ(Slurp(Dir("a/sample-bernoulli.csv")), Slurp(Dir("b/sample-bernoulli.csv")));
  EXPECT_EQ(Slurp(Dir("a/sample-bernoulli.transcript.json")),
            Slurp(Dir("b/sample-bernoulli.transcript.json")));
  json a = Load(Dir("a/sample-bernoulli.csv.json"));
  json b = Load(Dir("b/sample-bernoulli.csv.json"));
  a.erase("timing");
  b.erase("timing");
  a["config"].erase("out_dir");
  b["config"].erase("out_dir");
  EXPECT_EQ(a, b);
  EXPECT_EQ(Rows(Dir("a/sample-bernoulli.csv")).size(), 100u);
  // One bit per party per draw.
  EXPECT_EQ(a["seed_ledger"]["per_party"], (std::vector<int>{100, 100, 100}));
}

TEST_F(CliTest, SeedChangesOutput) {
  ASSERT_EQ(Run({"--seed", "7", "--out-dir", Dir("a"), "sample", "bernoulli", "--count", "100"}), 0);
  ASSERT_EQ(Run({"--seed", "8", "--out-dir", Dir("b"), "sample", "bernoulli", "--count", "100"}), 0);
  EXPECT_NE(Slurp(Dir("a/sample-bernoulli.csv")), Slurp(Dir("b/sample-bernoulli.csv")));
}

TEST_F(CliTest, ArtifactConfigRepeatsTheRun) {
  ASSERT_EQ(Run({"--seed", "11", "--parties", "4", "--out-dir", Dir("a"), "sample", "uniform",
                 "--count", "20"}),
            0)
      << err_.str();
  ASSERT_EQ(Run({"--config", Dir("a/sample-uniform.csv.json"), "--out-dir", Dir("b")}), 0)
      << err_.str();
  EXPECT_EQ(Slurp(Dir("a/sample-uniform.csv")), Slurp(Dir("b/sample-uniform.csv")));
  EXPECT_EQ(Slurp(Dir("a/sample-uniform.transcript.json")),
            Slurp(Dir("b/sample-uniform.transcript.json")));
  const json config = Load(Dir("b/sample-uniform.csv.json"))["config"];
  EXPECT_EQ(config["seed"], 11);
  EXPECT_EQ(config["engine"]["parties"], 4);
  EXPECT_EQ(config["engine"]["prime"], "170141183460469231731687303715884105727");
}

TEST_F(CliTest, FlagsOverrideConfigFile) {
  const std::string path = Dir("config.json");
  std::ofstream(path) << json{{"command", "sample"},
                              {"seed", 5},
                              {"out_dir", Dir("file")},
                              {"engine", {{"prime", "2^127-1"}}},
                              {"params", {{"which", "gaussian"}, {"count", 3}}}}
                             .dump();
  ASSERT_EQ(Run({"--config", path, "--seed", "6", "sample", "--count", "4"}), 0) << err_.str();
  const json meta = Load(Dir("file/sample-gaussian.csv.json"));
  EXPECT_EQ(meta["config"]["seed"], 6);
  EXPECT_EQ(meta["config"]["params"]["count"], 4);
  EXPECT_EQ(meta["config"]["engine"]["prime"], "170141183460469231731687303715884105727");
  EXPECT_EQ(Rows(Dir("file/sample-gaussian.csv")).size(), 4u);
}

TEST_F(CliTest, ZeroCountWritesHeaderOnly) {
  ASSERT_EQ(Run({"--out-dir", Dir("o"), "sample", "gaussian", "--count", "0"}), 0) << err_.str();
  EXPECT_EQ(Slurp(Dir("o/sample-gaussian.csv")), "value\n");
  ASSERT_EQ(Run({"--out-dir", Dir("o"), "sample", "polar", "--count", "0", "--dim", "3"}), 0);
  EXPECT_EQ(Slurp(Dir("o/sample-polar.csv")), "x1,x2,x3\n");
}

TEST_F(CliTest, UniformSamplePassesGof) {
  ASSERT_EQ(Run({"--seed", "3", "--out-dir", Dir("o"), "sample", "uniform", "--count", "5000"}), 0)
      << err_.str();
  ASSERT_EQ(Run({"--out-dir", Dir("o"), "test", "gof", "--input", Dir("o/sample-uniform.csv")}), 0)
      << out_.str() << err_.str();
  const json report = Load(Dir("o/test-gof.json"));
  EXPECT_EQ(report["test"], "ks");
  EXPECT_TRUE(report["pass"].get<bool>());
  // Against the wrong law the suite fails with the statistical exit code.
  EXPECT_EQ(Run({"--out-dir", Dir("o"), "test", "gof", "--input", Dir("o/sample-uniform.csv"),
                 "--dist", "exponential"}),
            3);
}

TEST_F(CliTest, PolarRowsHaveExpectedRadius) {
  ASSERT_EQ(Run({"--out-dir", Dir("o"), "sample", "polar", "--count", "300", "--dim", "2",
                 "--rate", "2"}),
            0)
      << err_.str();
  double mean = 0;
  const auto rows = Rows(Dir("o/sample-polar.csv"));
  for (const auto& r : rows) mean += std::hypot(r[0], r[1]) / rows.size();
  // Gamma(2, rate 2) has mean 1; sd of the mean is sqrt(1/2) / sqrt(300).
  EXPECT_NEAR(mean, 1.0, 0.15);
}

TEST_F(CliTest, LaplaceOnScoresChargesOneEpsilon) {
  ASSERT_EQ(Run({"--out-dir", Dir("o"), "mechanism", "laplace", "--input", kData + "/scores.json",
                 "--epsilon", "1"}),
            0)
      << err_.str();
  const json meta = Load(Dir("o/mechanism-laplace.csv.json"));
  EXPECT_EQ(meta["charge"]["epsilon"], 1.0);
  EXPECT_EQ(meta["charge"]["delta"], 0.0);
  EXPECT_EQ(meta["ledger"]["charges"].size(), 1u);
  EXPECT_EQ(meta["ledger"]["total"]["epsilon"], 1.0);
  EXPECT_EQ(meta["noise"]["scale"], 1.0);
  EXPECT_EQ(Rows(Dir("o/mechanism-laplace.csv")).size(), 1u);
}

TEST_F(CliTest, ExponentialWithEqualUtilitiesIsFlat) {
  const int draws = 800;
  ASSERT_EQ(Run({"--out-dir", Dir("o"), "mechanism", "exponential", "--input",
                 kData + "/utilities_flat.json", "--count", std::to_string(draws)}),
            0)
      << err_.str();
  const json meta = Load(Dir("o/mechanism-exponential.csv.json"));
  const auto histogram = meta["histogram"].get<std::vector<double>>();
  ASSERT_EQ(histogram.size(), 4u);
  double chi2 = 0;
  for (double c : histogram) chi2 += (c - draws / 4.0) * (c - draws / 4.0) / (draws / 4.0);
  // Upper 1% point of chi-square with 3 degrees of freedom.
  EXPECT_LT(chi2, 11.345) << meta["histogram"].dump();
  EXPECT_EQ(meta["ledger"]["charges"].size(), static_cast<size_t>(draws));
}

TEST_F(CliTest, LiteralScalingHalvesTheStd) {
  const std::vector<std::string> base = {"mechanism", "gaussian", "--input",
                                         kData + "/scores.json", "--count", "2000"};
  std::vector<std::string> corrected = {"--out-dir", Dir("c")};
  corrected.insert(corrected.end(), base.begin(), base.end());
  std::vector<std::string> literal = {"--out-dir", Dir("l"), "--paper-literal"};
  literal.insert(literal.end(), base.begin(), base.end());
  ASSERT_EQ(Run(corrected), 0) << err_.str();
  ASSERT_EQ(Run(literal), 0) << err_.str();
  const json c = Load(Dir("c/mechanism-gaussian.csv.json"));
  const json l = Load(Dir("l/mechanism-gaussian.csv.json"));
  const double ratio = c["output_std"][0].get<double>() / l["output_std"][0].get<double>();
  EXPECT_NEAR(ratio, 2.0, 0.2);
  EXPECT_EQ(l["scaling"], "paper-literal");
  EXPECT_EQ(c["charge"]["delta"], 1e-5);
}

TEST_F(CliTest, SeedsSuiteHasEqualityPerParty) {
  ASSERT_EQ(Run({"--out-dir", Dir("o"), "--parties", "4", "test", "seeds", "--bits", "300"}), 0)
      << out_.str() << err_.str();
  const json report = Load(Dir("o/test-seeds.json"));
  EXPECT_EQ(report["checks"][0]["per_party"], (std::vector<int>{300, 300, 300, 300}));
  EXPECT_EQ(report["checks"][1]["per_party"], (std::vector<int>{1024, 1024, 1024, 1024}));
}

TEST_F(CliTest, AccountantSuitePasses) {
  ASSERT_EQ(Run({"--out-dir", Dir("o"), "test", "accountant", "--lists", "300"}), 0)
      << out_.str() << err_.str();
  EXPECT_EQ(Load(Dir("o/test-accountant.json"))["mismatches"], 0);
}

TEST_F(CliTest, ObliviousnessSuiteSmall) {
  ASSERT_EQ(Run({"--out-dir", Dir("o"), "test", "obliviousness", "--only", "bernoulli",
                 "--trials", "300", "--include-negative-controls", "--power-reps", "2",
                 "--power-trials", "5000"}),
            0)
      << out_.str() << err_.str();
  const json report = Load(Dir("o/test-obliviousness.json"));
  ASSERT_EQ(report["families"].size(), 1u);
  EXPECT_EQ(report["families"][0]["protocol"], "bernoulli");
  ASSERT_EQ(report["negative_controls"].size(), 3u);
  for (const json& c : report["negative_controls"]) EXPECT_EQ(c["power"], 1.0) << c.dump();
}

TEST_F(CliTest, ErmReleasesOneVector) {
  ASSERT_EQ(Run({"--out-dir", Dir("o"), "erm", "--data", kData + "/erm_toy.csv", "--manifest",
                 kData + "/erm_toy_manifest.json", "--epsilon", "2"}),
            0)
      << err_.str();
  const auto rows = Rows(Dir("o/erm.csv"));
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].size(), 2u);
  const json meta = Load(Dir("o/erm.csv.json"));
  EXPECT_EQ(meta["records"], 40);
  EXPECT_EQ(meta["clipped"], 6);
  EXPECT_EQ(meta["minimizer_opened"], false);
  EXPECT_EQ(meta["ledger"]["charges"].size(), 1u);
  EXPECT_EQ(meta["ledger"]["total"]["epsilon"], 2.0);
  EXPECT_EQ(meta["ledger"]["total"]["delta"], 0.0);
  // 2 / (k Lambda eps) with k = 40, Lambda = 0.1.
  EXPECT_DOUBLE_EQ(meta["noise_parameter"].get<double>(), 0.25);
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(Run({"--help"}), 0);
  EXPECT_EQ(Run({}), 1);
  EXPECT_EQ(Run({"--out-dir", Dir("o"), "sample", "poisson"}), 1);
  EXPECT_EQ(Run({"--out-dir", Dir("o"), "sample", "bernoulli", "--bogus"}), 1);
  EXPECT_EQ(Run({"--config", Dir("missing.json"), "sample", "bernoulli"}), 1);
  EXPECT_EQ(Run({"--threshold", "3", "--parties", "3", "--out-dir", Dir("o"), "sample",
                 "bernoulli"}),
            1);
  EXPECT_EQ(Run({"--out-dir", Dir("o"), "mechanism", "laplace", "--input", kData + "/scores.json",
                 "--epsilon", "0"}),
            1);
  EXPECT_EQ(Run({"--out-dir", Dir("o"), "test", "fuzz"}), 1);
  // Gradient descent cannot reach tolerance in time with a vanishing
  // regulariser: a runtime failure.
  EXPECT_EQ(Run({"--out-dir", Dir("o"), "erm", "--data", kData + "/erm_toy.csv", "--manifest",
                 kData + "/erm_toy_manifest.json", "--regularization", "1e-9"}),
            2)
      << err_.str();
}

}  // namespace
}  // namespace mprf::cli
