// Drives the installed binary as a subprocess over the committed
// fixtures: exit codes, artifact bytes, determinism, config precedence.

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  EXPECT_TRUE(in.is_open()) << path;
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const ::testing::TestInfo* info = ::testing::UnitTest::GetInstance()->current_test_info();
    scratch_ = fs::path(::testing::TempDir()) / "ridecast_cli" /
               (std::string(info->test_suite_name()) + "." + info->name());
    fs::remove_all(scratch_);
    fs::create_directories(scratch_);
  }

  RunResult run(const std::string& args) {
    const fs::path out_file = scratch_ / "stdout.txt";
    const fs::path err_file = scratch_ / "stderr.txt";
    std::string cmd = std::string(RIDECAST_CLI_PATH) + " " + args + " > " + out_file.string() +
                      " 2> " + err_file.string();
    int rc = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    r.out = slurp(out_file);
    r.err = slurp(err_file);
    return r;
  }

  fs::path write_config(const std::string& name, const std::string& body) {
    fs::path p = scratch_ / name;
    std::ofstream out(p);
    out << body;
    return p;
  }

  std::string golden(const std::string& name) {
    return std::string(RIDECAST_FIXTURE_DIR) + "/golden/" + name;
  }

  std::string demo(const std::string& name) {
    return std::string(RIDECAST_FIXTURE_DIR) + "/demo/" + name;
  }

  // Ingest config over one committed fixture set ("golden" or "demo").
  std::string ingest_config(const std::string& set) {
    const std::string dir = std::string(RIDECAST_FIXTURE_DIR) + "/" + set + "/";
    return "ingest.trips = " + dir + "trips.csv\n"
           "ingest.weather = " + dir + "weather.csv\n"
           "ingest.holidays = " + dir + "holidays.txt\n"
           "ingest.period = pre_pandemic\n";
  }

  fs::path scratch_;
};

TEST_F(CliTest, HelpAndVersionExitZero) {
  EXPECT_EQ(run("--help").exit_code, 0);
  RunResult version = run("--version");
  EXPECT_EQ(version.exit_code, 0);
  EXPECT_NE(version.out.find("ridecast"), std::string::npos);
}

TEST_F(CliTest, NoSubcommandIsAUsageError) {
  RunResult r = run("");
  EXPECT_EQ(r.exit_code, 1);
}

TEST_F(CliTest, IngestReproducesGoldenArtifactsByteForByte) {
  fs::path cfg = write_config("ingest.conf", ingest_config("golden"));
  fs::path out = scratch_ / "out";
  RunResult r = run("ingest -c " + cfg.string() + " -o " + out.string());
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(slurp(out / "matrix.csv"), slurp(golden("expected_matrix.csv")));
  EXPECT_EQ(slurp(out / "station_counts.csv"), slurp(golden("expected_station_counts.csv")));

  auto manifest = nlohmann::json::parse(slurp(out / "ingest_manifest.json"));
  EXPECT_EQ(manifest.at("period"), "pre_pandemic");
  EXPECT_EQ(manifest.at("reject_reasons").at("bad_gender"), 1);
  EXPECT_EQ(manifest.at("trips_out_of_period"), 1);
  EXPECT_EQ(manifest.at("trips_accepted"), 19);
  EXPECT_EQ(manifest.at("hours"), 4);
}

TEST_F(CliTest, IngestRunsAreByteIdentical) {
  fs::path cfg = write_config("ingest.conf", ingest_config("demo"));
  fs::path a = scratch_ / "a", b = scratch_ / "b";
  ASSERT_EQ(run("ingest -c " + cfg.string() + " -o " + a.string()).exit_code, 0);
  ASSERT_EQ(run("ingest -c " + cfg.string() + " -o " + b.string()).exit_code, 0);
  for (const char* name :
       {"matrix.csv", "incomplete_hours.csv", "station_counts.csv", "ingest_manifest.json"}) {
    EXPECT_EQ(slurp(a / name), slurp(b / name)) << name;
  }
}

TEST_F(CliTest, MissingTripInputExitsTwo) {
  fs::path cfg = write_config("ingest.conf",
                              "ingest.trips = /nonexistent/trips-*.csv\n"
                              "ingest.weather = " + demo("weather.csv") + "\n");
  RunResult r = run("ingest -c " + cfg.string() + " -o " + (scratch_ / "out").string());
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.err.find("error:"), std::string::npos);
  EXPECT_NE(r.err.find("/nonexistent"), std::string::npos);
}

TEST_F(CliTest, MissingRequiredKeyExitsOne) {
  fs::path cfg = write_config("ingest.conf", "ingest.weather = " + demo("weather.csv") + "\n");
  RunResult r = run("ingest -c " + cfg.string() + " -o " + (scratch_ / "out").string());
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.err.find("ingest.trips"), std::string::npos);
}

TEST_F(CliTest, UnknownConfigKeyNamesFileAndLine) {
  fs::path cfg = write_config("bad.conf", "# comment\ningest.tripz = x\n");
  RunResult r = run("ingest -c " + cfg.string());
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.err.find("bad.conf:2"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("ingest.tripz"), std::string::npos);
}

TEST_F(CliTest, BadPeriodValueExitsOne) {
  fs::path cfg = write_config("ingest.conf", ingest_config("demo"));
  RunResult r = run("ingest -c " + cfg.string() + " -o " + (scratch_ / "out").string() +
                    " --set ingest.period=interbellum");
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.err.find("period"), std::string::npos);
}

// Full pipeline on the demo fixture, then spot-check the artifacts and
// that --set wins over the config file.
TEST_F(CliTest, PipelineIngestDescribeTrainExplain) {
  fs::path cfg = write_config("run.conf", ingest_config("demo"));
  fs::path out = scratch_ / "out";
  ASSERT_EQ(run("ingest -c " + cfg.string() + " -o " + out.string()).exit_code, 0);

  const std::string matrix = (out / "matrix.csv").string();
  fs::path run_cfg = write_config("model.conf",
                                  "matrix = " + matrix + "\n"
                                  "model = " + (out / "model.json").string() + "\n"
                                  "train.num_rounds = 40\n"
                                  "train.eta = 0.1\n"
                                  "train.max_depth = 3\n"
                                  "train.early_stopping_patience = 0\n");

  RunResult describe = run("describe -c " + run_cfg.string() + " -o " + out.string());
  ASSERT_EQ(describe.exit_code, 0) << describe.err;
  EXPECT_TRUE(fs::exists(out / "stats.csv"));

  // --set beats the file: 8 rounds, not 40.
  RunResult train = run("train -c " + run_cfg.string() + " -o " + out.string() +
                        " --set train.num_rounds=8");
  ASSERT_EQ(train.exit_code, 0) << train.err;
  auto metrics = nlohmann::json::parse(slurp(out / "metrics.json"));
  EXPECT_EQ(metrics.at("config").at("num_rounds"), 8);
  EXPECT_NE(train.out.find("R^2"), std::string::npos);

  RunResult explain = run("explain -c " + run_cfg.string() + " -o " + out.string() +
                          " --force-count 2 --dependence-top 3");
  ASSERT_EQ(explain.exit_code, 0) << explain.err;
  EXPECT_TRUE(fs::exists(out / "shap_summary.csv"));
  EXPECT_TRUE(fs::exists(out / "shap_importance.csv"));

  // Force records satisfy local accuracy on the margin scale.
  std::size_t force_files = 0;
  for (const auto& entry : fs::directory_iterator(out / "force")) {
    auto doc = nlohmann::json::parse(slurp(entry.path()));
    double total = doc.at("base_value").get<double>();
    for (const auto& c : doc.at("contributions")) total += c.at("shap").get<double>();
    EXPECT_NEAR(total, doc.at("margin").get<double>(), 1e-9);
    ++force_files;
  }
  EXPECT_EQ(force_files, 2u);
}

TEST_F(CliTest, ExplainWithoutModelExitsTwo) {
  fs::path cfg = write_config("run.conf",
                              "matrix = " + golden("expected_matrix.csv") + "\n"
                              "model = " + (scratch_ / "absent.json").string() + "\n");
  RunResult r = run("explain -c " + cfg.string() + " -o " + (scratch_ / "out").string());
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.err.find("not found"), std::string::npos);
}

TEST_F(CliTest, TrainOnTinyMatrixFailsValidation) {
  // 4 rows is below the 10-row minimum for the train/test split.
  fs::path cfg = write_config("run.conf",
                              "matrix = " + golden("expected_matrix.csv") + "\n"
                              "model = " + (scratch_ / "model.json").string() + "\n");
  RunResult r = run("train -c " + cfg.string() + " -o " + (scratch_ / "out").string());
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.err.find("10"), std::string::npos);
}

}  // namespace
