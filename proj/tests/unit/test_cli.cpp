#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "hml/io.hpp"
#include "hml/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json small_config() {
  return json::parse(R"({
    "seed": 3,
    "model": {"kind": "constant", "eps": 2.0, "eta": 1.0, "sigma": 0.0},
    "grid": {"extents": [0.25, 0.125, 0.125, 0.25], "shape": [16, 8, 8, 64],
             "periodic": [false, true, true, true]},
    "family": {"generator": "plane_wave", "k": [0, 0, 1], "mode": "long-e", "epsilons": [0.0625, 0.03125]},
    "estimator": {"window": {"type": "fitted"}, "sphere": [4, 4, 8]},
    "checks": {"localisation": {"symbol": "P"}, "support": {"case": "constant"}, "kernel": {"samples": 5}}
  })");
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("hml_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write_config(const json& j, const std::string& name = "config.json") {
    const fs::path p = dir_ / name;
    hml::write_text(p, j.dump(2));
    return p;
  }

  // Runs the binary; stdout and stderr go to a log file in the test directory.
  int run(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " \"" HML_BINARY "\" " + args + " > \"" + (dir_ / "log.txt").string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string log() const { return hml::read_text(dir_ / "log.txt"); }
  std::string out(const std::string& sub) const { return "--out \"" + (dir_ / sub).string() + "\""; }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, RunPassesAndWritesArtifacts) {
  const fs::path cfg = write_config(small_config());
  ASSERT_EQ(run("run --config " + cfg.string() + " " + out("o")), 0) << log();
  for (const char* f : {"manifest.json", "synthesis.json", "estimate.json", "estimate.csv", "verify.json",
                        "transport.json", "summary.txt", "summary.json", "summary.csv", "family/family.json"})
    EXPECT_TRUE(fs::exists(dir_ / "o" / f)) << f;
  const json m = hml::read_json(dir_ / "o" / "manifest.json");
  EXPECT_EQ(m["exit_code"], 0);
  EXPECT_EQ(m["seed"], 3);
  EXPECT_EQ(m["inputs"]["config_hash"].get<std::string>().size(), 16u);
  EXPECT_NE(log().find("PASS verify.localisation"), std::string::npos);
}

TEST_F(Cli, EmptyChecksPass) {
  json j = small_config();
  j["checks"] = json::object();
  ASSERT_EQ(run("run --config " + write_config(j).string() + " " + out("o")), 0) << log();
}

TEST_F(Cli, NegativeControlFails) {
  EXPECT_EQ(run("run --config " HML_CONFIG_DIR "/negative_control.json " + out("o")), 2) << log();
  EXPECT_NE(log().find("FAIL verify.localisation"), std::string::npos);
  EXPECT_EQ(hml::read_json(dir_ / "o" / "manifest.json")["exit_code"], 2);
}

TEST_F(Cli, StagesMatchRun) {
  const std::string cfg = write_config(small_config()).string();
  ASSERT_EQ(run("synthesize --config " + cfg + " " + out("a")), 0) << log();
  ASSERT_EQ(run("estimate --config " + cfg + " " + out("a")), 0) << log();
  ASSERT_EQ(run("run --config " + cfg + " " + out("b")), 0) << log();
  for (const char* f : {"family/family.json", "family/fields_0.bin", "family/fields_1.bin", "estimate.json",
                        "estimate.csv", "synthesis.json"})
    EXPECT_EQ(hml::read_text(dir_ / "a" / f), hml::read_text(dir_ / "b" / f)) << f;
}

TEST_F(Cli, JobsDoNotChangeResults) {
  const std::string cfg = write_config(small_config()).string();
  ASSERT_EQ(run("run --config " + cfg + " " + out("a") + " --jobs 1"), 0) << log();
  ASSERT_EQ(run("run --config " + cfg + " " + out("b"), "HML_JOBS=3"), 0) << log();
  EXPECT_EQ(hml::read_text(dir_ / "a" / "estimate.json"), hml::read_text(dir_ / "b" / "estimate.json"));
  EXPECT_EQ(run("run --config " + cfg + " " + out("c"), "HML_JOBS=many"), 1);
  EXPECT_EQ(run("run --config " + cfg + " " + out("c") + " --jobs 0"), 1);
}

TEST_F(Cli, SinglePrecisionFormat) {
  const std::string cfg = write_config(small_config()).string();
  ASSERT_EQ(run("synthesize --config " + cfg + " " + out("o") + " --format f32"), 0) << log();
  EXPECT_EQ(hml::read_json(dir_ / "o" / "family" / "family.json")["dtype"], "complex64");
  ASSERT_EQ(run("estimate --config " + cfg + " " + out("o")), 0) << log();
  EXPECT_EQ(run("run --config " + cfg + " " + out("o") + " --format f16"), 1);
}

TEST_F(Cli, ReportOnEmptyDirectory) {
  fs::create_directories(dir_ / "empty");
  EXPECT_EQ(run("report " + out("empty")), 0) << log();
  EXPECT_TRUE(fs::exists(dir_ / "empty" / "summary.txt"));
}

TEST_F(Cli, VerifyCaseMustMatchModel) {
  const std::string cfg = write_config(small_config()).string();
  ASSERT_EQ(run("synthesize --config " + cfg + " " + out("o")), 0) << log();
  ASSERT_EQ(run("estimate --config " + cfg + " " + out("o")), 0) << log();
  EXPECT_EQ(run("verify --config " + cfg + " " + out("o") + " --case variable"), 1) << log();
  EXPECT_EQ(run("verify --config " + cfg + " " + out("o") + " --case constant"), 0) << log();
}

TEST_F(Cli, MissingUpstreamArtifact) {
  const std::string cfg = write_config(small_config()).string();
  EXPECT_EQ(run("estimate --config " + cfg + " " + out("o")), 3) << log();
  EXPECT_EQ(run("verify --config " + cfg + " " + out("o")), 3) << log();
}

TEST_F(Cli, ConfigAndUsageErrors) {
  EXPECT_EQ(run("run --config " + (dir_ / "nope.json").string()), 3);
  hml::write_text(dir_ / "broken.json", "{");
  EXPECT_EQ(run("run --config " + (dir_ / "broken.json").string()), 1);
  json j = small_config();
  j["grid"]["shape"][1] = 10;
  EXPECT_EQ(run("run --config " + write_config(j, "bad.json").string() + " " + out("o")), 1);
  EXPECT_NE(log().find("/grid/shape/1"), std::string::npos) << log();
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("frobnicate"), 1);
  EXPECT_EQ(run("run"), 1);
  EXPECT_EQ(run("run --config " + write_config(small_config()).string() + " --bogus"), 1);
}

TEST(CliExecute, UnknownCommand) {
  std::ostringstream log, err;
  EXPECT_EQ(hml::cli::execute("dance", std::nullopt, {}, log, err), hml::cli::kConfigError);
  EXPECT_NE(err.str().find("unknown command"), std::string::npos);
  EXPECT_EQ(hml::cli::execute("estimate", std::nullopt, {}, log, err), hml::cli::kConfigError);
}
