#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>

#include "lyspin/cli.hpp"

using namespace lyspin;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out, err;
};

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("lyspin_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Run run_text(const std::string& yaml, const fs::path& out_dir, Format fmt = Format::Csv, unsigned threads = 1,
             const std::string& command = "") {
  cli::Options o;
  o.config_text = yaml;
  o.out_dir = out_dir;
  o.format = fmt;
  o.threads = threads;
  o.command = command;
  std::ostringstream out, err;
  Run r;
  r.code = cli::run(o, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

Run run_file(const std::string& config, const fs::path& out_dir, Format fmt = Format::Csv, unsigned threads = 1) {
  cli::Options o;
  o.config_path = (fs::path(LYSPIN_CONFIG_DIR) / config).string();
  o.out_dir = out_dir;
  o.format = fmt;
  o.threads = threads;
  std::ostringstream out, err;
  Run r;
  r.code = cli::run(o, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json error_record(const Run& r) { return nlohmann::json::parse(r.err.substr(0, r.err.find('\n'))); }

}  // namespace

TEST(Cli, ShippedConfigsRun) {
  for (const auto& entry : fs::directory_iterator(LYSPIN_CONFIG_DIR)) {
    const std::string name = entry.path().filename().string();
    if (name == "ferro_violation.yaml") continue;
    auto dir = scratch("shipped");
    auto r = run_file(name, dir);
    EXPECT_EQ(r.code, 0) << name << ": " << r.err;
  }
}

TEST(Cli, ZerosConfigWritesTable) {
  auto dir = scratch("zeros");
  auto r = run_file("ising_3x3_periodic.yaml", dir);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "zeros.csv"));
  EXPECT_TRUE(fs::exists(dir / "zeros.meta.json"));
  const std::string csv = slurp(dir / "zeros.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "instance,beta,z_re,z_im,modulus,h_re,h_im,residual");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 19);
}

TEST(Cli, FerromagnetismViolationRecord) {
  auto dir = scratch("ferro");
  auto r = run_file("ferro_violation.yaml", dir);
  EXPECT_EQ(r.code, 1);
  auto rec = error_record(r);
  EXPECT_EQ(rec["error"], "FerromagnetismViolation");
  EXPECT_EQ(rec["exit_code"], 1);
  EXPECT_FALSE(fs::exists(dir / "enumerate.csv"));
}

TEST(Cli, RatioScanRejectsImaginaryAxis) {
  auto dir = scratch("ratio");
  auto r = run_text("command: ratio-scan\ndims: [6]\nboundary: periodic\nbeta: 1.0\n"
                    "couplings:\n  - offset: [1]\n    J: [1.0]\nfields: [[0.0, 1.0]]\n",
                    dir);
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(error_record(r)["error"], "OutsideHalfPlane");
}

TEST(Cli, ParseErrorsAreValidationErrors) {
  auto dir = scratch("parse");
  EXPECT_EQ(run_text("dims: [4]\n", dir).code, 1);
  EXPECT_EQ(error_record(run_text("dims: [4]\n", dir))["error"], "ConfigParse");
  EXPECT_EQ(run_text("command: enumerate\n", dir).code, 1);
  EXPECT_EQ(run_text("command: nothing\ndims: [2]\n", dir).code, 1);
  EXPECT_EQ(run_text("[1, 2\n", dir).code, 1);
}

TEST(Cli, EmptyResultSetIsAnError) {
  auto dir = scratch("empty");
  auto r = run_text("command: transfer-scan\ndims: [4]\nboundary: periodic\ncouplings:\n  - offset: [1]\n    J: [1.0]\n"
                    "fields: []\n",
                    dir);
  EXPECT_NE(r.code, 0);
  EXPECT_FALSE(fs::exists(dir / "transfer-scan.csv"));
}

TEST(Cli, JsonRoundTrip) {
  auto dir = scratch("json");
  auto r = run_file("ursell_chain.yaml", dir, Format::Json);
  ASSERT_EQ(r.code, 0) << r.err;
  auto doc = nlohmann::json::parse(slurp(dir / "ursell.json"));
  EXPECT_EQ(doc["schema_version"], kSchemaVersion);
  EXPECT_EQ(doc["command"], "ursell");
  ASSERT_EQ(doc["rows"].size(), 1u);
  const auto m = make_ising_model({12}, Boundary::Free, 1.0, 1.0, 0.5);
  const auto u = ursell(m, {{3}, {6}, {9}}, {0, 0, 0});
  EXPECT_DOUBLE_EQ(doc["rows"][0]["value_re"].get<double>(), u.value.real());
  EXPECT_EQ(doc["rows"][0]["sites"], "3;6;9");
  auto again = nlohmann::json::parse(doc.dump());
  EXPECT_EQ(again, doc);
}

TEST(Cli, RepeatRunsAreByteIdentical) {
  for (const char* cfg : {"ising_chain_transfer.yaml", "zeros_random_suite.yaml", "cluster_chain.yaml"}) {
    auto a = scratch("repeat_a"), b = scratch("repeat_b"), c = scratch("repeat_c");
    ASSERT_EQ(run_file(cfg, a, Format::Csv, 1).code, 0);
    ASSERT_EQ(run_file(cfg, b, Format::Csv, 1).code, 0);
    ASSERT_EQ(run_file(cfg, c, Format::Csv, 8).code, 0);
    for (const auto& e : fs::directory_iterator(a)) {
      const auto name = e.path().filename();
      EXPECT_EQ(slurp(a / name), slurp(b / name)) << cfg;
      EXPECT_EQ(slurp(a / name), slurp(c / name)) << cfg << " threads";
    }
  }
}

TEST(Cli, NegativeFieldMapsToPositive) {
  auto dir = scratch("negative");
  auto r = run_text("command: ursell\ndims: [6]\nbeta: 0.7\nfield_re: -0.5\ncouplings:\n  - offset: [1]\n    J: [1.0]\n"
                    "sites: [[1], [2], [4]]\n",
                    dir, Format::Json);
  ASSERT_EQ(r.code, 0) << r.err;
  auto doc = nlohmann::json::parse(slurp(dir / "ursell.json"));
  const auto direct = ursell(make_ising_model({6}, Boundary::Free, 0.7, 1.0, -0.5), {{1}, {2}, {4}}, {0, 0, 0});
  EXPECT_NEAR(doc["rows"][0]["value_re"].get<double>(), direct.value.real(), 1e-14);
  const auto mirrored = ursell(make_ising_model({6}, Boundary::Free, 0.7, 1.0, 0.5), {{1}, {2}, {4}}, {0, 0, 0});
  EXPECT_NEAR(direct.value.real(), -mirrored.value.real(), 1e-14);
  EXPECT_GT(direct.value.real(), 0.0);
  EXPECT_TRUE(doc["metadata"].contains("field_mapping"));
}

TEST(Cli, MaxPrincipleWithinConfig) {
  auto dir = scratch("maxp");
  auto r = run_file("max_principle_chain.yaml", dir);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("passed=1"), std::string::npos);
}

TEST(Cli, ExitCodeMapping) {
  EXPECT_EQ(cli::exit_code_for(ErrorCode::SymmetryViolation), 1);
  EXPECT_EQ(cli::exit_code_for(ErrorCode::SampleTooCoarse), 2);
  EXPECT_EQ(cli::exit_code_for(ErrorCode::NotInConvergenceRegion), 2);
  EXPECT_EQ(cli::exit_code_for(ErrorCode::GraphBudgetExceeded), 2);
}
