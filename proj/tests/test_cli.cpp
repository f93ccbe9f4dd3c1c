#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "mlmcgrad/config.hpp"
#include "mlmcgrad/runner.hpp"

using namespace mlmc;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kMinimalConfig = R"({
  "name": "mini",
  "problem": {"type": "quadratic", "d": 2, "M": 1, "sigma": 0.0, "seed": 3},
  "methods": [{"name": "sgd", "type": "sgd"}],
  "T": 10,
  "eta": 0.5,
  "seeds": [1],
  "output_dir": "mini_out"
})";

}  // namespace

TEST_CASE("config: minimal run produces one csv with T+1 rows") {
  auto cfg = config::parse_config(kMinimalConfig);
  auto dir = fs::temp_directory_path() / "mlmcgrad_test_mini";
  fs::remove_all(dir);
  auto summary = runner::run_config(cfg, dir);
  REQUIRE(summary.outputs.size() == 1);
  std::string csv = read_file(summary.outputs[0].csv_path);
  std::size_t lines = 0;
  for (char c : csv) lines += c == '\n';
  CHECK(lines == 12);  // header + init + 10 rows
  CHECK(fs::exists(summary.summary_path));
  fs::remove_all(dir);
}

TEST_CASE("config: multi-seed run produces distinct csvs") {
  auto cfg = config::parse_config(kMinimalConfig);
  cfg.problem.sigma = 0.2;
  cfg.seeds = {1, 2, 3, 4, 5};
  auto dir = fs::temp_directory_path() / "mlmcgrad_test_seeds";
  fs::remove_all(dir);
  auto summary = runner::run_config(cfg, dir);
  REQUIRE(summary.outputs.size() == 5);
  std::set<std::string> contents;
  for (const auto& out : summary.outputs) {
    contents.insert(read_file(out.csv_path));
  }
  CHECK(contents.size() == 5);
  fs::remove_all(dir);
}

TEST_CASE("config: unknown compressor names the field") {
  std::string bad = R"({
    "name": "x",
    "methods": [{"type": "mlmc", "compressor": "nope"}],
    "T": 1, "eta": 0.1
  })";
  try {
    config::parse_config(bad);
    FAIL("expected an exception");
  } catch (const std::invalid_argument& e) {
    std::string msg = e.what();
    CHECK(msg.find("methods[0].compressor") != std::string::npos);
    CHECK(msg.find("nope") != std::string::npos);
  }
}

TEST_CASE("config: validation errors name the offending field") {
  CHECK_THROWS_WITH_AS(config::parse_config("{\"methods\": []}"),
                       doctest::Contains("methods"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(
      config::parse_config(
          R"({"methods": [{"type":"sgd"}], "T": 1})"),
      doctest::Contains("eta"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(
      config::parse_config(
          R"({"methods": [{"type":"sgd"}], "eta": 0.1, "problem": {"type": "weird"}})"),
      doctest::Contains("problem.type"), std::invalid_argument);
  CHECK_THROWS_AS(config::parse_config("not json"), std::invalid_argument);
}

TEST_CASE("config: serialization round-trips losslessly") {
  auto cfg = config::parse_config(kMinimalConfig);
  cfg.methods.push_back({});
  cfg.methods.back().name = "mlmc_stopk";
  cfg.methods.back().type = "mlmc";
  cfg.methods.back().compressor = "stopk";
  cfg.methods.back().s = 4;
  cfg.methods.back().scale = 2.5;
  cfg.eta_grid = {0.1, 0.2, 0.4};
  std::string first = config::serialize_config(cfg);
  auto reparsed = config::parse_config(first);
  std::string second = config::serialize_config(reparsed);
  CHECK(first == second);
}

TEST_CASE("runner: same config and seed give byte-identical csvs") {
  auto cfg = config::parse_config(kMinimalConfig);
  cfg.problem.sigma = 0.3;
  cfg.problem.M = 2;
  cfg.methods.back().type = "mlmc";
  cfg.methods.back().name = "mlmc";
  cfg.methods.back().compressor = "topk";
  auto dir_a = fs::temp_directory_path() / "mlmcgrad_det_a";
  auto dir_b = fs::temp_directory_path() / "mlmcgrad_det_b";
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
  auto a = runner::run_config(cfg, dir_a);
  auto b = runner::run_config(cfg, dir_b);
  CHECK(read_file(a.outputs[0].csv_path) == read_file(b.outputs[0].csv_path));
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
}

TEST_CASE("runner: eta grid picks the best final gap") {
  auto cfg = config::parse_config(kMinimalConfig);
  cfg.T = 100;
  cfg.eta_grid = {1e-4, 0.5, 10.0};  // tiny, good, divergent
  auto dir = fs::temp_directory_path() / "mlmcgrad_grid";
  fs::remove_all(dir);
  auto summary = runner::run_config(cfg, dir);
  CHECK(summary.outputs[0].eta == 0.5);
  CHECK_FALSE(summary.outputs[0].diverged);
  fs::remove_all(dir);
}

TEST_CASE("runner: summary json carries the schema version") {
  auto cfg = config::parse_config(kMinimalConfig);
  auto dir = fs::temp_directory_path() / "mlmcgrad_summary";
  fs::remove_all(dir);
  auto summary = runner::run_config(cfg, dir);
  std::string json = read_file(summary.summary_path);
  CHECK(json.find("\"schema_version\": 1") != std::string::npos);
  CHECK(json.find("\"final_gap\"") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("report: aggregates csvs into a table") {
  auto cfg = config::parse_config(kMinimalConfig);
  auto dir = fs::temp_directory_path() / "mlmcgrad_report";
  fs::remove_all(dir);
  auto summary = runner::run_config(cfg, dir);
  std::string table =
      runner::report_directory(summary.outputs[0].csv_path.parent_path());
  CHECK(table.find("mini_sgd_1") != std::string::npos);
  CHECK(table.find("total_bits") != std::string::npos);
  fs::remove_all(dir);
}
