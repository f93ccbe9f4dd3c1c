#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "mlmcgrad/config.hpp"
#include "mlmcgrad/runner.hpp"
#include "mlmcgrad/verification.hpp"

namespace {

int cmd_run(const std::string& config_path) {
  mlmc::config::ExperimentConfig config;
  try {
    config = mlmc::config::load_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::filesystem::path root;
  if (const char* env = std::getenv("MLMCGRAD_OUTPUT_ROOT")) {
    root = env;
  }
  mlmc::runner::RunSummary summary;
  try {
    summary = mlmc::runner::run_config(config, root);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  for (const auto& out : summary.outputs) {
    std::cout << out.csv_path.string() << "  final_gap=" << out.final_gap
              << "  total_bits=" << out.total_bits
              << (out.diverged ? "  DIVERGED" : "") << "\n";
  }
  std::cout << summary.summary_path.string() << "\n";
  if (summary.any_diverged) {
    std::cerr << "error: divergence guard tripped\n";
    return 2;
  }
  return 0;
}

int cmd_verify(const std::string& suite_name) {
  mlmc::verify::Suite suite;
  try {
    suite = mlmc::verify::run_suite(suite_name);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cout << mlmc::verify::format_suite(suite_name, suite);
  return mlmc::verify::all_passed(suite) ? 0 : 1;
}

int cmd_report(const std::string& dir) {
  try {
    std::cout << mlmc::runner::report_directory(dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multilevel Monte Carlo gradient compression experiments"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "execute an experiment config");
  run->add_option("config", config_path, "path to a JSON experiment config")
      ->required();

  std::string suite_name;
  std::string suites;
  for (const auto& n : mlmc::verify::suite_names()) {
    if (!suites.empty()) suites += ", ";
    suites += n;
  }
  auto* verify =
      app.add_subcommand("verify", "run a verification suite (" + suites + ")");
  verify->add_option("suite", suite_name, "suite name")->required();

  std::string report_dir;
  auto* report =
      app.add_subcommand("report", "aggregate run CSVs into a bits-vs-gap table");
  report->add_option("dir", report_dir, "directory containing run CSVs")
      ->required();

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return cmd_run(config_path);
  if (verify->parsed()) return cmd_verify(suite_name);
  if (report->parsed()) return cmd_report(report_dir);
  return 1;
}
