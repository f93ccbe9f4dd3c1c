#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mlmcgrad/config.hpp"

// Executes a parsed experiment config: one CSV per (method, seed) plus a
// summary JSON, all written atomically (temp file then rename).

namespace mlmc::runner {

struct RunOutput {
  std::string method;
  std::uint64_t seed = 0;
  double eta = 0.0;  // winning step size when a grid was given
  double final_gap = 0.0;
  double final_grad_norm_sq = 0.0;
  std::uint64_t total_bits = 0;
  bool diverged = false;
  std::filesystem::path csv_path;
};

struct RunSummary {
  std::vector<RunOutput> outputs;
  std::filesystem::path summary_path;
  bool any_diverged = false;
};

// output_root overrides where config.output_dir is resolved; empty means the
// current directory (or the MLMCGRAD_OUTPUT_ROOT environment variable when
// set, handled by the CLI).
RunSummary run_config(const config::ExperimentConfig& config,
                      const std::filesystem::path& output_root = {});

// Aggregates the CSVs in a directory into a bits-vs-gap table.
std::string report_directory(const std::filesystem::path& dir);

}  // namespace mlmc::runner
