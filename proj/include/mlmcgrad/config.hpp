#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mlmcgrad/problems.hpp"
#include "mlmcgrad/simulator.hpp"

// Declarative experiment description. The on-disk format is JSON; parsing
// errors name the offending field. A config fully determines a run and
// round-trips through serialization losslessly.

namespace mlmc::config {

struct ProblemSpec {
  std::string type = "quadratic";  // quadratic|expdecay_quadratic|sign_conflict|logistic
  std::size_t d = 2;
  std::size_t M = 1;
  double smoothness = 1.0;
  double sigma = 0.0;
  double xi = 0.0;
  std::uint64_t seed = 0;
  double cond = 10.0;
  double x0_radius = 1.0;
  bool strict_noise = false;
  double r = 0.05;             // expdecay_quadratic
  double beta_conflict = 1.0;  // sign_conflict
  double gamma_conflict = 0.1;
  std::size_t samples_per_worker = 32;  // logistic
};

struct MethodSpec {
  std::string name;  // label used in output file names
  std::string type = "sgd";  // sgd|momentum_sgd|mlmc|rand_k|qsgd|topk_direct|ef_momentum
  std::string compressor = "topk";  // mlmc: topk|stopk|fixed_point|floating_point|rtn|identity
  std::string distribution = "adaptive";  // mlmc: adaptive|static
  std::size_t s = 1;                      // stopk segment length
  std::optional<double> scale;            // fixed_point override
  double clip = 1.0;                      // rtn
  std::size_t levels = 8;                 // rtn levels / qsgd levels
  std::size_t k = 1;                      // rand_k / topk_direct / ef_momentum
  double beta = 0.9;                      // momentum coefficient
};

struct ExperimentConfig {
  std::string name = "run";
  ProblemSpec problem;
  std::vector<MethodSpec> methods;
  std::size_t T = 100;
  std::vector<double> eta_grid;  // single entry = fixed step size
  std::vector<std::uint64_t> seeds{1};
  std::string output_dir = "out";
  bool parallel_workers = false;
  double divergence_factor = 1e6;
};

// Throws std::invalid_argument naming the field on any invalid input.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
std::string serialize_config(const ExperimentConfig& config);

std::unique_ptr<problems::Problem> build_problem(const ProblemSpec& spec);
std::shared_ptr<const MultilevelCompressor> build_compressor(
    const MethodSpec& spec);
std::unique_ptr<sim::Method> build_method(const MethodSpec& spec);

}  // namespace mlmc::config
