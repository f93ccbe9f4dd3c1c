#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mlmcgrad/baselines.hpp"
#include "mlmcgrad/compressors.hpp"
#include "mlmcgrad/core.hpp"
#include "mlmcgrad/mlmc.hpp"
#include "mlmcgrad/problems.hpp"

// The distributed training loop: data-parallel SGD, its multilevel-
// compressed variants (static and adaptive level distributions), and the
// baseline loops, with server-side aggregation in worker order and
// per-iteration metrics.

namespace mlmc::sim {

struct RunRow {
  std::size_t t = 0;
  double gap = 0.0;           // f(x) - f(x*)
  double grad_norm_sq = 0.0;  // ||grad f(x)||^2
  std::uint64_t cum_bits = 0;
  std::map<std::size_t, std::size_t> level_hist;  // sampled level -> count
  double var_probe = 0.0;  // cross-worker estimate of the aggregate variance
};

struct RunRecord {
  std::vector<RunRow> rows;  // row 0 is the initialization
  bool diverged = false;
};

// CSV with header t,gap,grad_norm_sq,cum_bits,level_hist,var_probe.
// level_hist is level:count pairs joined by ';'.
std::string to_csv(const RunRecord& record);

// A per-worker gradient estimator. Implementations must be deterministic
// functions of (x, worker, iteration, seed) apart from per-worker state,
// which only its own worker may touch.
class Method {
 public:
  virtual ~Method() = default;

  struct WorkerMessage {
    Vector estimate;
    std::uint64_t bits = 0;
    std::optional<std::size_t> level;
  };

  virtual std::string name() const = 0;
  virtual WorkerMessage worker_message(const problems::Problem& problem,
                                       const Vector& x, std::size_t worker,
                                       std::size_t iteration,
                                       std::uint64_t seed) = 0;
  virtual bool stateful() const { return false; }
  virtual void reset(std::size_t dim, std::size_t workers) {}
};

class SgdMethod final : public Method {
 public:
  std::string name() const override { return "sgd"; }
  WorkerMessage worker_message(const problems::Problem&, const Vector&,
                               std::size_t, std::size_t,
                               std::uint64_t) override;
};

// Uncompressed SGD with the same momentum recursion the error-feedback
// baseline uses; the equivalence test pins the two together.
class MomentumSgdMethod final : public Method {
 public:
  explicit MomentumSgdMethod(double beta) : beta_(beta) {}
  std::string name() const override { return "momentum_sgd"; }
  WorkerMessage worker_message(const problems::Problem&, const Vector&,
                               std::size_t, std::size_t,
                               std::uint64_t) override;
  bool stateful() const override { return true; }
  void reset(std::size_t dim, std::size_t workers) override;

 private:
  double beta_;
  std::vector<Vector> momentum_;
};

enum class DistributionMode { kStatic, kAdaptive };

class MlmcMethod final : public Method {
 public:
  MlmcMethod(std::shared_ptr<const MultilevelCompressor> comp,
             DistributionMode mode);

  std::string name() const override;
  WorkerMessage worker_message(const problems::Problem&, const Vector&,
                               std::size_t, std::size_t,
                               std::uint64_t) override;
  void reset(std::size_t dim, std::size_t workers) override;

 private:
  std::shared_ptr<const MultilevelCompressor> comp_;
  DistributionMode mode_;
  LevelDistribution static_dist_;  // sized in reset(); read-only afterwards
};

class RandKMethod final : public Method {
 public:
  explicit RandKMethod(std::size_t k) : k_(k) {}
  std::string name() const override { return "rand_k"; }
  WorkerMessage worker_message(const problems::Problem&, const Vector&,
                               std::size_t, std::size_t,
                               std::uint64_t) override;

 private:
  std::size_t k_;
};

class QsgdMethod final : public Method {
 public:
  explicit QsgdMethod(std::size_t levels) : levels_(levels) {}
  std::string name() const override { return "qsgd"; }
  WorkerMessage worker_message(const problems::Problem&, const Vector&,
                               std::size_t, std::size_t,
                               std::uint64_t) override;

 private:
  std::size_t levels_;
};

// Biased compression plugged in directly, no correction.
class TopKDirectMethod final : public Method {
 public:
  explicit TopKDirectMethod(std::size_t k) : k_(k) {}
  std::string name() const override { return "topk_direct"; }
  WorkerMessage worker_message(const problems::Problem&, const Vector&,
                               std::size_t, std::size_t,
                               std::uint64_t) override;

 private:
  std::size_t k_;
  TopKCompressor comp_;
};

class EfMomentumMethod final : public Method {
 public:
  EfMomentumMethod(std::shared_ptr<const MultilevelCompressor> comp,
                   std::size_t level, double beta);

  std::string name() const override { return "ef_momentum"; }
  WorkerMessage worker_message(const problems::Problem&, const Vector&,
                               std::size_t, std::size_t,
                               std::uint64_t) override;
  bool stateful() const override { return true; }
  void reset(std::size_t dim, std::size_t workers) override;

 private:
  std::shared_ptr<const MultilevelCompressor> comp_;
  std::size_t level_;
  double beta_;
  std::vector<baselines::ErrorFeedbackState> states_;
};

struct LoopOptions {
  std::size_t iterations = 0;
  double step_size = 0.0;
  std::uint64_t seed = 0;
  double divergence_factor = 1e6;
  bool parallel_workers = false;
  bool warn_step_size = true;
};

// Runs x_{t+1} = x_t - eta * (1/M) sum_i estimate_i for the given method.
// Row t holds the state after t updates; row 0 is the initialization.
// Aggregation merges worker messages in worker-index order regardless of
// the parallel flag, so records are identical either way.
RunRecord run_loop(const problems::Problem& problem, Method& method,
                   const LoopOptions& options);

RunRecord run_parallel_sgd(const problems::Problem& problem,
                           const LoopOptions& options);

RunRecord run_mlmc_sgd(const problems::Problem& problem,
                       std::shared_ptr<const MultilevelCompressor> comp,
                       DistributionMode mode, const LoopOptions& options);

struct BaselineSpec {
  std::string kind;         // rand_k | qsgd | topk_direct | ef_momentum
  std::size_t k = 1;        // rand_k / topk_direct / ef_momentum level
  std::size_t levels = 2;   // qsgd
  double beta = 0.9;        // ef_momentum
};

RunRecord run_baseline(const problems::Problem& problem,
                       const BaselineSpec& spec, const LoopOptions& options);

// Monte Carlo estimate of E||aggregate(x) - grad f(x)||^2 at a fixed point.
double variance_probe(const problems::Problem& problem, Method& method,
                      const Vector& x, std::size_t n_samples,
                      std::uint64_t seed);

}  // namespace mlmc::sim
