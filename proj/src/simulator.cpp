#include "mlmcgrad/simulator.hpp"

#include <cmath>
#include <cstdio>
#include <future>
#include <sstream>
#include <stdexcept>

namespace mlmc::sim {

namespace {

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

std::string to_csv(const RunRecord& record) {
  std::ostringstream out;
  out << "t,gap,grad_norm_sq,cum_bits,level_hist,var_probe\n";
  for (const RunRow& row : record.rows) {
    out << row.t << ',' << format_double(row.gap) << ','
        << format_double(row.grad_norm_sq) << ',' << row.cum_bits << ',';
    bool first = true;
    for (const auto& [level, count] : row.level_hist) {
      if (!first) out << ';';
      out << level << ':' << count;
      first = false;
    }
    out << ',' << format_double(row.var_probe) << '\n';
  }
  return out.str();
}

Method::WorkerMessage SgdMethod::worker_message(
    const problems::Problem& problem, const Vector& x, std::size_t worker,
    std::size_t iteration, std::uint64_t seed) {
  Rng rng(seed, worker, iteration, Stream::kGradient);
  WorkerMessage msg;
  msg.estimate = problem.stochastic_gradient(x, worker, rng);
  msg.bits = 64 * problem.dim();
  return msg;
}

void MomentumSgdMethod::reset(std::size_t dim, std::size_t workers) {
  momentum_.assign(workers, Vector(dim, 0.0));
}

Method::WorkerMessage MomentumSgdMethod::worker_message(
    const problems::Problem& problem, const Vector& x, std::size_t worker,
    std::size_t iteration, std::uint64_t seed) {
  Rng rng(seed, worker, iteration, Stream::kGradient);
  Vector grad = problem.stochastic_gradient(x, worker, rng);
  Vector& m = momentum_.at(worker);
  for (std::size_t j = 0; j < grad.size(); ++j) {
    m[j] = (1.0 - beta_) * m[j] + beta_ * grad[j];
  }
  WorkerMessage msg;
  msg.estimate = m;
  msg.bits = 64 * problem.dim();
  return msg;
}

MlmcMethod::MlmcMethod(std::shared_ptr<const MultilevelCompressor> comp,
                       DistributionMode mode)
    : comp_(std::move(comp)), mode_(mode) {}

std::string MlmcMethod::name() const {
  return "mlmc_" + comp_->name() +
         (mode_ == DistributionMode::kAdaptive ? "_adaptive" : "_static");
}

void MlmcMethod::reset(std::size_t dim, std::size_t) {
  if (mode_ == DistributionMode::kStatic) {
    static_dist_ = static_distribution(*comp_, dim);
  }
}

Method::WorkerMessage MlmcMethod::worker_message(
    const problems::Problem& problem, const Vector& x, std::size_t worker,
    std::size_t iteration, std::uint64_t seed) {
  Rng grad_rng(seed, worker, iteration, Stream::kGradient);
  Vector v = problem.stochastic_gradient(x, worker, grad_rng);
  Rng level_rng(seed, worker, iteration, Stream::kLevel);
  MlmcEstimate est;
  if (mode_ == DistributionMode::kAdaptive) {
    est = estimate_adaptive(*comp_, v, level_rng);
  } else {
    if (static_dist_.levels() != comp_->num_levels(v.size())) {
      static_dist_ = static_distribution(*comp_, v.size());
    }
    if (is_zero(v)) {
      est = zero_estimate(*comp_, v.size());
    } else {
      est = estimate(*comp_, v, static_dist_, level_rng);
    }
  }
  WorkerMessage msg;
  msg.estimate = std::move(est.estimate);
  msg.bits = est.message.bit_cost;
  msg.level = est.sampled_level;
  return msg;
}

Method::WorkerMessage RandKMethod::worker_message(
    const problems::Problem& problem, const Vector& x, std::size_t worker,
    std::size_t iteration, std::uint64_t seed) {
  Rng grad_rng(seed, worker, iteration, Stream::kGradient);
  Vector v = problem.stochastic_gradient(x, worker, grad_rng);
  Rng pick_rng(seed, worker, iteration, Stream::kBaseline);
  WorkerMessage msg;
  msg.estimate = baselines::rand_k(v, k_, pick_rng);
  msg.bits = baselines::rand_k_bits(problem.dim(), k_);
  return msg;
}

Method::WorkerMessage QsgdMethod::worker_message(
    const problems::Problem& problem, const Vector& x, std::size_t worker,
    std::size_t iteration, std::uint64_t seed) {
  Rng grad_rng(seed, worker, iteration, Stream::kGradient);
  Vector v = problem.stochastic_gradient(x, worker, grad_rng);
  Rng quant_rng(seed, worker, iteration, Stream::kBaseline);
  auto [values, bits] = baselines::qsgd_quantize(v, levels_, quant_rng);
  WorkerMessage msg;
  msg.estimate = std::move(values);
  msg.bits = bits;
  return msg;
}

Method::WorkerMessage TopKDirectMethod::worker_message(
    const problems::Problem& problem, const Vector& x, std::size_t worker,
    std::size_t iteration, std::uint64_t seed) {
  Rng grad_rng(seed, worker, iteration, Stream::kGradient);
  Vector v = problem.stochastic_gradient(x, worker, grad_rng);
  WorkerMessage msg;
  msg.estimate = comp_.compress(v, k_);
  msg.bits = comp_.direct_message_bits(k_, problem.dim());
  return msg;
}

EfMomentumMethod::EfMomentumMethod(
    std::shared_ptr<const MultilevelCompressor> comp, std::size_t level,
    double beta)
    : comp_(std::move(comp)), level_(level), beta_(beta) {}

void EfMomentumMethod::reset(std::size_t dim, std::size_t workers) {
  states_.clear();
  states_.reserve(workers);
  for (std::size_t i = 0; i < workers; ++i) {
    states_.emplace_back(dim, beta_);
  }
}

Method::WorkerMessage EfMomentumMethod::worker_message(
    const problems::Problem& problem, const Vector& x, std::size_t worker,
    std::size_t iteration, std::uint64_t seed) {
  Rng grad_rng(seed, worker, iteration, Stream::kGradient);
  Vector v = problem.stochastic_gradient(x, worker, grad_rng);
  auto& state = states_.at(worker);
  auto step = baselines::ef_momentum_step(state, v, *comp_, level_);
  WorkerMessage msg;
  msg.estimate = state.server_mirror;  // server applies mirror + received delta
  msg.bits = step.bit_cost;
  return msg;
}

RunRecord run_loop(const problems::Problem& problem, Method& method,
                   const LoopOptions& options) {
  if (!(options.step_size > 0.0)) {
    throw std::invalid_argument("run loop: step size must be > 0");
  }
  if (options.warn_step_size &&
      options.step_size > 1.0 / (2.0 * problem.smoothness())) {
    std::fprintf(stderr,
                 "warning: step size %.3g exceeds 1/(2L) = %.3g\n",
                 options.step_size, 1.0 / (2.0 * problem.smoothness()));
  }
  std::size_t d = problem.dim();
  std::size_t workers = problem.workers();
  method.reset(d, workers);

  RunRecord record;
  Vector x = problem.x_init();
  double f_star = problem.optimal_value();

  auto push_row = [&](std::size_t t, std::uint64_t cum_bits,
                      std::map<std::size_t, std::size_t> hist,
                      double var_probe) {
    RunRow row;
    row.t = t;
    row.gap = problem.objective(x) - f_star;
    row.grad_norm_sq = norms(problem.full_gradient(x)).l2_squared;
    row.cum_bits = cum_bits;
    row.level_hist = std::move(hist);
    row.var_probe = var_probe;
    record.rows.push_back(std::move(row));
  };

  push_row(0, 0, {}, 0.0);
  double initial_gap = record.rows.front().gap;
  double guard = options.divergence_factor * std::max(initial_gap, 1e-12);

  std::uint64_t cum_bits = 0;
  std::vector<Method::WorkerMessage> messages(workers);
  for (std::size_t t = 1; t <= options.iterations; ++t) {
    if (options.parallel_workers && !method.stateful()) {
      std::vector<std::future<Method::WorkerMessage>> futures;
      futures.reserve(workers);
      for (std::size_t i = 0; i < workers; ++i) {
        futures.push_back(std::async(std::launch::async, [&, i] {
          return method.worker_message(problem, x, i, t, options.seed);
        }));
      }
      for (std::size_t i = 0; i < workers; ++i) {
        messages[i] = futures[i].get();
      }
    } else {
      for (std::size_t i = 0; i < workers; ++i) {
        messages[i] = method.worker_message(problem, x, i, t, options.seed);
      }
    }

    // merge in worker-index order
    Vector aggregate(d, 0.0);
    std::map<std::size_t, std::size_t> hist;
    for (std::size_t i = 0; i < workers; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        aggregate[j] += messages[i].estimate[j];
      }
      cum_bits += messages[i].bits;
      if (messages[i].level) ++hist[*messages[i].level];
    }
    for (double& g : aggregate) g /= static_cast<double>(workers);

    double var_probe = 0.0;
    if (workers > 1) {
      double acc = 0.0;
      for (std::size_t i = 0; i < workers; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
          double e = messages[i].estimate[j] - aggregate[j];
          acc += e * e;
        }
      }
      var_probe = acc / static_cast<double>(workers * (workers - 1));
    }

    for (std::size_t j = 0; j < d; ++j) {
      x[j] -= options.step_size * aggregate[j];
    }
    push_row(t, cum_bits, std::move(hist), var_probe);

    double gap = record.rows.back().gap;
    if (!std::isfinite(gap) || gap > guard) {
      record.diverged = true;
      break;
    }
  }
  return record;
}

RunRecord run_parallel_sgd(const problems::Problem& problem,
                           const LoopOptions& options) {
  SgdMethod method;
  return run_loop(problem, method, options);
}

RunRecord run_mlmc_sgd(const problems::Problem& problem,
                       std::shared_ptr<const MultilevelCompressor> comp,
                       DistributionMode mode, const LoopOptions& options) {
  MlmcMethod method(std::move(comp), mode);
  return run_loop(problem, method, options);
}

RunRecord run_baseline(const problems::Problem& problem,
                       const BaselineSpec& spec, const LoopOptions& options) {
  std::unique_ptr<Method> method;
  if (spec.kind == "rand_k") {
    method = std::make_unique<RandKMethod>(spec.k);
  } else if (spec.kind == "qsgd") {
    method = std::make_unique<QsgdMethod>(spec.levels);
  } else if (spec.kind == "topk_direct") {
    method = std::make_unique<TopKDirectMethod>(spec.k);
  } else if (spec.kind == "ef_momentum") {
    method = std::make_unique<EfMomentumMethod>(
        std::make_shared<TopKCompressor>(), spec.k, spec.beta);
  } else {
    throw std::invalid_argument("unknown baseline '" + spec.kind + "'");
  }
  return run_loop(problem, *method, options);
}

double variance_probe(const problems::Problem& problem, Method& method,
                      const Vector& x, std::size_t n_samples,
                      std::uint64_t seed) {
  std::size_t d = problem.dim();
  std::size_t workers = problem.workers();
  method.reset(d, workers);
  Vector target = problem.full_gradient(x);
  double acc = 0.0;
  for (std::size_t s = 1; s <= n_samples; ++s) {
    Vector aggregate(d, 0.0);
    for (std::size_t i = 0; i < workers; ++i) {
      auto msg = method.worker_message(problem, x, i, s, seed);
      for (std::size_t j = 0; j < d; ++j) aggregate[j] += msg.estimate[j];
    }
    double sq = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      double e = aggregate[j] / static_cast<double>(workers) - target[j];
      sq += e * e;
    }
    acc += sq;
  }
  return acc / static_cast<double>(n_samples);
}

}  // namespace mlmc::sim
