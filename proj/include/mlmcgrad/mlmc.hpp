#pragma once

#include <optional>
#include <vector>

#include "mlmcgrad/compressors.hpp"
#include "mlmcgrad/core.hpp"

// Multilevel Monte Carlo gradient estimation. Sampling a level l from a
// distribution {p^l} and scaling the residual C^l(v) - C^{l-1}(v) by 1/p^l
// gives an unbiased estimate of v for any multilevel compressor: the levels
// telescope and C^L is the identity. The variance-optimal distributions are
// p^l proportional to 2^-l for the bit-wise compressors (static) and
// p^l proportional to the residual norm Delta^l per vector (adaptive).

namespace mlmc {

struct LevelDistribution {
  // probs[i] is the probability of level i+1.
  std::vector<double> probs;

  std::size_t levels() const { return probs.size(); }
  double prob(std::size_t level) const { return probs.at(level - 1); }

  // Checks entries >= 0 and sum within 1e-12 of 1; throws otherwise.
  void validate() const;

  static LevelDistribution uniform(std::size_t levels);
};

// p^l = 2^-l / (1 - 2^-63), l = 1..63.
LevelDistribution fixed_point_distribution();

// p^l = 2^-l / (1 - 2^-52), l = 1..52.
LevelDistribution floating_point_distribution();

// Variance-optimal per-vector distribution p^l = Delta^l / sum Delta.
// Levels with a zero residual get probability zero. Throws
// std::domain_error on a zero vector.
LevelDistribution adaptive_distribution(const MultilevelCompressor& comp,
                                        const Vector& v);

// Same distribution computed through the retained-energy profile:
// p^l = sqrt(alpha^l - alpha^{l-1}) normalized. Exact for sparsifiers.
LevelDistribution adaptive_distribution_alpha(const MultilevelCompressor& comp,
                                              const Vector& v);

// Default non-adaptive distribution: the closed forms for the bit-wise
// compressors, uniform otherwise.
LevelDistribution static_distribution(const MultilevelCompressor& comp,
                                      std::size_t dim);

struct MlmcEstimate {
  Vector estimate;
  std::size_t sampled_level = 0;
  double prob_used = 1.0;
  ResidualMessage message;
};

// Deterministic estimate for a forced level: residual(v, level) / p^level.
MlmcEstimate estimate_at_level(const MultilevelCompressor& comp,
                               const Vector& v, const LevelDistribution& dist,
                               std::size_t level);

// Samples l ~ dist and builds the estimate.
MlmcEstimate estimate(const MultilevelCompressor& comp, const Vector& v,
                      const LevelDistribution& dist, Rng& rng);

// Adaptive path: computes the optimal distribution for v, then samples.
// An all-zero v yields the designated zero message.
MlmcEstimate estimate_adaptive(const MultilevelCompressor& comp,
                               const Vector& v, Rng& rng);

// The zero message: bit cost ceil(log2 L) + 1.
MlmcEstimate zero_estimate(const MultilevelCompressor& comp, std::size_t dim);

struct VarianceReport {
  double analytic_second_moment = 0.0;
  double analytic_comp_variance = 0.0;  // sigma^2_comp
  double omega_hat = 0.0;               // sigma^2_comp / ||v||^2
  std::optional<double> empirical_second_moment;
};

// E||g~||^2 = sum_l Delta_l^2 / p^l and the derived compression variance.
// Throws std::invalid_argument if some p^l = 0 with Delta_l > 0.
VarianceReport analytic_variance(const MultilevelCompressor& comp,
                                 const Vector& v,
                                 const LevelDistribution& dist);

// Monte Carlo mean of ||g~||^2 over n sampled estimates.
double empirical_second_moment(const MultilevelCompressor& comp,
                               const Vector& v, const LevelDistribution& dist,
                               std::size_t n, Rng& rng);

// The objective the static bit-wise distributions minimize: the second
// moment with every information bit set, sum_l B_l^2 / p^l where B_l is the
// all-ones residual norm. Supported for the fixed- and floating-point
// compressors.
double bitwise_bound_second_moment(const MultilevelCompressor& comp,
                                   const Vector& v,
                                   const LevelDistribution& dist);

// Closed-form variance approximation ||v||^2 (4/(r s) - 1) for s-segment
// compression of exponentially decaying vectors (valid for r*s <= 1 and
// r*d >> 1).
double exp_decay_variance_prediction(double r, double s, double v_norm_sq);

}  // namespace mlmc
