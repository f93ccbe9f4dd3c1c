#include "mlmcgrad/mlmc.hpp"

#include <cmath>
#include <stdexcept>

namespace mlmc {

void LevelDistribution::validate() const {
  if (probs.empty()) {
    throw std::invalid_argument("level distribution is empty");
  }
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) {
      throw std::invalid_argument("level distribution has a negative entry");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw std::invalid_argument("level distribution does not sum to 1");
  }
}

LevelDistribution LevelDistribution::uniform(std::size_t levels) {
  if (levels == 0) throw std::invalid_argument("uniform: levels must be >= 1");
  LevelDistribution d;
  d.probs.assign(levels, 1.0 / static_cast<double>(levels));
  return d;
}

namespace {

LevelDistribution geometric_distribution(std::size_t levels) {
  LevelDistribution d;
  d.probs.resize(levels);
  double denom = 1.0 - std::ldexp(1.0, -static_cast<int>(levels));
  for (std::size_t l = 1; l <= levels; ++l) {
    d.probs[l - 1] = std::ldexp(1.0, -static_cast<int>(l)) / denom;
  }
  return d;
}

}  // namespace

LevelDistribution fixed_point_distribution() {
  return geometric_distribution(FixedPointCompressor::kLevels);
}

LevelDistribution floating_point_distribution() {
  return geometric_distribution(FloatingPointCompressor::kLevels);
}

LevelDistribution adaptive_distribution(const MultilevelCompressor& comp,
                                        const Vector& v) {
  validate_gradient(v);
  if (is_zero(v)) {
    throw std::domain_error("adaptive distribution undefined for a zero vector");
  }
  std::vector<double> deltas = comp.residual_norms(v);
  double total = 0.0;
  for (double d : deltas) total += d;
  LevelDistribution dist;
  dist.probs.resize(deltas.size());
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    dist.probs[i] = deltas[i] / total;
  }
  return dist;
}

LevelDistribution adaptive_distribution_alpha(const MultilevelCompressor& comp,
                                              const Vector& v) {
  std::vector<double> alpha = alpha_profile(comp, v);
  LevelDistribution dist;
  dist.probs.resize(alpha.size() - 1);
  double total = 0.0;
  for (std::size_t l = 1; l < alpha.size(); ++l) {
    double diff = std::max(alpha[l] - alpha[l - 1], 0.0);
    dist.probs[l - 1] = std::sqrt(diff);
    total += dist.probs[l - 1];
  }
  for (double& p : dist.probs) p /= total;
  return dist;
}

LevelDistribution static_distribution(const MultilevelCompressor& comp,
                                      std::size_t dim) {
  if (dynamic_cast<const FixedPointCompressor*>(&comp) != nullptr) {
    return fixed_point_distribution();
  }
  if (dynamic_cast<const FloatingPointCompressor*>(&comp) != nullptr) {
    return floating_point_distribution();
  }
  return LevelDistribution::uniform(comp.num_levels(dim));
}

MlmcEstimate estimate_at_level(const MultilevelCompressor& comp,
                               const Vector& v, const LevelDistribution& dist,
                               std::size_t level) {
  if (level < 1 || level > dist.levels()) {
    throw std::out_of_range("estimate: level out of range");
  }
  double p = dist.prob(level);
  if (!(p > 0.0)) {
    throw std::invalid_argument("estimate: sampled level has zero probability");
  }
  MlmcEstimate out;
  out.sampled_level = level;
  out.prob_used = p;
  ResidualPayload payload = comp.residual(v, level);
  out.estimate = densify(payload);
  for (double& x : out.estimate) x /= p;
  out.message.bit_cost = comp.message_bits(payload, v.size());
  out.message.payload = std::move(payload);
  out.message.level = level;
  out.message.prob = p;
  return out;
}

MlmcEstimate estimate(const MultilevelCompressor& comp, const Vector& v,
                      const LevelDistribution& dist, Rng& rng) {
  validate_gradient(v);
  dist.validate();
  if (dist.levels() != comp.num_levels(v.size())) {
    throw std::invalid_argument("estimate: distribution/compressor level mismatch");
  }
  std::size_t idx = sample_categorical(rng, dist.probs);
  return estimate_at_level(comp, v, dist, idx + 1);
}

MlmcEstimate estimate_adaptive(const MultilevelCompressor& comp,
                               const Vector& v, Rng& rng) {
  validate_gradient(v);
  if (is_zero(v)) {
    return zero_estimate(comp, v.size());
  }
  return estimate(comp, v, adaptive_distribution(comp, v), rng);
}

MlmcEstimate zero_estimate(const MultilevelCompressor& comp, std::size_t dim) {
  MlmcEstimate out;
  out.estimate.assign(dim, 0.0);
  out.sampled_level = 0;
  out.prob_used = 1.0;
  out.message.payload = ZeroMessage{dim};
  out.message.level = 0;
  out.message.prob = 1.0;
  out.message.bit_cost = ceil_log2(comp.num_levels(dim)) + 1;
  return out;
}

VarianceReport analytic_variance(const MultilevelCompressor& comp,
                                 const Vector& v,
                                 const LevelDistribution& dist) {
  validate_gradient(v);
  dist.validate();
  std::vector<double> deltas = comp.residual_norms(v);
  if (deltas.size() != dist.levels()) {
    throw std::invalid_argument("variance: distribution/compressor level mismatch");
  }
  double second = 0.0;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    if (deltas[i] == 0.0) continue;
    if (dist.probs[i] == 0.0) {
      throw std::invalid_argument(
          "variance: zero probability on a level with nonzero residual");
    }
    second += deltas[i] * deltas[i] / dist.probs[i];
  }
  VarianceReport report;
  report.analytic_second_moment = second;
  double vsq = norms(v).l2_squared;
  report.analytic_comp_variance = second - vsq;
  report.omega_hat = vsq > 0.0 ? report.analytic_comp_variance / vsq : 0.0;
  return report;
}

double empirical_second_moment(const MultilevelCompressor& comp,
                               const Vector& v, const LevelDistribution& dist,
                               std::size_t n, Rng& rng) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    MlmcEstimate e = estimate(comp, v, dist, rng);
    acc += norms(e.estimate).l2_squared;
  }
  return acc / static_cast<double>(n);
}

double bitwise_bound_second_moment(const MultilevelCompressor& comp,
                                   const Vector& v,
                                   const LevelDistribution& dist) {
  validate_gradient(v);
  dist.validate();
  double per_entry_sq = 0.0;
  std::size_t levels = 0;
  if (const auto* fp = dynamic_cast<const FixedPointCompressor*>(&comp)) {
    double scale = fp->scale_for(v);
    per_entry_sq = scale * scale * static_cast<double>(v.size());
    levels = FixedPointCompressor::kLevels;
  } else if (dynamic_cast<const FloatingPointCompressor*>(&comp) != nullptr) {
    // per entry 2^(2(E-1023)), the squared magnitude of the exponent skeleton
    for (double x : v) {
      if (x == 0.0) continue;
      int e = 0;
      std::frexp(x, &e);  // |x| = m * 2^e, m in [0.5, 1)
      double lead = std::ldexp(1.0, e - 1);
      per_entry_sq += lead * lead;
    }
    levels = FloatingPointCompressor::kLevels;
  } else {
    throw std::invalid_argument(
        "bit-wise variance bound is defined for fixed/floating point only");
  }
  if (dist.levels() != levels) {
    throw std::invalid_argument("variance bound: level mismatch");
  }
  double sum = 0.0;
  for (std::size_t l = 1; l <= levels; ++l) {
    double b = std::ldexp(1.0, -static_cast<int>(l));
    double p = dist.probs[l - 1];
    if (!(p > 0.0)) {
      throw std::invalid_argument("variance bound: zero probability level");
    }
    sum += b * b / p;
  }
  return per_entry_sq * sum;
}

double exp_decay_variance_prediction(double r, double s, double v_norm_sq) {
  if (!(r > 0.0) || !(s > 0.0)) {
    throw std::invalid_argument("exp-decay prediction requires r, s > 0");
  }
  return v_norm_sq * (4.0 / (r * s) - 1.0);
}

}  // namespace mlmc
