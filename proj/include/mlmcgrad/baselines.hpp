#pragma once

#include <cstdint>

#include "mlmcgrad/compressors.hpp"
#include "mlmcgrad/core.hpp"

// Reference compressors and optimizer states the multilevel estimators are
// compared against: Rand-k, QSGD-style stochastic quantization, and error
// feedback with momentum. All expose the same bit-accounting conventions as
// the multilevel messages.

namespace mlmc::baselines {

// Keeps a uniformly random k-subset of coordinates scaled by d/k (unbiased).
Vector rand_k(const Vector& v, std::size_t k, Rng& rng);

std::uint64_t rand_k_bits(std::size_t dim, std::size_t k);

// Exact estimator variance E||g - v||^2 = (d/k - 1) ||v||^2.
double rand_k_variance(const Vector& v, std::size_t k);

struct QsgdResult {
  Vector values;
  std::uint64_t bit_cost = 0;
};

// Per-entry stochastic rounding of |v_j| / ||v||_2 onto the uniform grid
// {0, 1/(levels-1), ..., 1} with the sign kept; unbiased. levels = 2 is the
// 2-bit configuration (sign + one magnitude bit). A zero vector yields a
// zero message costing only the 64-bit norm.
QsgdResult qsgd_quantize(const Vector& v, std::size_t levels, Rng& rng);

// Error feedback with momentum. Per step:
//   m_t = (1 - beta) m_{t-1} + beta v_t
//   u_t = (m_t - m_{t-1}) + e_{t-1}   (lag of the server copy)
//   c_t = C(u_t)                      (transmitted)
//   e_t = u_t - c_t                   (error accumulator)
//   h_t = m_t - e_t                   (server copy; h_t - h_{t-1} = c_t)
// With the identity compressor the error accumulator is exactly zero and the
// server copy equals the momentum bit for bit.
struct ErrorFeedbackState {
  Vector momentum;
  Vector error;
  Vector server_mirror;  // m - e, refreshed every step
  double beta = 0.9;

  ErrorFeedbackState(std::size_t dim, double beta_coeff)
      : momentum(dim, 0.0),
        error(dim, 0.0),
        server_mirror(dim, 0.0),
        beta(beta_coeff) {}
};

struct EfStepResult {
  Vector transmitted;
  std::uint64_t bit_cost = 0;
};

EfStepResult ef_momentum_step(ErrorFeedbackState& state, const Vector& grad,
                              const MultilevelCompressor& comp,
                              std::size_t level);

}  // namespace mlmc::baselines
