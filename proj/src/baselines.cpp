#include "mlmcgrad/baselines.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mlmc::baselines {

Vector rand_k(const Vector& v, std::size_t k, Rng& rng) {
  validate_gradient(v);
  std::size_t d = v.size();
  if (k < 1 || k > d) throw std::out_of_range("rand_k: k out of range");
  // partial Fisher-Yates for the first k positions
  std::vector<std::size_t> idx(d);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng.uniform() *
                                                 static_cast<double>(d - i));
    if (j >= d) j = d - 1;
    std::swap(idx[i], idx[j]);
  }
  double scaling = static_cast<double>(d) / static_cast<double>(k);
  Vector out(d, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    out[idx[i]] = v[idx[i]] * scaling;
  }
  return out;
}

std::uint64_t rand_k_bits(std::size_t dim, std::size_t k) {
  return k * (64 + ceil_log2(dim));
}

double rand_k_variance(const Vector& v, std::size_t k) {
  if (k < 1 || k > v.size()) throw std::out_of_range("rand_k: k out of range");
  double ratio = static_cast<double>(v.size()) / static_cast<double>(k);
  return (ratio - 1.0) * norms(v).l2_squared;
}

QsgdResult qsgd_quantize(const Vector& v, std::size_t levels, Rng& rng) {
  validate_gradient(v);
  if (levels < 2) throw std::invalid_argument("qsgd: levels must be >= 2");
  QsgdResult out;
  double norm = l2_norm(v);
  if (norm == 0.0) {
    out.values.assign(v.size(), 0.0);
    out.bit_cost = 64;  // the norm alone announces a zero message
    return out;
  }
  out.values.resize(v.size());
  double grid = static_cast<double>(levels - 1);
  for (std::size_t j = 0; j < v.size(); ++j) {
    double u = std::abs(v[j]) / norm * grid;
    double lo = std::floor(u);
    double frac = u - lo;
    double q = lo + (rng.uniform() < frac ? 1.0 : 0.0);
    double mag = norm * q / grid;
    out.values[j] = std::signbit(v[j]) ? -mag : mag;
  }
  out.bit_cost = v.size() * (ceil_log2(levels) + 1) + 64;
  return out;
}

EfStepResult ef_momentum_step(ErrorFeedbackState& state, const Vector& grad,
                              const MultilevelCompressor& comp,
                              std::size_t level) {
  validate_gradient(grad);
  if (grad.size() != state.momentum.size()) {
    throw std::invalid_argument("ef step: dimension mismatch");
  }
  std::size_t d = grad.size();
  Vector lag(d);
  for (std::size_t j = 0; j < d; ++j) {
    double next = (1.0 - state.beta) * state.momentum[j] +
                  state.beta * grad[j];
    lag[j] = (next - state.momentum[j]) + state.error[j];
    state.momentum[j] = next;
  }
  EfStepResult out;
  out.transmitted = comp.compress(lag, level);
  out.bit_cost = comp.direct_message_bits(level, d);
  for (std::size_t j = 0; j < d; ++j) {
    state.error[j] = lag[j] - out.transmitted[j];
    state.server_mirror[j] = state.momentum[j] - state.error[j];
  }
  return out;
}

}  // namespace mlmc::baselines
