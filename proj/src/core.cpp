#include "mlmcgrad/core.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mlmc {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

void validate_gradient(const Vector& v) {
  if (v.empty()) {
    throw std::invalid_argument("gradient vector must have dimension >= 1");
  }
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw std::invalid_argument("gradient vector contains a non-finite entry");
    }
  }
}

bool is_zero(const Vector& v) {
  for (double x : v) {
    if (x != 0.0) return false;
  }
  return true;
}

void SparseDelta::validate() const {
  if (indices.size() != values.size()) {
    throw std::invalid_argument("sparse delta: index/value size mismatch");
  }
  std::size_t prev = 0;
  bool first = true;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= dim) {
      throw std::invalid_argument("sparse delta: index out of range");
    }
    if (!first && indices[i] <= prev) {
      throw std::invalid_argument("sparse delta: indices not strictly increasing");
    }
    if (!std::isfinite(values[i]) || values[i] == 0.0) {
      throw std::invalid_argument("sparse delta: values must be finite and nonzero");
    }
    prev = indices[i];
    first = false;
  }
}

namespace {

Vector densify_sparse(const SparseDelta& s) {
  Vector out(s.dim, 0.0);
  for (std::size_t i = 0; i < s.indices.size(); ++i) {
    out[s.indices[i]] = s.values[i];
  }
  return out;
}

Vector densify_bitplane(const BitPlane& b) {
  Vector out(b.dim, 0.0);
  for (std::size_t j = 0; j < b.dim; ++j) {
    if (b.bits[j]) {
      double mag = std::ldexp(b.scale, -static_cast<int>(b.level));
      out[j] = b.signs[j] ? -mag : mag;
    }
  }
  return out;
}

Vector densify_mantissa(const MantissaPlane& m) {
  Vector out(m.dim, 0.0);
  for (std::size_t j = 0; j < m.dim; ++j) {
    if (m.exponents[j] == 0) continue;  // zero entry
    int e = static_cast<int>(m.exponents[j]) - 1023;
    double val = 0.0;
    if (m.level == 1) {
      // the exponent field carries the implicit leading one
      val = std::ldexp(1.0 + (m.bits[j] ? 0.5 : 0.0), e);
    } else if (m.bits[j]) {
      val = std::ldexp(1.0, e - static_cast<int>(m.level));
    }
    out[j] = m.signs[j] ? -val : val;
  }
  return out;
}

Vector densify_grid(const QuantizedGrid& q) {
  Vector out(q.dim, 0.0);
  for (std::size_t j = 0; j < q.dim; ++j) {
    double hi = q.raw_hi.empty() ? q.step_hi * static_cast<double>(q.codes_hi[j])
                                 : q.raw_hi[j];
    double lo = q.codes_lo.empty() ? 0.0
                                   : q.step_lo * static_cast<double>(q.codes_lo[j]);
    out[j] = hi - lo;
  }
  return out;
}

}  // namespace

Vector densify(const ResidualPayload& payload) {
  return std::visit(
      [](const auto& p) -> Vector {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, SparseDelta>) return densify_sparse(p);
        if constexpr (std::is_same_v<T, BitPlane>) return densify_bitplane(p);
        if constexpr (std::is_same_v<T, MantissaPlane>) return densify_mantissa(p);
        if constexpr (std::is_same_v<T, QuantizedGrid>) return densify_grid(p);
        if constexpr (std::is_same_v<T, ZeroMessage>) return Vector(p.dim, 0.0);
      },
      payload);
}

std::size_t payload_dim(const ResidualPayload& payload) {
  return std::visit([](const auto& p) { return p.dim; }, payload);
}

std::uint64_t ceil_log2(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("ceil_log2(0)");
  return std::bit_width(n - 1);
}

Rng::Rng(std::uint64_t seed, std::uint64_t worker, std::uint64_t iteration,
         Stream stream) {
  std::uint64_t h = mix64(seed + kGolden);
  h = mix64(h ^ (worker + kGolden));
  h = mix64(h ^ (iteration + kGolden));
  h = mix64(h ^ (static_cast<std::uint64_t>(stream) + kGolden));
  state_ = h;
}

std::uint64_t Rng::next_u64() {
  state_ += kGolden;
  return mix64(state_);
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_normal_;
  }
  // u1 in (0, 1] so the log is finite
  double u1 = 1.0 - uniform();
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double theta = 2.0 * std::numbers::pi * u2;
  cached_normal_ = r * std::sin(theta);
  has_cached_ = true;
  return r * std::cos(theta);
}

double dot(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("dot: dimension mismatch");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    acc += a[i] * b[i];
  }
  return acc;
}

Norms norms(const Vector& v) {
  Norms n;
  for (double x : v) {
    n.l1 += std::abs(x);
    n.l2_squared += x * x;
  }
  return n;
}

double l2_norm(const Vector& v) { return std::sqrt(norms(v).l2_squared); }

std::size_t sample_categorical(Rng& rng, std::span<const double> probs) {
  if (probs.empty()) {
    throw std::invalid_argument("categorical: empty distribution");
  }
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) {
      throw std::invalid_argument("categorical: negative probability");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw std::invalid_argument("categorical: probabilities do not sum to 1");
  }
  double u = rng.uniform();
  double cum = 0.0;
  std::size_t last_positive = probs.size();
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] == 0.0) continue;
    cum += probs[i];
    last_positive = i;
    if (u < cum) return i;
  }
  // u landed in the rounding slack past the last positive mass
  return last_positive;
}

}  // namespace mlmc
