#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

// Foundational numeric types, deterministic randomness, and the message
// envelope shared by the compressors and the simulator.

namespace mlmc {

using Vector = std::vector<double>;

// Throws std::invalid_argument if v is empty or contains NaN/Inf.
void validate_gradient(const Vector& v);

bool is_zero(const Vector& v);

// Sparse between-level difference: strictly increasing indices < dim,
// values finite and nonzero.
struct SparseDelta {
  std::size_t dim = 0;
  std::vector<std::size_t> indices;
  std::vector<double> values;

  void validate() const;
};

// One fixed-point bit plane: per entry a sign bit and one information bit,
// plus the 64-bit scale. Entry j contributes sign * bit * 2^-level * scale.
struct BitPlane {
  std::size_t dim = 0;
  std::size_t level = 0;
  double scale = 0.0;
  std::vector<std::uint8_t> signs;  // 1 = negative
  std::vector<std::uint8_t> bits;
};

// One floating-point mantissa plane: per entry a sign bit, the 11-bit biased
// exponent, and one mantissa bit. At level 1 the reconstruction includes the
// implicit leading one carried by the exponent field.
struct MantissaPlane {
  std::size_t dim = 0;
  std::size_t level = 0;
  std::vector<std::uint8_t> signs;
  std::vector<std::uint16_t> exponents;  // 0 marks a zero entry
  std::vector<std::uint8_t> bits;
};

// Round-to-nearest grid codes for levels l and l-1. Grids of different
// levels are not nested, so both code planes are transmitted and the
// residual is reconstructed as step_hi*code_hi - step_lo*code_lo.
// At the identity level the hi side carries raw 64-bit values instead.
struct QuantizedGrid {
  std::size_t dim = 0;
  std::size_t level = 0;
  double step_hi = 0.0;  // 0 when raw_hi is used
  std::vector<std::int64_t> codes_hi;
  Vector raw_hi;
  double step_lo = 0.0;  // 0 when level == 1 (C^0 = 0)
  std::vector<std::int64_t> codes_lo;
};

// Designated message for an all-zero gradient (adaptive mode).
struct ZeroMessage {
  std::size_t dim = 0;
};

using ResidualPayload =
    std::variant<SparseDelta, BitPlane, MantissaPlane, QuantizedGrid, ZeroMessage>;

// Reconstructs the dense residual C^l(v) - C^{l-1}(v) from a payload.
Vector densify(const ResidualPayload& payload);

std::size_t payload_dim(const ResidualPayload& payload);

// The transmitted unit: payload plus the sampled level, the probability it
// was sampled with, and the exact encoded size in bits.
struct ResidualMessage {
  ResidualPayload payload;
  std::size_t level = 0;
  double prob = 1.0;
  std::uint64_t bit_cost = 0;
};

// ceil(log2(n)) for n >= 1; 0 for n == 1.
std::uint64_t ceil_log2(std::uint64_t n);

// Named sub-streams so that e.g. gradient noise draws are identical whether
// or not a method also samples compression levels.
enum class Stream : std::uint64_t {
  kGradient = 1,
  kLevel = 2,
  kBaseline = 3,
  kProblem = 4,
  kProbe = 5,
};

// Counter-based generator keyed by (seed, worker, iteration, stream).
// Identical keys yield identical draw sequences across runs and across
// worker counts, and any worker's draws can be replayed in isolation.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t worker, std::uint64_t iteration,
      Stream stream);

  std::uint64_t next_u64();

  // Uniform on [0, 1) with 53 random bits.
  double uniform();

  // Standard normal via Box-Muller (pair cached).
  double normal();

 private:
  std::uint64_t state_ = 0;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

// Exact dot product with deterministic left-to-right summation.
// Throws std::invalid_argument on dimension mismatch.
double dot(const Vector& a, const Vector& b);

struct Norms {
  double l1 = 0.0;
  double l2_squared = 0.0;
};

Norms norms(const Vector& v);

double l2_norm(const Vector& v);

// Samples an index from a categorical distribution. probs must be
// nonnegative and sum to 1 within 1e-12. Indices with zero probability are
// never returned. Returns a 0-based index into probs.
std::size_t sample_categorical(Rng& rng, std::span<const double> probs);

}  // namespace mlmc
