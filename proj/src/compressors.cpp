#include "mlmcgrad/compressors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mlmc {

namespace {

void check_level(std::size_t level, std::size_t num_levels, std::size_t lo) {
  if (level < lo || level > num_levels) {
    throw std::out_of_range("compression level out of range");
  }
}

// Indices sorted by descending |v|, ties toward the lower index.
std::vector<std::size_t> magnitude_order(const Vector& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(v[a]) > std::abs(v[b]);
  });
  return order;
}

SparseDelta sparse_from_positions(const Vector& v,
                                  std::vector<std::size_t> positions) {
  std::sort(positions.begin(), positions.end());
  SparseDelta out;
  out.dim = v.size();
  for (std::size_t idx : positions) {
    if (v[idx] != 0.0) {
      out.indices.push_back(idx);
      out.values.push_back(v[idx]);
    }
  }
  return out;
}

}  // namespace

std::vector<double> MultilevelCompressor::residual_norms(const Vector& v) const {
  std::size_t levels = num_levels(v.size());
  std::vector<double> out(levels, 0.0);
  for (std::size_t l = 1; l <= levels; ++l) {
    out[l - 1] = l2_norm(densify(residual(v, l)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Top-k

Vector TopKCompressor::compress(const Vector& v, std::size_t level) const {
  validate_gradient(v);
  check_level(level, v.size(), 0);
  if (level == v.size()) return v;
  Vector out(v.size(), 0.0);
  auto order = magnitude_order(v);
  for (std::size_t i = 0; i < level; ++i) {
    out[order[i]] = v[order[i]];
  }
  return out;
}

ResidualPayload TopKCompressor::residual(const Vector& v,
                                         std::size_t level) const {
  validate_gradient(v);
  check_level(level, v.size(), 1);
  auto order = magnitude_order(v);
  return sparse_from_positions(v, {order[level - 1]});
}

std::vector<double> TopKCompressor::residual_norms(const Vector& v) const {
  auto order = magnitude_order(v);
  std::vector<double> out(v.size());
  for (std::size_t l = 0; l < v.size(); ++l) {
    out[l] = std::abs(v[order[l]]);
  }
  return out;
}

std::uint64_t TopKCompressor::message_bits(const ResidualPayload& payload,
                                           std::size_t dim) const {
  const auto& s = std::get<SparseDelta>(payload);
  return s.indices.size() * (64 + ceil_log2(dim)) + ceil_log2(num_levels(dim));
}

std::uint64_t TopKCompressor::direct_message_bits(std::size_t level,
                                                  std::size_t dim) const {
  return level * (64 + ceil_log2(dim));
}

// ---------------------------------------------------------------------------
// s-Top-k

SegmentedTopKCompressor::SegmentedTopKCompressor(std::size_t segment_length)
    : segment_length_(segment_length) {
  if (segment_length_ == 0) {
    throw std::invalid_argument("segment length must be >= 1");
  }
}

std::size_t SegmentedTopKCompressor::num_levels(std::size_t dim) const {
  return (dim + segment_length_ - 1) / segment_length_;
}

Vector SegmentedTopKCompressor::compress(const Vector& v,
                                         std::size_t level) const {
  validate_gradient(v);
  std::size_t levels = num_levels(v.size());
  check_level(level, levels, 0);
  if (level == levels) return v;
  Vector out(v.size(), 0.0);
  auto order = magnitude_order(v);
  std::size_t count = std::min(level * segment_length_, v.size());
  for (std::size_t i = 0; i < count; ++i) {
    out[order[i]] = v[order[i]];
  }
  return out;
}

ResidualPayload SegmentedTopKCompressor::residual(const Vector& v,
                                                  std::size_t level) const {
  validate_gradient(v);
  check_level(level, num_levels(v.size()), 1);
  auto order = magnitude_order(v);
  std::size_t begin = (level - 1) * segment_length_;
  std::size_t end = std::min(begin + segment_length_, v.size());
  return sparse_from_positions(
      v, std::vector<std::size_t>(order.begin() + begin, order.begin() + end));
}

std::vector<double> SegmentedTopKCompressor::residual_norms(
    const Vector& v) const {
  auto order = magnitude_order(v);
  std::size_t levels = num_levels(v.size());
  std::vector<double> out(levels, 0.0);
  for (std::size_t l = 0; l < levels; ++l) {
    std::size_t begin = l * segment_length_;
    std::size_t end = std::min(begin + segment_length_, v.size());
    double sq = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      sq += v[order[i]] * v[order[i]];
    }
    out[l] = std::sqrt(sq);
  }
  return out;
}

std::uint64_t SegmentedTopKCompressor::message_bits(const ResidualPayload&,
                                                    std::size_t dim) const {
  // full segment transmitted (zeros included) plus segment id and level
  return segment_length_ * 64 + 2 * ceil_log2(num_levels(dim));
}

std::uint64_t SegmentedTopKCompressor::direct_message_bits(
    std::size_t level, std::size_t dim) const {
  return level * (segment_length_ * 64 + ceil_log2(num_levels(dim)));
}

// ---------------------------------------------------------------------------
// Fixed point

namespace {

// 63-fraction-bit magnitude representation of m in [0, 1]; m == 1 maps to
// all ones. Exact: ldexp is a power-of-two scale and the floor result always
// fits the 53-bit significand.
std::uint64_t fixed63(double m) {
  if (m >= 1.0) return (1ULL << 63) - 1;
  return static_cast<std::uint64_t>(std::floor(std::ldexp(m, 63)));
}

}  // namespace

FixedPointCompressor::FixedPointCompressor(double fixed_scale)
    : fixed_scale_(fixed_scale) {
  if (!(fixed_scale > 0.0)) {
    throw std::invalid_argument("fixed-point scale must be positive");
  }
}

double FixedPointCompressor::scale_for(const Vector& v) const {
  if (fixed_scale_) {
    for (double x : v) {
      if (std::abs(x) > *fixed_scale_) {
        throw std::invalid_argument("entry exceeds the fixed scale");
      }
    }
    return *fixed_scale_;
  }
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

Vector FixedPointCompressor::compress(const Vector& v,
                                      std::size_t level) const {
  validate_gradient(v);
  check_level(level, kLevels, 0);
  if (level == 0) return Vector(v.size(), 0.0);
  if (level == kLevels) return v;  // identity at the top level
  double scale = scale_for(v);
  Vector out(v.size(), 0.0);
  if (scale == 0.0) return out;
  int shift = static_cast<int>(kLevels - level);
  for (std::size_t j = 0; j < v.size(); ++j) {
    std::uint64_t m = fixed63(std::abs(v[j]) / scale);
    std::uint64_t kept = (m >> shift) << shift;
    double mag = std::ldexp(static_cast<double>(kept), -63) * scale;
    out[j] = std::signbit(v[j]) ? -mag : mag;
  }
  return out;
}

ResidualPayload FixedPointCompressor::residual(const Vector& v,
                                               std::size_t level) const {
  validate_gradient(v);
  check_level(level, kLevels, 1);
  double scale = scale_for(v);
  BitPlane plane;
  plane.dim = v.size();
  plane.level = level;
  plane.scale = scale;
  plane.signs.resize(v.size(), 0);
  plane.bits.resize(v.size(), 0);
  if (scale == 0.0) return plane;
  int shift = static_cast<int>(kLevels - level);
  for (std::size_t j = 0; j < v.size(); ++j) {
    std::uint64_t m = fixed63(std::abs(v[j]) / scale);
    plane.bits[j] = static_cast<std::uint8_t>((m >> shift) & 1ULL);
    plane.signs[j] = std::signbit(v[j]) ? 1 : 0;
  }
  return plane;
}

std::vector<double> FixedPointCompressor::residual_norms(
    const Vector& v) const {
  double scale = scale_for(v);
  std::vector<double> out(kLevels, 0.0);
  if (scale == 0.0) return out;
  std::vector<std::size_t> counts(kLevels, 0);
  for (double x : v) {
    std::uint64_t m = fixed63(std::abs(x) / scale);
    for (std::size_t l = 1; l <= kLevels; ++l) {
      counts[l - 1] += (m >> (kLevels - l)) & 1ULL;
    }
  }
  for (std::size_t l = 1; l <= kLevels; ++l) {
    out[l - 1] = std::ldexp(scale, -static_cast<int>(l)) *
                 std::sqrt(static_cast<double>(counts[l - 1]));
  }
  return out;
}

std::uint64_t FixedPointCompressor::message_bits(const ResidualPayload&,
                                                 std::size_t dim) const {
  // sign + info bit per entry, the 64-bit scale, and the level id
  return 2 * dim + 64 + ceil_log2(kLevels);
}

std::uint64_t FixedPointCompressor::direct_message_bits(std::size_t level,
                                                        std::size_t dim) const {
  return dim * (level + 1) + 64;
}

// ---------------------------------------------------------------------------
// Floating point

namespace {

struct FloatParts {
  std::uint8_t sign;
  std::uint16_t exponent;  // biased; 0 only for a zero entry
  std::uint64_t mantissa;
};

FloatParts float_parts(double x) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
  FloatParts p;
  p.sign = static_cast<std::uint8_t>(bits >> 63);
  p.exponent = static_cast<std::uint16_t>((bits >> 52) & 0x7FF);
  p.mantissa = bits & ((1ULL << 52) - 1);
  if (p.exponent == 0 && p.mantissa != 0) {
    throw std::invalid_argument(
        "floating-point compressor requires zero or normal entries");
  }
  return p;
}

}  // namespace

Vector FloatingPointCompressor::compress(const Vector& v,
                                         std::size_t level) const {
  validate_gradient(v);
  check_level(level, kLevels, 0);
  if (level == 0) return Vector(v.size(), 0.0);
  Vector out(v.size());
  std::uint64_t keep = ~((1ULL << (kLevels - level)) - 1);
  if (level == kLevels) keep = ~0ULL;
  for (std::size_t j = 0; j < v.size(); ++j) {
    FloatParts p = float_parts(v[j]);
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v[j]);
    if (p.exponent == 0) {
      out[j] = v[j];  // zero entry
    } else {
      std::uint64_t masked = (bits & 0xFFF0000000000000ULL) |
                             ((bits & ((1ULL << 52) - 1)) & keep);
      out[j] = std::bit_cast<double>(masked);
    }
  }
  return out;
}

ResidualPayload FloatingPointCompressor::residual(const Vector& v,
                                                  std::size_t level) const {
  validate_gradient(v);
  check_level(level, kLevels, 1);
  MantissaPlane plane;
  plane.dim = v.size();
  plane.level = level;
  plane.signs.resize(v.size(), 0);
  plane.exponents.resize(v.size(), 0);
  plane.bits.resize(v.size(), 0);
  for (std::size_t j = 0; j < v.size(); ++j) {
    FloatParts p = float_parts(v[j]);
    plane.signs[j] = p.sign;
    plane.exponents[j] = p.exponent;
    plane.bits[j] =
        static_cast<std::uint8_t>((p.mantissa >> (kLevels - level)) & 1ULL);
  }
  return plane;
}

std::vector<double> FloatingPointCompressor::residual_norms(
    const Vector& v) const {
  std::vector<double> sq(kLevels, 0.0);
  for (double x : v) {
    FloatParts p = float_parts(x);
    if (p.exponent == 0) continue;
    int e = static_cast<int>(p.exponent) - 1023;
    double lead = std::ldexp(1.0 + (((p.mantissa >> 51) & 1ULL) ? 0.5 : 0.0), e);
    sq[0] += lead * lead;
    for (std::size_t l = 2; l <= kLevels; ++l) {
      if ((p.mantissa >> (kLevels - l)) & 1ULL) {
        double t = std::ldexp(1.0, e - static_cast<int>(l));
        sq[l - 1] += t * t;
      }
    }
  }
  std::vector<double> out(kLevels);
  for (std::size_t l = 0; l < kLevels; ++l) out[l] = std::sqrt(sq[l]);
  return out;
}

std::uint64_t FloatingPointCompressor::message_bits(const ResidualPayload&,
                                                    std::size_t dim) const {
  // sign + 11-bit exponent + one mantissa bit per entry, plus the level id
  return 13 * dim + ceil_log2(kLevels);
}

std::uint64_t FloatingPointCompressor::direct_message_bits(
    std::size_t level, std::size_t dim) const {
  return dim * (12 + level);
}

// ---------------------------------------------------------------------------
// Round-to-nearest

RtnCompressor::RtnCompressor(double clip, std::size_t levels)
    : clip_(clip), levels_(levels) {
  if (!(clip > 0.0)) throw std::invalid_argument("rtn clip bound must be > 0");
  if (levels < 2 || levels > 62) {
    throw std::invalid_argument("rtn levels must be in [2, 62]");
  }
}

double RtnCompressor::step(std::size_t level) const {
  return 2.0 * clip_ / (std::ldexp(1.0, static_cast<int>(level)) - 1.0);
}

namespace {

std::int64_t rtn_code(double x, double step, std::int64_t qmax) {
  std::int64_t code = std::llround(x / step);
  return std::clamp<std::int64_t>(code, -qmax, qmax);
}

}  // namespace

Vector RtnCompressor::compress(const Vector& v, std::size_t level) const {
  validate_gradient(v);
  check_level(level, levels_, 0);
  if (level == 0) return Vector(v.size(), 0.0);
  if (level == levels_) return v;
  Vector out(v.size());
  double delta = step(level);
  std::int64_t qmax = (1LL << (level - 1)) - 1;
  for (std::size_t j = 0; j < v.size(); ++j) {
    out[j] = delta * static_cast<double>(rtn_code(v[j], delta, qmax));
  }
  return out;
}

ResidualPayload RtnCompressor::residual(const Vector& v,
                                        std::size_t level) const {
  validate_gradient(v);
  check_level(level, levels_, 1);
  QuantizedGrid grid;
  grid.dim = v.size();
  grid.level = level;
  if (level == levels_) {
    grid.raw_hi = v;
  } else {
    grid.step_hi = step(level);
    std::int64_t qmax = (1LL << (level - 1)) - 1;
    grid.codes_hi.resize(v.size());
    for (std::size_t j = 0; j < v.size(); ++j) {
      grid.codes_hi[j] = rtn_code(v[j], grid.step_hi, qmax);
    }
  }
  if (level > 1) {
    grid.step_lo = step(level - 1);
    std::int64_t qmax = (1LL << (level - 2)) - 1;
    grid.codes_lo.resize(v.size());
    for (std::size_t j = 0; j < v.size(); ++j) {
      grid.codes_lo[j] = rtn_code(v[j], grid.step_lo, qmax);
    }
  }
  return grid;
}

std::uint64_t RtnCompressor::message_bits(const ResidualPayload& payload,
                                          std::size_t dim) const {
  const auto& grid = std::get<QuantizedGrid>(payload);
  // l bits per level-l code (64 when the top level transmits raw values),
  // both planes of the residual, the 64-bit step, and the level id
  std::uint64_t hi_bits = grid.raw_hi.empty() ? grid.level * dim : 64 * dim;
  std::uint64_t lo_bits = grid.codes_lo.empty() ? 0 : (grid.level - 1) * dim;
  return hi_bits + lo_bits + 64 + ceil_log2(levels_);
}

std::uint64_t RtnCompressor::direct_message_bits(std::size_t level,
                                                 std::size_t dim) const {
  return dim * level + 64;
}

// ---------------------------------------------------------------------------
// Identity

Vector IdentityCompressor::compress(const Vector& v, std::size_t level) const {
  validate_gradient(v);
  check_level(level, 1, 0);
  if (level == 0) return Vector(v.size(), 0.0);
  return v;
}

ResidualPayload IdentityCompressor::residual(const Vector& v,
                                             std::size_t level) const {
  validate_gradient(v);
  check_level(level, 1, 1);
  SparseDelta out;
  out.dim = v.size();
  for (std::size_t j = 0; j < v.size(); ++j) {
    if (v[j] != 0.0) {
      out.indices.push_back(j);
      out.values.push_back(v[j]);
    }
  }
  return out;
}

std::uint64_t IdentityCompressor::message_bits(const ResidualPayload&,
                                               std::size_t dim) const {
  return 64 * dim;
}

std::uint64_t IdentityCompressor::direct_message_bits(std::size_t,
                                                      std::size_t dim) const {
  return 64 * dim;
}

// ---------------------------------------------------------------------------

std::vector<double> alpha_profile(const MultilevelCompressor& comp,
                                  const Vector& v) {
  validate_gradient(v);
  double total = norms(v).l2_squared;
  if (total == 0.0) {
    throw std::domain_error("alpha profile undefined for a zero vector");
  }
  std::size_t levels = comp.num_levels(v.size());
  std::vector<double> alpha(levels + 1, 0.0);
  for (std::size_t l = 1; l <= levels; ++l) {
    alpha[l] = norms(comp.compress(v, l)).l2_squared / total;
  }
  return alpha;
}

std::vector<std::uint8_t> serialize_bitplane(const BitPlane& plane,
                                             std::size_t num_levels) {
  std::vector<std::uint8_t> out;
  std::size_t bitpos = 0;
  auto push_bit = [&](bool b) {
    if (bitpos % 8 == 0) out.push_back(0);
    if (b) out.back() |= static_cast<std::uint8_t>(1u << (7 - bitpos % 8));
    ++bitpos;
  };
  std::uint64_t level_bits = ceil_log2(num_levels);
  for (std::uint64_t i = level_bits; i-- > 0;) {
    push_bit((plane.level >> i) & 1ULL);
  }
  std::uint64_t scale_bits = std::bit_cast<std::uint64_t>(plane.scale);
  for (int i = 63; i >= 0; --i) {
    push_bit((scale_bits >> i) & 1ULL);
  }
  for (std::size_t j = 0; j < plane.dim; ++j) {
    push_bit(plane.signs[j]);
    push_bit(plane.bits[j]);
  }
  return out;
}

}  // namespace mlmc
