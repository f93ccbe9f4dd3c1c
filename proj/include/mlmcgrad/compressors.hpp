#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mlmcgrad/core.hpp"

// Multilevel compressor family. A multilevel compressor C^l, l = 0..L, maps
// a vector to progressively milder compressions: C^0(v) = 0 and C^L(v) = v.
// Each implementation also extracts the between-level residual
// C^l(v) - C^{l-1}(v) in a compact transmittable form and accounts its exact
// encoded size in bits.

namespace mlmc {

class MultilevelCompressor {
 public:
  virtual ~MultilevelCompressor() = default;

  virtual std::string name() const = 0;

  // Number of levels L for a vector of the given dimension.
  virtual std::size_t num_levels(std::size_t dim) const = 0;

  // C^l(v) for 0 <= l <= L. Throws std::out_of_range otherwise.
  virtual Vector compress(const Vector& v, std::size_t level) const = 0;

  // Compact form of C^l(v) - C^{l-1}(v) for 1 <= l <= L.
  virtual ResidualPayload residual(const Vector& v, std::size_t level) const = 0;

  // l2 norms of all residuals, Delta_1..Delta_L. The default densifies each
  // level; subclasses override with single-pass computations.
  virtual std::vector<double> residual_norms(const Vector& v) const;

  // Exact encoded size of a residual message, including the level id.
  virtual std::uint64_t message_bits(const ResidualPayload& payload,
                                     std::size_t dim) const = 0;

  // Encoded size when the level-l compression is transmitted directly
  // (biased use, no multilevel residual).
  virtual std::uint64_t direct_message_bits(std::size_t level,
                                            std::size_t dim) const = 0;
};

// Retains the l largest-magnitude entries; ties broken toward the lower
// index. L = d. The level-l residual is the l-th largest entry alone.
class TopKCompressor final : public MultilevelCompressor {
 public:
  std::string name() const override { return "topk"; }
  std::size_t num_levels(std::size_t dim) const override { return dim; }
  Vector compress(const Vector& v, std::size_t level) const override;
  ResidualPayload residual(const Vector& v, std::size_t level) const override;
  std::vector<double> residual_norms(const Vector& v) const override;
  std::uint64_t message_bits(const ResidualPayload& payload,
                             std::size_t dim) const override;
  std::uint64_t direct_message_bits(std::size_t level,
                                    std::size_t dim) const override;
};

// Sorts indices by descending magnitude, partitions the sorted order into
// consecutive blocks of s (the last may be shorter), and keeps the first l
// blocks mapped back to original positions. L = ceil(d/s).
class SegmentedTopKCompressor final : public MultilevelCompressor {
 public:
  explicit SegmentedTopKCompressor(std::size_t segment_length);

  std::size_t segment_length() const { return segment_length_; }

  std::string name() const override { return "stopk"; }
  std::size_t num_levels(std::size_t dim) const override;
  Vector compress(const Vector& v, std::size_t level) const override;
  ResidualPayload residual(const Vector& v, std::size_t level) const override;
  std::vector<double> residual_norms(const Vector& v) const override;
  std::uint64_t message_bits(const ResidualPayload& payload,
                             std::size_t dim) const override;
  std::uint64_t direct_message_bits(std::size_t level,
                                    std::size_t dim) const override;

 private:
  std::size_t segment_length_;
};

// Element-wise truncation of the 63-bit binary fraction of |v_j| / scale,
// sign carried separately. By default scale is the largest magnitude, which
// normalizes to exactly 1.0 and is encoded as all-ones fraction bits
// (value 1 - 2^-63); a fixed scale may be supplied instead, in which case
// all entries must satisfy |v_j| <= scale.
class FixedPointCompressor final : public MultilevelCompressor {
 public:
  static constexpr std::size_t kLevels = 63;

  FixedPointCompressor() = default;
  explicit FixedPointCompressor(double fixed_scale);

  double scale_for(const Vector& v) const;

  std::string name() const override { return "fixed_point"; }
  std::size_t num_levels(std::size_t) const override { return kLevels; }
  Vector compress(const Vector& v, std::size_t level) const override;
  ResidualPayload residual(const Vector& v, std::size_t level) const override;
  std::vector<double> residual_norms(const Vector& v) const override;
  std::uint64_t message_bits(const ResidualPayload& payload,
                             std::size_t dim) const override;
  std::uint64_t direct_message_bits(std::size_t level,
                                    std::size_t dim) const override;

 private:
  std::optional<double> fixed_scale_;
};

// Element-wise truncation of the IEEE-754 mantissa to the l most significant
// bits; sign and exponent are kept at every level. L = 52. Entries must be
// zero or normal doubles.
class FloatingPointCompressor final : public MultilevelCompressor {
 public:
  static constexpr std::size_t kLevels = 52;

  std::string name() const override { return "floating_point"; }
  std::size_t num_levels(std::size_t) const override { return kLevels; }
  Vector compress(const Vector& v, std::size_t level) const override;
  ResidualPayload residual(const Vector& v, std::size_t level) const override;
  std::vector<double> residual_norms(const Vector& v) const override;
  std::uint64_t message_bits(const ResidualPayload& payload,
                             std::size_t dim) const override;
  std::uint64_t direct_message_bits(std::size_t level,
                                    std::size_t dim) const override;
};

// Round-to-nearest onto the uniform grid with step 2c/(2^l - 1); codes are
// clipped to [-(2^(l-1)-1), 2^(l-1)-1] so outputs stay within [-c, c]. The
// top level is the identity so the multilevel contract holds.
class RtnCompressor final : public MultilevelCompressor {
 public:
  RtnCompressor(double clip, std::size_t levels);

  double clip() const { return clip_; }
  double step(std::size_t level) const;

  std::string name() const override { return "rtn"; }
  std::size_t num_levels(std::size_t) const override { return levels_; }
  Vector compress(const Vector& v, std::size_t level) const override;
  ResidualPayload residual(const Vector& v, std::size_t level) const override;
  std::uint64_t message_bits(const ResidualPayload& payload,
                             std::size_t dim) const override;
  std::uint64_t direct_message_bits(std::size_t level,
                                    std::size_t dim) const override;

 private:
  double clip_;
  std::size_t levels_;
};

// Single-level identity, i.e. no compression. L = 1.
class IdentityCompressor final : public MultilevelCompressor {
 public:
  std::string name() const override { return "identity"; }
  std::size_t num_levels(std::size_t) const override { return 1; }
  Vector compress(const Vector& v, std::size_t level) const override;
  ResidualPayload residual(const Vector& v, std::size_t level) const override;
  std::uint64_t message_bits(const ResidualPayload& payload,
                             std::size_t dim) const override;
  std::uint64_t direct_message_bits(std::size_t level,
                                    std::size_t dim) const override;
};

// Retained-energy profile alpha_l = ||C^l(v)||^2 / ||v||^2 for l = 0..L.
// Throws std::domain_error on a zero vector.
std::vector<double> alpha_profile(const MultilevelCompressor& comp,
                                  const Vector& v);

// Wire layout of a bit plane, for golden tests:
// [level: ceil(log2 L) bits][scale: 64 bits][per entry: sign bit, info bit],
// entries in index order, bits packed MSB-first, zero-padded to a byte.
std::vector<std::uint8_t> serialize_bitplane(const BitPlane& plane,
                                             std::size_t num_levels);

}  // namespace mlmc
