// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <limits>

namespace qfs {

class FloatTensor;
class QuantTensor;

inline constexpr int kMinBits = 2;
inline constexpr int kMaxBits = 16;
inline constexpr int kDefaultBits = 8;

/// Uniform affine quantizer parameters for one tensor.
///
///   delta  = (x_max - x_min) / (2^bits - 1)
///   offset = round_nearest(x_min / delta)
///   code   = clamp(round_nearest(x / delta) - offset, 0, 2^bits - 1)
///   x_hat  = delta * (code + offset)
///
/// delta is stored as f32; the divisions by delta in offset and code use the
/// unrounded (x_max - x_min) / (2^bits - 1) in double.
/// Float 0 maps to code -offset exactly whenever that code is in range.
struct QuantParams {
  float x_min = 0.0f;
  float x_max = 1.0f;
  int bits = kDefaultBits;
  float delta = 1.0f / 255.0f;
  std::int32_t offset = 0;

  std::int32_t max_code() const { return (std::int32_t{1} << bits) - 1; }
  float range() const { return x_max - x_min; }

  friend bool operator==(const QuantParams&, const QuantParams&) = default;
};

/// Round half away from zero: sgn(x) * floor(|x| + 0.5).
/// Throws std::invalid_argument for non-finite x or results outside int64.
std::int64_t round_nearest(double x);

/// Derives delta/offset from a range. Throws std::invalid_argument when
/// x_max <= x_min, either bound is non-finite, or bits is outside [2, 16].
QuantParams compute_quant_params(float x_min, float x_max,
                                 int bits = kDefaultBits);

/// Like compute_quant_params, but a degenerate range (x_min == x_max) is
/// widened symmetrically by 1e-6 so constant tensors stay representable.
QuantParams params_for_range(float x_min, float x_max, int bits = kDefaultBits);

std::uint16_t quantize_value(float x, const QuantParams& p);
float dequantize_value(std::int64_t code, const QuantParams& p);

QuantTensor quantize_tensor(const FloatTensor& t, const QuantParams& p);
FloatTensor dequantize_tensor(const QuantTensor& qt);

/// Running min/max over every element seen so far.
struct RangeObserver {
  float seen_min = std::numeric_limits<float>::infinity();
  float seen_max = -std::numeric_limits<float>::infinity();
  std::uint64_t count = 0;

  bool empty() const { return count == 0; }

  /// Returns a copy expanded to cover t.
  RangeObserver observe(const FloatTensor& t) const;

  /// Order-insensitive combination of two shards.
  RangeObserver merge(const RangeObserver& other) const;

  /// Throws std::logic_error when nothing has been observed.
  QuantParams params(int bits = kDefaultBits) const;
};

}  // namespace qfs
