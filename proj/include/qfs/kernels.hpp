// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "qfs/quant.hpp"
#include "qfs/tensor.hpp"

namespace qfs {

enum class Padding { same, valid };
enum class ActivationKind { none, relu, relu6 };

std::string_view to_string(Padding p);
std::string_view to_string(ActivationKind k);
Padding parse_padding(std::string_view s);
ActivationKind parse_activation(std::string_view s);

struct ConvGeometry {
  std::int64_t out_h = 0;
  std::int64_t out_w = 0;
  std::int64_t pad_top = 0;
  std::int64_t pad_left = 0;
};

struct ConvSpec {
  int stride = 1;
  Padding padding = Padding::same;
  int kernel_h = 1;
  int kernel_w = 1;

  /// SAME: out = ceil(in / stride), padding split with the extra row/column
  /// at the bottom/right. VALID: out = (in - k) / stride + 1.
  /// Throws std::invalid_argument when the output would be empty.
  ConvGeometry geometry(std::int64_t in_h, std::int64_t in_w) const;

  friend bool operator==(const ConvSpec&, const ConvSpec&) = default;
};

/// Requantization of an integer accumulator back to output codes.
struct RequantSpec {
  QuantParams in_params;
  QuantParams weight_params;
  QuantParams out_params;
  /// Δ_in·Δ_w / Δ_out, evaluated in double from the f32 steps.
  double multiplier = 0.0;

  static RequantSpec make(const QuantParams& in, const QuantParams& weights,
                          const QuantParams& out);
};

/// Integer convolution accumulators, one per output element.
///
/// Values are held in 64-bit storage. For operands of at most 8 bits the
/// kernels refuse shapes whose worst case could leave the int32 range, so
/// every value is then a valid int32 accumulator.
struct Accumulator {
  Shape shape;
  std::vector<std::int64_t> values;
};

/// Largest accumulator magnitude permitted for the given operand widths:
/// INT32_MAX when both are <= 8 bits, 2^62 otherwise.
std::int64_t accumulator_limit(int input_bits, int weight_bits);

// Float reference kernels. Sums are accumulated in double and rounded to f32
// once per output element. Bias spans may be empty (no bias).

FloatTensor conv2d_float(const FloatTensor& input, const FloatTensor& weights,
                         std::span<const float> bias, const ConvSpec& spec);
FloatTensor depthwise_conv2d_float(const FloatTensor& input,
                                   const FloatTensor& weights,
                                   std::span<const float> bias,
                                   const ConvSpec& spec);
FloatTensor activation_float(const FloatTensor& t, ActivationKind kind);
FloatTensor avg_pool_float(const FloatTensor& t, std::int64_t window_h,
                           std::int64_t window_w);
FloatTensor softmax_float(const FloatTensor& t);

// Fixed-point kernels.

/// Bias in the accumulator domain: round_nearest(b / (Δ_in·Δ_w)).
std::vector<std::int64_t> quantize_bias(std::span<const float> bias,
                                        const QuantParams& in_params,
                                        const QuantParams& weight_params);

/// accum = Σ (x_q + δ_x)(w_q + δ_w) + bias. Padded taps contribute zero,
/// which is the real value 0 in both pipelines.
Accumulator conv2d_accumulate(const QuantTensor& input,
                              const QuantTensor& weights,
                              std::span<const std::int64_t> bias,
                              const ConvSpec& spec);
Accumulator depthwise_conv2d_accumulate(const QuantTensor& input,
                                        const QuantTensor& weights,
                                        std::span<const std::int64_t> bias,
                                        const ConvSpec& spec);

/// clamp(round_nearest(multiplier·accum) - δ_out, 0, 2^b - 1)
std::uint16_t requantize(std::int64_t accum, const RequantSpec& rq);
QuantTensor requantize_tensor(const Accumulator& acc, const RequantSpec& rq);

QuantTensor quantized_conv2d(const QuantTensor& input,
                             const QuantTensor& weights,
                             std::span<const std::int64_t> bias,
                             const ConvSpec& spec, const RequantSpec& rq);
QuantTensor quantized_depthwise_conv2d(const QuantTensor& input,
                                       const QuantTensor& weights,
                                       std::span<const std::int64_t> bias,
                                       const ConvSpec& spec,
                                       const RequantSpec& rq);

/// Clamps codes at the representations of 0 (and 6 for relu6). Params are
/// unchanged.
QuantTensor activation_quant(const QuantTensor& qt, ActivationKind kind);

/// Non-overlapping average pool in the code domain with a single rounding.
/// The window must tile the spatial extent exactly.
QuantTensor avg_pool_quant(const QuantTensor& qt, std::int64_t window_h,
                           std::int64_t window_w);

}  // namespace qfs
