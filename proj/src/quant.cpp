// SPDX-License-Identifier: Apache-2.0
#include "qfs/quant.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "qfs/tensor.hpp"

namespace qfs {

namespace {

constexpr float kDegenerateWidening = 1e-6f;
constexpr double kCodeLimit = 1e18;

void check_bits(int bits) {
  if (bits < kMinBits || bits > kMaxBits) {
    throw std::invalid_argument("bit-width " + std::to_string(bits) +
                                " outside [2, 16]");
  }
}

// x / delta with the unrounded step. Offsets and codes share this expression
// so x_min always lands on code 0, including ties such as -127.5.
double steps(double x, float x_min, float x_max, int bits) {
  const double levels = static_cast<double>((std::int64_t{1} << bits) - 1);
  return x * levels /
         (static_cast<double>(x_max) - static_cast<double>(x_min));
}

}  // namespace

std::int64_t round_nearest(double x) {
  if (!std::isfinite(x)) {
    throw std::invalid_argument("round_nearest: non-finite input");
  }
  // std::round is exact; floor(|x| + 0.5) misrounds 0.49999999999999994.
  const double r = std::round(x);
  if (std::fabs(r) > 9.0e18) {
    throw std::invalid_argument("round_nearest: magnitude exceeds int64");
  }
  return static_cast<std::int64_t>(r);
}

QuantParams compute_quant_params(float x_min, float x_max, int bits) {
  check_bits(bits);
  if (!std::isfinite(x_min) || !std::isfinite(x_max)) {
    throw std::invalid_argument("quantization range bounds must be finite");
  }
  if (!(x_max > x_min)) {
    throw std::invalid_argument("degenerate quantization range [" +
                                std::to_string(x_min) + ", " +
                                std::to_string(x_max) + "]");
  }
  QuantParams p;
  p.x_min = x_min;
  p.x_max = x_max;
  p.bits = bits;
  const double levels = static_cast<double>(p.max_code());
  p.delta = static_cast<float>(
      (static_cast<double>(x_max) - static_cast<double>(x_min)) / levels);
  if (!(p.delta > 0.0f) || !std::isfinite(p.delta)) {
    throw std::invalid_argument("quantization step underflows for range");
  }
  const std::int64_t offset =
      round_nearest(steps(x_min, x_min, x_max, bits));
  if (offset < std::numeric_limits<std::int32_t>::min() ||
      offset > std::numeric_limits<std::int32_t>::max()) {
    throw std::invalid_argument("quantization offset overflows int32");
  }
  p.offset = static_cast<std::int32_t>(offset);
  return p;
}

QuantParams params_for_range(float x_min, float x_max, int bits) {
  if (x_min == x_max) {
    float lo = x_min - kDegenerateWidening;
    float hi = x_max + kDegenerateWidening;
    if (lo == x_min) lo = std::nextafter(x_min, -std::numeric_limits<float>::infinity());
    if (hi == x_max) hi = std::nextafter(x_max, std::numeric_limits<float>::infinity());
    return compute_quant_params(lo, hi, bits);
  }
  return compute_quant_params(x_min, x_max, bits);
}

std::uint16_t quantize_value(float x, const QuantParams& p) {
  if (!std::isfinite(x)) {
    throw std::invalid_argument("quantize_value: non-finite input");
  }
  const double scaled = steps(x, p.x_min, p.x_max, p.bits);
  const std::int64_t top = p.max_code();
  if (scaled > kCodeLimit) return static_cast<std::uint16_t>(top);
  if (scaled < -kCodeLimit) return 0;
  const std::int64_t code = round_nearest(scaled) - p.offset;
  return static_cast<std::uint16_t>(std::clamp<std::int64_t>(code, 0, top));
}

float dequantize_value(std::int64_t code, const QuantParams& p) {
  if (code < 0 || code > p.max_code()) {
    throw std::invalid_argument("code " + std::to_string(code) +
                                " outside [0, 2^bits - 1]");
  }
  return static_cast<float>(static_cast<double>(p.delta) *
                            static_cast<double>(code + p.offset));
}

QuantTensor quantize_tensor(const FloatTensor& t, const QuantParams& p) {
  std::vector<std::uint16_t> codes(t.size());
  const auto data = t.data();
  for (std::size_t i = 0; i < codes.size(); ++i) {
    codes[i] = quantize_value(data[i], p);
  }
  return QuantTensor(t.shape(), std::move(codes), p);
}

FloatTensor dequantize_tensor(const QuantTensor& qt) {
  std::vector<float> values(qt.size());
  const auto codes = qt.codes();
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = dequantize_value(codes[i], qt.params());
  }
  return FloatTensor(qt.shape(), std::move(values));
}

RangeObserver RangeObserver::observe(const FloatTensor& t) const {
  RangeObserver out = *this;
  for (float v : t.data()) {
    out.seen_min = std::min(out.seen_min, v);
    out.seen_max = std::max(out.seen_max, v);
  }
  out.count += t.size();
  return out;
}

RangeObserver RangeObserver::merge(const RangeObserver& other) const {
  RangeObserver out;
  out.seen_min = std::min(seen_min, other.seen_min);
  out.seen_max = std::max(seen_max, other.seen_max);
  out.count = count + other.count;
  return out;
}

QuantParams RangeObserver::params(int bits) const {
  if (empty()) {
    throw std::logic_error("RangeObserver: no values observed");
  }
  return params_for_range(seen_min, seen_max, bits);
}

}  // namespace qfs
