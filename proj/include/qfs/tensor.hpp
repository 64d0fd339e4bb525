// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qfs/quant.hpp"

namespace qfs {

/// Four-dimensional extent in NHWC order.
///
/// Activations use (batch, height, width, channels). Weight tensors reuse the
/// same container with a fixed reinterpretation of the axes:
///   - standard / pointwise conv: (kh, kw, c_in, c_out)
///   - depthwise conv:            (1, kh, kw, c)
/// so the last axis is always the output channel.
struct Shape {
  std::int64_t n = 1;
  std::int64_t h = 1;
  std::int64_t w = 1;
  std::int64_t c = 1;

  /// Throws std::invalid_argument if any dimension is < 1 or the element
  /// count does not fit in size_t.
  void validate() const;

  std::size_t elements() const {
    return static_cast<std::size_t>(n * h * w * c);
  }

  /// Row-major NHWC offset. No bounds checking.
  std::size_t offset(std::int64_t in, std::int64_t ih, std::int64_t iw,
                     std::int64_t ic) const {
    return static_cast<std::size_t>(((in * h + ih) * w + iw) * c + ic);
  }

  bool contains(std::int64_t in, std::int64_t ih, std::int64_t iw,
                std::int64_t ic) const {
    return in >= 0 && in < n && ih >= 0 && ih < h && iw >= 0 && iw < w &&
           ic >= 0 && ic < c;
  }

  std::string str() const;

  friend bool operator==(const Shape&, const Shape&) = default;
};

/// Dense f32 tensor. Immutable after construction; every value is finite.
class FloatTensor {
 public:
  FloatTensor(Shape shape, std::vector<float> data);

  /// Zero-filled tensor.
  static FloatTensor zeros(Shape shape);

  const Shape& shape() const { return shape_; }
  std::span<const float> data() const { return data_; }
  std::size_t size() const { return data_.size(); }

  float at(std::int64_t n, std::int64_t h, std::int64_t w,
           std::int64_t c) const;
  float operator[](std::size_t i) const { return data_[i]; }

  friend bool operator==(const FloatTensor&, const FloatTensor&) = default;

 private:
  Shape shape_;
  std::vector<float> data_;
};

/// Tensor of quantization codes sharing one QuantParams (per-tensor scheme).
///
/// Codes are held in 16-bit storage so the same container serves every
/// supported bit-width; each code lies in [0, 2^bits - 1].
class QuantTensor {
 public:
  QuantTensor(Shape shape, std::vector<std::uint16_t> codes,
              QuantParams params);

  const Shape& shape() const { return shape_; }
  std::span<const std::uint16_t> codes() const { return codes_; }
  const QuantParams& params() const { return params_; }
  std::size_t size() const { return codes_.size(); }

  std::uint16_t at(std::int64_t n, std::int64_t h, std::int64_t w,
                   std::int64_t c) const;
  std::uint16_t operator[](std::size_t i) const { return codes_[i]; }

  friend bool operator==(const QuantTensor&, const QuantTensor&) = default;

 private:
  Shape shape_;
  std::vector<std::uint16_t> codes_;
  QuantParams params_;
};

}  // namespace qfs
