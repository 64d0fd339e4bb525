// SPDX-License-Identifier: Apache-2.0
#include "qfs/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace qfs {

std::string_view to_string(Padding p) {
  return p == Padding::same ? "same" : "valid";
}

std::string_view to_string(ActivationKind k) {
  switch (k) {
    case ActivationKind::none: return "none";
    case ActivationKind::relu: return "relu";
    case ActivationKind::relu6: return "relu6";
  }
  return "none";
}

Padding parse_padding(std::string_view s) {
  if (s == "same") return Padding::same;
  if (s == "valid") return Padding::valid;
  throw std::invalid_argument("unknown padding '" + std::string(s) + "'");
}

ActivationKind parse_activation(std::string_view s) {
  if (s == "none") return ActivationKind::none;
  if (s == "relu") return ActivationKind::relu;
  if (s == "relu6") return ActivationKind::relu6;
  throw std::invalid_argument("unknown activation '" + std::string(s) + "'");
}

ConvGeometry ConvSpec::geometry(std::int64_t in_h, std::int64_t in_w) const {
  if (stride < 1 || kernel_h < 1 || kernel_w < 1) {
    throw std::invalid_argument("conv stride and kernel size must be >= 1");
  }
  ConvGeometry g;
  if (padding == Padding::same) {
    g.out_h = (in_h + stride - 1) / stride;
    g.out_w = (in_w + stride - 1) / stride;
    const auto pad_h =
        std::max<std::int64_t>((g.out_h - 1) * stride + kernel_h - in_h, 0);
    const auto pad_w =
        std::max<std::int64_t>((g.out_w - 1) * stride + kernel_w - in_w, 0);
    g.pad_top = pad_h / 2;
    g.pad_left = pad_w / 2;
  } else {
    if (in_h < kernel_h || in_w < kernel_w) {
      throw std::invalid_argument("VALID conv: kernel larger than input");
    }
    g.out_h = (in_h - kernel_h) / stride + 1;
    g.out_w = (in_w - kernel_w) / stride + 1;
  }
  if (g.out_h < 1 || g.out_w < 1) {
    throw std::invalid_argument("conv produces an empty output");
  }
  return g;
}

RequantSpec RequantSpec::make(const QuantParams& in, const QuantParams& weights,
                              const QuantParams& out) {
  RequantSpec rq{in, weights, out, 0.0};
  rq.multiplier = static_cast<double>(in.delta) *
                  static_cast<double>(weights.delta) /
                  static_cast<double>(out.delta);
  if (!(rq.multiplier > 0.0) || !std::isfinite(rq.multiplier)) {
    throw std::invalid_argument("requantization multiplier must be positive");
  }
  return rq;
}

std::int64_t accumulator_limit(int input_bits, int weight_bits) {
  if (input_bits <= 8 && weight_bits <= 8) {
    return std::numeric_limits<std::int32_t>::max();
  }
  return std::int64_t{1} << 62;
}

namespace {

void check_conv_weights(const Shape& in, const Shape& w, const ConvSpec& spec) {
  if (w.n != spec.kernel_h || w.h != spec.kernel_w) {
    throw std::invalid_argument("conv weights " + w.str() +
                                " do not match kernel size " +
                                std::to_string(spec.kernel_h) + "x" +
                                std::to_string(spec.kernel_w));
  }
  if (w.w != in.c) {
    throw std::invalid_argument("conv weights " + w.str() + " expect " +
                                std::to_string(w.w) +
                                " input channels, input has " +
                                std::to_string(in.c));
  }
}

void check_depthwise_weights(const Shape& in, const Shape& w,
                             const ConvSpec& spec) {
  if (w.n != 1 || w.h != spec.kernel_h || w.w != spec.kernel_w) {
    throw std::invalid_argument("depthwise weights " + w.str() +
                                " do not match kernel size");
  }
  if (w.c != in.c) {
    throw std::invalid_argument("depthwise weights have " +
                                std::to_string(w.c) + " channels, input has " +
                                std::to_string(in.c));
  }
}

template <typename T>
void check_bias(std::span<const T> bias, std::int64_t channels) {
  if (!bias.empty() && static_cast<std::int64_t>(bias.size()) != channels) {
    throw std::invalid_argument("bias length " + std::to_string(bias.size()) +
                                " does not match " + std::to_string(channels) +
                                " output channels");
  }
}

std::int64_t max_abs_operand(const QuantParams& p) {
  return std::max<std::int64_t>(std::llabs(p.offset),
                                std::llabs(std::int64_t{p.max_code()} + p.offset));
}

void check_accumulator_bound(const QuantParams& in, const QuantParams& w,
                             std::int64_t taps,
                             std::span<const std::int64_t> bias) {
  double max_bias = 0.0;
  for (auto b : bias) max_bias = std::max(max_bias, std::fabs(static_cast<double>(b)));
  const double worst = static_cast<double>(taps) *
                           static_cast<double>(max_abs_operand(in)) *
                           static_cast<double>(max_abs_operand(w)) +
                       max_bias;
  const auto limit = accumulator_limit(in.bits, w.bits);
  if (worst > static_cast<double>(limit)) {
    throw std::invalid_argument(
        "accumulator may overflow: worst case " + std::to_string(worst) +
        " exceeds " + std::to_string(limit));
  }
}

void check_requant_inputs(const QuantTensor& input, const QuantTensor& weights,
                          const RequantSpec& rq) {
  if (!(rq.in_params == input.params())) {
    throw std::invalid_argument("requant spec input params differ from input");
  }
  if (!(rq.weight_params == weights.params())) {
    throw std::invalid_argument(
        "requant spec weight params differ from weights");
  }
}

}  // namespace

FloatTensor conv2d_float(const FloatTensor& input, const FloatTensor& weights,
                         std::span<const float> bias, const ConvSpec& spec) {
  const Shape& is = input.shape();
  const Shape& ws = weights.shape();
  check_conv_weights(is, ws, spec);
  const std::int64_t cin = is.c;
  const std::int64_t cout = ws.c;
  check_bias(bias, cout);
  const auto g = spec.geometry(is.h, is.w);
  const Shape os{is.n, g.out_h, g.out_w, cout};
  std::vector<float> out(os.elements());
  std::vector<double> acc(static_cast<std::size_t>(cout));
  const auto x = input.data();
  const auto wt = weights.data();

  for (std::int64_t n = 0; n < is.n; ++n) {
    for (std::int64_t oh = 0; oh < g.out_h; ++oh) {
      for (std::int64_t ow = 0; ow < g.out_w; ++ow) {
        for (std::int64_t co = 0; co < cout; ++co) {
          acc[co] = bias.empty() ? 0.0 : static_cast<double>(bias[co]);
        }
        for (std::int64_t kh = 0; kh < ws.n; ++kh) {
          const std::int64_t ih = oh * spec.stride - g.pad_top + kh;
          if (ih < 0 || ih >= is.h) continue;
          for (std::int64_t kw = 0; kw < ws.h; ++kw) {
            const std::int64_t iw = ow * spec.stride - g.pad_left + kw;
            if (iw < 0 || iw >= is.w) continue;
            const float* xrow = &x[is.offset(n, ih, iw, 0)];
            for (std::int64_t ci = 0; ci < cin; ++ci) {
              const double xv = xrow[ci];
              const float* wrow = &wt[ws.offset(kh, kw, ci, 0)];
              for (std::int64_t co = 0; co < cout; ++co) {
                acc[co] += xv * static_cast<double>(wrow[co]);
              }
            }
          }
        }
        float* orow = &out[os.offset(n, oh, ow, 0)];
        for (std::int64_t co = 0; co < cout; ++co) {
          orow[co] = static_cast<float>(acc[co]);
        }
      }
    }
  }
  return FloatTensor(os, std::move(out));
}

FloatTensor depthwise_conv2d_float(const FloatTensor& input,
                                   const FloatTensor& weights,
                                   std::span<const float> bias,
                                   const ConvSpec& spec) {
  const Shape& is = input.shape();
  const Shape& ws = weights.shape();
  check_depthwise_weights(is, ws, spec);
  const std::int64_t ch = is.c;
  check_bias(bias, ch);
  const auto g = spec.geometry(is.h, is.w);
  const Shape os{is.n, g.out_h, g.out_w, ch};
  std::vector<float> out(os.elements());
  std::vector<double> acc(static_cast<std::size_t>(ch));
  const auto x = input.data();
  const auto wt = weights.data();

  for (std::int64_t n = 0; n < is.n; ++n) {
    for (std::int64_t oh = 0; oh < g.out_h; ++oh) {
      for (std::int64_t ow = 0; ow < g.out_w; ++ow) {
        for (std::int64_t c = 0; c < ch; ++c) {
          acc[c] = bias.empty() ? 0.0 : static_cast<double>(bias[c]);
        }
        for (std::int64_t kh = 0; kh < ws.h; ++kh) {
          const std::int64_t ih = oh * spec.stride - g.pad_top + kh;
          if (ih < 0 || ih >= is.h) continue;
          for (std::int64_t kw = 0; kw < ws.w; ++kw) {
            const std::int64_t iw = ow * spec.stride - g.pad_left + kw;
            if (iw < 0 || iw >= is.w) continue;
            const float* xrow = &x[is.offset(n, ih, iw, 0)];
            const float* wrow = &wt[ws.offset(0, kh, kw, 0)];
            for (std::int64_t c = 0; c < ch; ++c) {
              acc[c] += static_cast<double>(xrow[c]) *
                        static_cast<double>(wrow[c]);
            }
          }
        }
        float* orow = &out[os.offset(n, oh, ow, 0)];
        for (std::int64_t c = 0; c < ch; ++c) {
          orow[c] = static_cast<float>(acc[c]);
        }
      }
    }
  }
  return FloatTensor(os, std::move(out));
}

FloatTensor activation_float(const FloatTensor& t, ActivationKind kind) {
  if (kind == ActivationKind::none) return t;
  std::vector<float> out(t.data().begin(), t.data().end());
  for (auto& v : out) {
    v = std::max(v, 0.0f);
    if (kind == ActivationKind::relu6) v = std::min(v, 6.0f);
  }
  return FloatTensor(t.shape(), std::move(out));
}

FloatTensor avg_pool_float(const FloatTensor& t, std::int64_t window_h,
                           std::int64_t window_w) {
  const Shape& s = t.shape();
  if (window_h < 1 || window_w < 1 || s.h % window_h != 0 ||
      s.w % window_w != 0) {
    throw std::invalid_argument("pool window does not tile input " + s.str());
  }
  const Shape os{s.n, s.h / window_h, s.w / window_w, s.c};
  std::vector<float> out(os.elements());
  const double count = static_cast<double>(window_h * window_w);
  for (std::int64_t n = 0; n < os.n; ++n) {
    for (std::int64_t oh = 0; oh < os.h; ++oh) {
      for (std::int64_t ow = 0; ow < os.w; ++ow) {
        for (std::int64_t c = 0; c < s.c; ++c) {
          double sum = 0.0;
          for (std::int64_t y = 0; y < window_h; ++y) {
            for (std::int64_t x = 0; x < window_w; ++x) {
              sum += t[s.offset(n, oh * window_h + y, ow * window_w + x, c)];
            }
          }
          out[os.offset(n, oh, ow, c)] = static_cast<float>(sum / count);
        }
      }
    }
  }
  return FloatTensor(os, std::move(out));
}

FloatTensor softmax_float(const FloatTensor& t) {
  const Shape& s = t.shape();
  std::vector<float> out(t.size());
  const auto x = t.data();
  const auto rows = static_cast<std::size_t>(s.n * s.h * s.w);
  const auto width = static_cast<std::size_t>(s.c);
  std::vector<double> e(width);
  for (std::size_t r = 0; r < rows; ++r) {
    const float* row = &x[r * width];
    const float peak = *std::max_element(row, row + width);
    double total = 0.0;
    for (std::size_t i = 0; i < width; ++i) {
      e[i] = std::exp(static_cast<double>(row[i]) - peak);
      total += e[i];
    }
    for (std::size_t i = 0; i < width; ++i) {
      out[r * width + i] = static_cast<float>(e[i] / total);
    }
  }
  return FloatTensor(s, std::move(out));
}

std::vector<std::int64_t> quantize_bias(std::span<const float> bias,
                                        const QuantParams& in_params,
                                        const QuantParams& weight_params) {
  const double scale = static_cast<double>(in_params.delta) *
                       static_cast<double>(weight_params.delta);
  std::vector<std::int64_t> out(bias.size());
  for (std::size_t i = 0; i < bias.size(); ++i) {
    out[i] = round_nearest(static_cast<double>(bias[i]) / scale);
  }
  return out;
}

Accumulator conv2d_accumulate(const QuantTensor& input,
                              const QuantTensor& weights,
                              std::span<const std::int64_t> bias,
                              const ConvSpec& spec) {
  const Shape& is = input.shape();
  const Shape& ws = weights.shape();
  check_conv_weights(is, ws, spec);
  const std::int64_t cin = is.c;
  const std::int64_t cout = ws.c;
  check_bias(bias, cout);
  check_accumulator_bound(input.params(), weights.params(),
                          ws.n * ws.h * ws.w, bias);
  const auto g = spec.geometry(is.h, is.w);

  const std::int64_t dx = input.params().offset;
  std::vector<std::int64_t> wv(weights.size());
  for (std::size_t i = 0; i < wv.size(); ++i) {
    wv[i] = std::int64_t{weights[i]} + weights.params().offset;
  }

  Accumulator acc{Shape{is.n, g.out_h, g.out_w, cout}, {}};
  acc.values.resize(acc.shape.elements());
  const auto x = input.codes();
  for (std::int64_t n = 0; n < is.n; ++n) {
    for (std::int64_t oh = 0; oh < g.out_h; ++oh) {
      for (std::int64_t ow = 0; ow < g.out_w; ++ow) {
        std::int64_t* orow = &acc.values[acc.shape.offset(n, oh, ow, 0)];
        for (std::int64_t co = 0; co < cout; ++co) {
          orow[co] = bias.empty() ? 0 : bias[co];
        }
        for (std::int64_t kh = 0; kh < ws.n; ++kh) {
          const std::int64_t ih = oh * spec.stride - g.pad_top + kh;
          if (ih < 0 || ih >= is.h) continue;
          for (std::int64_t kw = 0; kw < ws.h; ++kw) {
            const std::int64_t iw = ow * spec.stride - g.pad_left + kw;
            if (iw < 0 || iw >= is.w) continue;
            const std::uint16_t* xrow = &x[is.offset(n, ih, iw, 0)];
            for (std::int64_t ci = 0; ci < cin; ++ci) {
              const std::int64_t xv = std::int64_t{xrow[ci]} + dx;
              const std::int64_t* wrow = &wv[ws.offset(kh, kw, ci, 0)];
              for (std::int64_t co = 0; co < cout; ++co) {
                orow[co] += xv * wrow[co];
              }
            }
          }
        }
      }
    }
  }
  return acc;
}

Accumulator depthwise_conv2d_accumulate(const QuantTensor& input,
                                        const QuantTensor& weights,
                                        std::span<const std::int64_t> bias,
                                        const ConvSpec& spec) {
  const Shape& is = input.shape();
  const Shape& ws = weights.shape();
  check_depthwise_weights(is, ws, spec);
  const std::int64_t ch = is.c;
  check_bias(bias, ch);
  check_accumulator_bound(input.params(), weights.params(), ws.h * ws.w, bias);
  const auto g = spec.geometry(is.h, is.w);

  const std::int64_t dx = input.params().offset;
  std::vector<std::int64_t> wv(weights.size());
  for (std::size_t i = 0; i < wv.size(); ++i) {
    wv[i] = std::int64_t{weights[i]} + weights.params().offset;
  }

  Accumulator acc{Shape{is.n, g.out_h, g.out_w, ch}, {}};
  acc.values.resize(acc.shape.elements());
  const auto x = input.codes();
  for (std::int64_t n = 0; n < is.n; ++n) {
    for (std::int64_t oh = 0; oh < g.out_h; ++oh) {
      for (std::int64_t ow = 0; ow < g.out_w; ++ow) {
        std::int64_t* orow = &acc.values[acc.shape.offset(n, oh, ow, 0)];
        for (std::int64_t c = 0; c < ch; ++c) {
          orow[c] = bias.empty() ? 0 : bias[c];
        }
        for (std::int64_t kh = 0; kh < ws.h; ++kh) {
          const std::int64_t ih = oh * spec.stride - g.pad_top + kh;
          if (ih < 0 || ih >= is.h) continue;
          for (std::int64_t kw = 0; kw < ws.w; ++kw) {
            const std::int64_t iw = ow * spec.stride - g.pad_left + kw;
            if (iw < 0 || iw >= is.w) continue;
            const std::uint16_t* xrow = &x[is.offset(n, ih, iw, 0)];
            const std::int64_t* wrow = &wv[ws.offset(0, kh, kw, 0)];
            for (std::int64_t c = 0; c < ch; ++c) {
              orow[c] += (std::int64_t{xrow[c]} + dx) * wrow[c];
            }
          }
        }
      }
    }
  }
  return acc;
}

std::uint16_t requantize(std::int64_t accum, const RequantSpec& rq) {
  const auto& out = rq.out_params;
  const double scaled = rq.multiplier * static_cast<double>(accum);
  const std::int64_t top = out.max_code();
  if (scaled > 1e18) return static_cast<std::uint16_t>(top);
  if (scaled < -1e18) return 0;
  const std::int64_t code = round_nearest(scaled) - out.offset;
  return static_cast<std::uint16_t>(std::clamp<std::int64_t>(code, 0, top));
}

QuantTensor requantize_tensor(const Accumulator& acc, const RequantSpec& rq) {
  std::vector<std::uint16_t> codes(acc.values.size());
  for (std::size_t i = 0; i < codes.size(); ++i) {
    codes[i] = requantize(acc.values[i], rq);
  }
  return QuantTensor(acc.shape, std::move(codes), rq.out_params);
}

QuantTensor quantized_conv2d(const QuantTensor& input,
                             const QuantTensor& weights,
                             std::span<const std::int64_t> bias,
                             const ConvSpec& spec, const RequantSpec& rq) {
  check_requant_inputs(input, weights, rq);
  return requantize_tensor(conv2d_accumulate(input, weights, bias, spec), rq);
}

QuantTensor quantized_depthwise_conv2d(const QuantTensor& input,
                                       const QuantTensor& weights,
                                       std::span<const std::int64_t> bias,
                                       const ConvSpec& spec,
                                       const RequantSpec& rq) {
  check_requant_inputs(input, weights, rq);
  return requantize_tensor(
      depthwise_conv2d_accumulate(input, weights, bias, spec), rq);
}

QuantTensor activation_quant(const QuantTensor& qt, ActivationKind kind) {
  if (kind == ActivationKind::none) return qt;
  const auto& p = qt.params();
  const std::uint16_t lo = quantize_value(0.0f, p);
  const std::uint16_t hi = kind == ActivationKind::relu6
                               ? quantize_value(6.0f, p)
                               : static_cast<std::uint16_t>(p.max_code());
  std::vector<std::uint16_t> codes(qt.codes().begin(), qt.codes().end());
  for (auto& c : codes) c = std::min(std::max(c, lo), hi);
  return QuantTensor(qt.shape(), std::move(codes), p);
}

QuantTensor avg_pool_quant(const QuantTensor& qt, std::int64_t window_h,
                           std::int64_t window_w) {
  const Shape& s = qt.shape();
  if (window_h < 1 || window_w < 1 || s.h % window_h != 0 ||
      s.w % window_w != 0) {
    throw std::invalid_argument("pool window does not tile input " + s.str());
  }
  const Shape os{s.n, s.h / window_h, s.w / window_w, s.c};
  std::vector<std::uint16_t> out(os.elements());
  const double count = static_cast<double>(window_h * window_w);
  for (std::int64_t n = 0; n < os.n; ++n) {
    for (std::int64_t oh = 0; oh < os.h; ++oh) {
      for (std::int64_t ow = 0; ow < os.w; ++ow) {
        for (std::int64_t c = 0; c < s.c; ++c) {
          std::int64_t sum = 0;
          for (std::int64_t y = 0; y < window_h; ++y) {
            for (std::int64_t x = 0; x < window_w; ++x) {
              sum += qt[s.offset(n, oh * window_h + y, ow * window_w + x, c)];
            }
          }
          out[os.offset(n, oh, ow, c)] = static_cast<std::uint16_t>(
              round_nearest(static_cast<double>(sum) / count));
        }
      }
    }
  }
  return QuantTensor(os, std::move(out), qt.params());
}

}  // namespace qfs
