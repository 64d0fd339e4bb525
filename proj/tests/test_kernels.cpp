// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "oracle.hpp"
#include "qfs/kernels.hpp"
#include "qfs/random.hpp"
#include "qfs/sqnr.hpp"

using namespace qfs;

namespace {

QuantTensor constant_codes(Shape s, std::uint16_t code, const QuantParams& p) {
  return QuantTensor(s, std::vector<std::uint16_t>(s.elements(), code), p);
}

QuantParams minmax_params(const FloatTensor& t, int bits = 8) {
  const auto d = t.data();
  const auto [lo, hi] = std::minmax_element(d.begin(), d.end());
  return params_for_range(std::min(*lo, 0.0f), std::max(*hi, 0.0f), bits);
}

std::vector<float> vec(const FloatTensor& t) { return {t.data().begin(), t.data().end()}; }

}  // namespace

TEST(ConvGeometry, SameAndValid) {
  ConvSpec s{2, Padding::same, 3, 3};
  auto g = s.geometry(224, 224);
  EXPECT_EQ(g.out_h, 112);
  EXPECT_EQ(g.pad_top, 0);  // total padding 1, extra goes bottom
  g = s.geometry(7, 7);
  EXPECT_EQ(g.out_h, 4);
  EXPECT_EQ(g.pad_top, 1);
  ConvSpec v{1, Padding::valid, 3, 3};
  EXPECT_EQ(v.geometry(5, 5).out_h, 3);
  EXPECT_THROW(v.geometry(2, 2), std::invalid_argument);
  ConvSpec bad{0, Padding::same, 3, 3};
  EXPECT_THROW(bad.geometry(5, 5), std::invalid_argument);
}

TEST(ParseEnums, RoundTrip) {
  for (auto a : {ActivationKind::none, ActivationKind::relu, ActivationKind::relu6}) {
    EXPECT_EQ(parse_activation(to_string(a)), a);
  }
  EXPECT_EQ(parse_padding("valid"), Padding::valid);
  EXPECT_THROW(parse_activation("gelu"), std::invalid_argument);
  EXPECT_THROW(parse_padding("full"), std::invalid_argument);
}

TEST(ConvFloat, IdentityOneByOne) {
  const auto x = Rng(1).uniform_tensor(Shape{1, 3, 3, 1}, -1, 1);
  const FloatTensor w(Shape{1, 1, 1, 1}, {1.0f});
  EXPECT_EQ(conv2d_float(x, w, {}, ConvSpec{}), x);
  const float zero_bias[1] = {0.0f};
  EXPECT_EQ(conv2d_float(x, w, zero_bias, ConvSpec{}), x);
}

TEST(ConvFloat, AllOnesValid) {
  const FloatTensor x(Shape{1, 3, 3, 1}, std::vector<float>(9, 1.0f));
  const FloatTensor w(Shape{3, 3, 1, 1}, std::vector<float>(9, 1.0f));
  const auto y = conv2d_float(x, w, {}, ConvSpec{1, Padding::valid, 3, 3});
  ASSERT_EQ(y.shape(), (Shape{1, 1, 1, 1}));
  EXPECT_EQ(y[0], 9.0f);
}

TEST(ConvFloat, BiasPerOutputChannel) {
  const FloatTensor x = FloatTensor::zeros(Shape{1, 2, 2, 1});
  const FloatTensor w(Shape{1, 1, 1, 2}, {1.0f, 1.0f});
  const float bias[2] = {0.5f, -2.0f};
  const auto y = conv2d_float(x, w, bias, ConvSpec{});
  for (std::int64_t i = 0; i < 2; ++i) {
    EXPECT_EQ(y.at(0, i, i, 0), 0.5f);
    EXPECT_EQ(y.at(0, i, i, 1), -2.0f);
  }
}

TEST(ConvFloat, MatchesLoopOracle) {
  Rng rng(2);
  for (bool same : {false, true}) {
    for (int stride : {1, 2}) {
      const auto x = rng.uniform_tensor(Shape{1, 5, 5, 2}, -1, 1);
      const auto w = rng.uniform_tensor(Shape{3, 3, 2, 4}, -1, 1);
      const ConvSpec spec{stride, same ? Padding::same : Padding::valid, 3, 3};
      const auto y = conv2d_float(x, w, {}, spec);
      const auto ref = oracle::conv<float, double>(vec(x), 5, 5, 2, vec(w), 3, 3, 4, stride, same);
      const auto mag = oracle::conv_abs(vec(x), 5, 5, 2, vec(w), 3, 3, 4, stride, same);
      ASSERT_EQ(y.size(), ref.size());
      for (std::size_t i = 0; i < ref.size(); ++i) {
        EXPECT_LE(std::fabs(y[i] - ref[i]), 1e-6 * mag[i]) << i;
      }
    }
  }
}

TEST(ConvFloat, ShapeErrors) {
  const auto x = FloatTensor::zeros(Shape{1, 4, 4, 2});
  EXPECT_THROW(conv2d_float(x, FloatTensor::zeros(Shape{3, 3, 3, 1}), {}, ConvSpec{1, Padding::same, 3, 3}),
               std::invalid_argument);
  EXPECT_THROW(conv2d_float(x, FloatTensor::zeros(Shape{3, 3, 2, 1}), {}, ConvSpec{1, Padding::same, 1, 1}),
               std::invalid_argument);
  const float bias[3] = {0, 0, 0};
  EXPECT_THROW(conv2d_float(x, FloatTensor::zeros(Shape{1, 1, 2, 2}), bias, ConvSpec{}),
               std::invalid_argument);
}

TEST(DepthwiseFloat, DeltaKernelIsIdentity) {
  const auto x = Rng(3).uniform_tensor(Shape{1, 4, 4, 3}, -1, 1);
  std::vector<float> k(9 * 3, 0.0f);
  for (int c = 0; c < 3; ++c) k[4 * 3 + c] = 1.0f;
  const auto y = depthwise_conv2d_float(x, FloatTensor(Shape{1, 3, 3, 3}, k), {},
                                        ConvSpec{1, Padding::same, 3, 3});
  EXPECT_EQ(y, x);
}

TEST(DepthwiseFloat, ZeroKernelChannel) {
  const auto x = Rng(4).uniform_tensor(Shape{1, 4, 4, 3}, -1, 1);
  auto wv = vec(Rng(5).uniform_tensor(Shape{1, 3, 3, 3}, -1, 1));
  for (int t = 0; t < 9; ++t) wv[t * 3 + 1] = 0.0f;
  const auto y = depthwise_conv2d_float(x, FloatTensor(Shape{1, 3, 3, 3}, wv), {},
                                        ConvSpec{1, Padding::same, 3, 3});
  for (std::int64_t h = 0; h < 4; ++h)
    for (std::int64_t w = 0; w < 4; ++w) EXPECT_EQ(y.at(0, h, w, 1), 0.0f);
}

TEST(DepthwiseFloat, MatchesLoopOracle) {
  Rng rng(6);
  for (bool same : {false, true}) {
    for (int stride : {1, 2}) {
      const auto x = rng.uniform_tensor(Shape{1, 6, 5, 3}, -1, 1);
      const auto w = rng.uniform_tensor(Shape{1, 3, 3, 3}, -1, 1);
      const auto y = depthwise_conv2d_float(x, w, {}, ConvSpec{stride, same ? Padding::same : Padding::valid, 3, 3});
      const auto ref = oracle::depthwise<float, double>(vec(x), 6, 5, 3, vec(w), 3, 3, stride, same);
      const auto mag = oracle::depthwise_abs(vec(x), 6, 5, 3, vec(w), 3, 3, stride, same);
      ASSERT_EQ(y.size(), ref.size());
      for (std::size_t i = 0; i < ref.size(); ++i) {
        EXPECT_LE(std::fabs(y[i] - ref[i]), 1e-6 * mag[i]);
      }
    }
  }
}

TEST(DepthwiseFloat, ChannelMismatch) {
  EXPECT_THROW(depthwise_conv2d_float(FloatTensor::zeros(Shape{1, 3, 3, 2}),
                                      FloatTensor::zeros(Shape{1, 3, 3, 3}), {},
                                      ConvSpec{1, Padding::same, 3, 3}),
               std::invalid_argument);
}

TEST(DepthwiseFloat, ChannelIndependence) {
  Rng rng(7);
  const auto x = rng.uniform_tensor(Shape{1, 5, 5, 4}, -1, 1);
  const auto w = rng.uniform_tensor(Shape{1, 3, 3, 4}, -1, 1);
  const ConvSpec spec{1, Padding::same, 3, 3};
  auto xv = vec(x);
  for (std::size_t i = 2; i < xv.size(); i += 4) xv[i] += 0.25f;
  const auto a = depthwise_conv2d_float(x, w, {}, spec);
  const auto b = depthwise_conv2d_float(FloatTensor(x.shape(), xv), w, {}, spec);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (i % 4 == 2) continue;
    EXPECT_EQ(a[i], b[i]);
  }
}

TEST(QuantizedConv, HandEvaluatedExample) {
  const auto in_p = compute_quant_params(0.0f, 2.55f, 8);
  ASSERT_FLOAT_EQ(in_p.delta, 0.01f);
  ASSERT_EQ(in_p.offset, 0);
  const auto out_p = compute_quant_params(0.0f, 25.5f, 8);
  ASSERT_FLOAT_EQ(out_p.delta, 0.1f);
  const auto x = constant_codes(Shape{1, 3, 3, 1}, 100, in_p);
  const auto w = constant_codes(Shape{3, 3, 1, 1}, 100, in_p);
  const ConvSpec spec{1, Padding::valid, 3, 3};
  const auto acc = conv2d_accumulate(x, w, {}, spec);
  ASSERT_EQ(acc.values.size(), 1u);
  EXPECT_EQ(acc.values[0], 90000);
  EXPECT_NEAR(double(in_p.delta) * in_p.delta * acc.values[0], 9.0, 1e-5);
  const auto rq = RequantSpec::make(in_p, in_p, out_p);
  const auto y = quantized_conv2d(x, w, {}, spec, rq);
  EXPECT_EQ(y[0], 90);
  EXPECT_NEAR(dequantize_tensor(y)[0], 9.0f, 1e-5f);
}

TEST(QuantizedConv, ZeroWeightsGiveZeroCode) {
  const auto in_p = compute_quant_params(-1, 1, 8);
  const auto w_p = compute_quant_params(0, 1, 8);
  const auto out_p = compute_quant_params(-2, 3, 8);
  const auto x = quantize_tensor(Rng(8).uniform_tensor(Shape{1, 4, 4, 2}, -1, 1), in_p);
  const auto w = constant_codes(Shape{3, 3, 2, 3}, 0, w_p);
  const auto y = quantized_conv2d(x, w, {}, ConvSpec{1, Padding::same, 3, 3},
                                  RequantSpec::make(in_p, w_p, out_p));
  const auto zero = std::clamp<std::int32_t>(-out_p.offset, 0, 255);
  for (auto c : y.codes()) EXPECT_EQ(c, zero);
  const auto back = dequantize_tensor(y);
  for (float v : back.data()) EXPECT_EQ(v, 0.0f);
}

TEST(QuantizedConv, TracksFloatWithinHalfStep) {
  Rng rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const auto xf = rng.uniform_tensor(Shape{1, 6, 6, 3}, -1, 1);
    const auto wf = rng.uniform_tensor(Shape{3, 3, 3, 4}, -0.5f, 0.5f);
    const auto xq = quantize_tensor(xf, minmax_params(xf));
    const auto wq = quantize_tensor(wf, minmax_params(wf));
    const ConvSpec spec{trial % 2 + 1, Padding::same, 3, 3};
    const auto ref = conv2d_float(dequantize_tensor(xq), dequantize_tensor(wq), {}, spec);
    const auto out_p = minmax_params(ref);
    const auto y = dequantize_tensor(
        quantized_conv2d(xq, wq, {}, spec, RequantSpec::make(xq.params(), wq.params(), out_p)));
    for (std::size_t i = 0; i < y.size(); ++i) {
      EXPECT_LE(std::fabs(y[i] - ref[i]), out_p.delta / 2 + 1e-6f);
    }
  }
}

TEST(QuantizedConv, BiasInAccumulatorDomain) {
  const auto in_p = compute_quant_params(0.0f, 2.55f, 8);
  const auto x = constant_codes(Shape{1, 1, 1, 1}, 100, in_p);
  const auto w = constant_codes(Shape{1, 1, 1, 1}, 100, in_p);
  const float bias[1] = {0.25f};
  const auto qb = quantize_bias(bias, in_p, in_p);
  EXPECT_EQ(qb[0], 2500);
  const auto acc = conv2d_accumulate(x, w, qb, ConvSpec{});
  EXPECT_EQ(acc.values[0], 10000 + 2500);
}

TEST(QuantizedConv, ParamMismatchRejected) {
  const auto p = compute_quant_params(-1, 1, 8);
  const auto other = compute_quant_params(-2, 2, 8);
  const auto x = constant_codes(Shape{1, 2, 2, 1}, 128, p);
  const auto w = constant_codes(Shape{1, 1, 1, 1}, 128, p);
  EXPECT_THROW(quantized_conv2d(x, w, {}, ConvSpec{}, RequantSpec::make(other, p, p)),
               std::invalid_argument);
  EXPECT_THROW(quantized_conv2d(x, w, {}, ConvSpec{}, RequantSpec::make(p, other, p)),
               std::invalid_argument);
  const auto wd = constant_codes(Shape{1, 1, 1, 1}, 128, p);
  EXPECT_THROW(quantized_depthwise_conv2d(x, wd, {}, ConvSpec{}, RequantSpec::make(other, p, p)),
               std::invalid_argument);
}

TEST(QuantizedConv, OverflowRiskRejectedUpFront) {
  const auto p = compute_quant_params(0, 255, 8);
  EXPECT_EQ(accumulator_limit(8, 8), std::numeric_limits<std::int32_t>::max());
  // 33100 taps * 255 * 255 exceeds int32.
  const std::int64_t cin = 33100;
  const auto x = constant_codes(Shape{1, 1, 1, cin}, 1, p);
  const auto w = constant_codes(Shape{1, 1, cin, 1}, 1, p);
  EXPECT_THROW(conv2d_accumulate(x, w, {}, ConvSpec{}), std::invalid_argument);
  // 5x5x64 fits comfortably.
  const auto x2 = constant_codes(Shape{1, 5, 5, 64}, 255, p);
  const auto w2 = constant_codes(Shape{5, 5, 64, 1}, 255, p);
  const auto acc = conv2d_accumulate(x2, w2, {}, ConvSpec{1, Padding::valid, 5, 5});
  EXPECT_EQ(acc.values[0], 25LL * 64 * 255 * 255);
  // Wider codes use a 64-bit accumulator.
  const auto p16 = compute_quant_params(0, 65535, 16);
  const auto x3 = constant_codes(Shape{1, 3, 3, 8}, 65535, p16);
  const auto w3 = constant_codes(Shape{3, 3, 8, 1}, 65535, p16);
  EXPECT_EQ(conv2d_accumulate(x3, w3, {}, ConvSpec{1, Padding::valid, 3, 3}).values[0],
            72LL * 65535 * 65535);
}

TEST(QuantizedConv, AccumulatorMatchesLoopOracle) {
  Rng rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    const auto xf = rng.uniform_tensor(Shape{1, 5, 4, 3}, -1, 2);
    const auto wf = rng.uniform_tensor(Shape{3, 3, 3, 2}, -1, 1);
    const auto xq = quantize_tensor(xf, minmax_params(xf));
    const auto wq = quantize_tensor(wf, minmax_params(wf));
    std::vector<std::int64_t> xs, ws;
    for (auto c : xq.codes()) xs.push_back(c + xq.params().offset);
    for (auto c : wq.codes()) ws.push_back(c + wq.params().offset);
    const bool same = trial % 2;
    const int stride = 1 + trial % 3 / 2;
    const auto ref = oracle::conv<std::int64_t, std::int64_t>(xs, 5, 4, 3, ws, 3, 3, 2, stride, same);
    const auto acc = conv2d_accumulate(xq, wq, {}, ConvSpec{stride, same ? Padding::same : Padding::valid, 3, 3});
    EXPECT_EQ(acc.values, ref);
  }
}

TEST(QuantizedDepthwise, HandEvaluatedExample) {
  const auto in_p = compute_quant_params(0.0f, 2.55f, 8);
  const auto out_p = compute_quant_params(0.0f, 25.5f, 8);
  const auto x = constant_codes(Shape{1, 3, 3, 2}, 100, in_p);
  const auto w = constant_codes(Shape{1, 3, 3, 2}, 100, in_p);
  const ConvSpec spec{1, Padding::valid, 3, 3};
  const auto acc = depthwise_conv2d_accumulate(x, w, {}, spec);
  EXPECT_EQ(acc.values, (std::vector<std::int64_t>{90000, 90000}));
  const auto y = quantized_depthwise_conv2d(x, w, {}, spec, RequantSpec::make(in_p, in_p, out_p));
  EXPECT_EQ(y[0], 90);
  EXPECT_EQ(y[1], 90);
}

TEST(QuantizedDepthwise, ZeroWeightsGiveZeroCode) {
  const auto in_p = compute_quant_params(-1, 1, 8);
  const auto w_p = compute_quant_params(0, 1, 8);
  const auto out_p = compute_quant_params(-1, 4, 8);
  const auto x = quantize_tensor(Rng(11).uniform_tensor(Shape{1, 4, 4, 3}, -1, 1), in_p);
  const auto y = quantized_depthwise_conv2d(x, constant_codes(Shape{1, 3, 3, 3}, 0, w_p), {},
                                            ConvSpec{1, Padding::same, 3, 3},
                                            RequantSpec::make(in_p, w_p, out_p));
  for (auto c : y.codes()) EXPECT_EQ(c, -out_p.offset);
}

TEST(QuantizedDepthwise, TracksFloatAndMatchesOracle) {
  Rng rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    const auto xf = rng.uniform_tensor(Shape{1, 6, 6, 4}, -1, 1);
    const auto wf = rng.uniform_tensor(Shape{1, 3, 3, 4}, -1, 1);
    const auto xq = quantize_tensor(xf, minmax_params(xf));
    const auto wq = quantize_tensor(wf, minmax_params(wf));
    const ConvSpec spec{trial % 2 + 1, Padding::same, 3, 3};
    const auto ref = depthwise_conv2d_float(dequantize_tensor(xq), dequantize_tensor(wq), {}, spec);
    const auto out_p = minmax_params(ref);
    const auto y = dequantize_tensor(quantized_depthwise_conv2d(
        xq, wq, {}, spec, RequantSpec::make(xq.params(), wq.params(), out_p)));
    for (std::size_t i = 0; i < y.size(); ++i) {
      EXPECT_LE(std::fabs(y[i] - ref[i]), out_p.delta / 2 + 1e-6f);
    }
    std::vector<std::int64_t> xs, ws;
    for (auto c : xq.codes()) xs.push_back(c + xq.params().offset);
    for (auto c : wq.codes()) ws.push_back(c + wq.params().offset);
    EXPECT_EQ(depthwise_conv2d_accumulate(xq, wq, {}, spec).values,
              (oracle::depthwise<std::int64_t, std::int64_t>(xs, 6, 6, 4, ws, 3, 3, spec.stride, true)));
  }
}

TEST(QuantizedDepthwise, PerTensorRangeHurtsSmallChannel) {
  // Channel 0 all zero, channel 1 spans [-10, 10], channel 2 is small.
  std::vector<float> wv(9 * 3);
  Rng rng(13);
  for (int t = 0; t < 9; ++t) {
    wv[t * 3 + 0] = 0.0f;
    wv[t * 3 + 1] = t == 0 ? -10.0f : (t == 8 ? 10.0f : rng.uniform(-10, 10));
    wv[t * 3 + 2] = rng.uniform(-0.05f, 0.05f);
  }
  const FloatTensor w(Shape{1, 3, 3, 3}, wv);
  const auto p = compute_quant_params(-10, 10, 8);
  const auto q = quantize_tensor(w, p);
  const auto d = dequantize_tensor(q);
  std::vector<double> small_ref, small_deq;
  for (int t = 0; t < 9; ++t) {
    EXPECT_EQ(q[t * 3 + 0], -p.offset);
    EXPECT_LE(std::fabs(d[t * 3 + 0]), p.delta / 2);
    small_ref.push_back(wv[t * 3 + 2]);
    small_deq.push_back(d[t * 3 + 2]);
  }
  // Alone, the small channel quantizes well; inside the shared range it collapses.
  const auto own = compute_quant_params(-0.05f, 0.05f, 8);
  std::vector<double> own_deq;
  for (int t = 0; t < 9; ++t) own_deq.push_back(dequantize_value(quantize_value(wv[t * 3 + 2], own), own));
  EXPECT_GT(oracle::sqnr_db(small_ref, own_deq), 35.0);
  EXPECT_LT(oracle::sqnr_db(small_ref, small_deq), 10.0);
}

TEST(Requantize, SpecExamples) {
  const auto in_p = compute_quant_params(0.0f, 25.5f, 8);  // Δ = 0.1
  const auto out_p = compute_quant_params(0.0f, 5.1f, 8);  // Δ = 0.02
  const auto rq = RequantSpec::make(in_p, in_p, out_p);
  EXPECT_NEAR(rq.multiplier, 0.5, 1e-6);
  EXPECT_EQ(requantize(0, rq), 0);
  EXPECT_EQ(requantize(100, rq), 50);
  EXPECT_EQ(requantize(100000, rq), 255);
  EXPECT_EQ(requantize(-100000, rq), 0);
  EXPECT_EQ(requantize(std::numeric_limits<std::int64_t>::max(), rq), 255);
}

TEST(Requantize, ErrorAtMostHalfStep) {
  Rng rng(14);
  const auto in_p = compute_quant_params(-1.3f, 2.1f, 8);
  const auto w_p = compute_quant_params(-0.4f, 0.7f, 8);
  const auto out_p = compute_quant_params(-3.0f, 3.0f, 8);
  const auto rq = RequantSpec::make(in_p, w_p, out_p);
  for (int i = 0; i < 10000; ++i) {
    const auto acc = rng.integer(-300000, 300000);
    const double exact = double(in_p.delta) * w_p.delta * double(acc);
    if (exact < out_p.x_min || exact > out_p.x_max) continue;
    const double got = double(out_p.delta) * (requantize(acc, rq) + out_p.offset);
    ASSERT_LE(std::fabs(got - exact), out_p.delta / 2.0 * (1 + 1e-6));
  }
}

TEST(ActivationQuant, Examples) {
  const auto sym = compute_quant_params(-1, 1, 8);
  std::vector<std::uint16_t> codes{0, 50, 128, 200, 255};
  const QuantTensor q(Shape{1, 1, 1, 5}, codes, sym);
  EXPECT_EQ(activation_quant(q, ActivationKind::none), q);
  const auto r = activation_quant(q, ActivationKind::relu);
  EXPECT_EQ(std::vector<std::uint16_t>(r.codes().begin(), r.codes().end()),
            (std::vector<std::uint16_t>{128, 128, 128, 200, 255}));
  EXPECT_EQ(r.params(), sym);

  const auto p = compute_quant_params(0.0f, 12.75f, 8);
  ASSERT_FLOAT_EQ(p.delta, 0.05f);
  const QuantTensor q6(Shape{1, 1, 1, 3}, {0, 119, 250}, p);
  const auto r6 = activation_quant(q6, ActivationKind::relu6);
  EXPECT_EQ(r6[0], 0);
  EXPECT_EQ(r6[1], 119);
  EXPECT_EQ(r6[2], 120);
}

TEST(ActivationQuant, Relu6CommutesWithDequantize) {
  Rng rng(15);
  for (int trial = 0; trial < 50; ++trial) {
    const float lo = rng.uniform(-8, 0), hi = rng.uniform(0.5f, 12);
    const auto p = compute_quant_params(lo, hi, 8);
    const auto x = rng.uniform_tensor(Shape{1, 1, 1, 64}, lo, hi);
    const auto q = quantize_tensor(x, p);
    const auto got = dequantize_tensor(activation_quant(q, ActivationKind::relu6));
    const auto deq = dequantize_tensor(q);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const float want = std::min(std::max(deq[i], 0.0f), 6.0f);
      ASSERT_LE(std::fabs(got[i] - want), p.delta);
    }
  }
}

TEST(AvgPoolQuant, Examples) {
  const auto p = compute_quant_params(0, 255, 8);
  EXPECT_EQ(avg_pool_quant(constant_codes(Shape{1, 4, 4, 2}, 77, p), 4, 4),
            constant_codes(Shape{1, 1, 1, 2}, 77, p));
  const QuantTensor two(Shape{1, 1, 2, 1}, {100, 101}, p);
  EXPECT_EQ(avg_pool_quant(two, 1, 2)[0], 101);
  const auto big = avg_pool_quant(constant_codes(Shape{1, 7, 7, 1024}, 3, p), 7, 7);
  EXPECT_EQ(big.shape(), (Shape{1, 1, 1, 1024}));
  EXPECT_THROW(avg_pool_quant(two, 1, 3), std::invalid_argument);
  EXPECT_THROW(avg_pool_quant(constant_codes(Shape{1, 4, 4, 1}, 0, p), 3, 3), std::invalid_argument);
}

TEST(AvgPoolQuant, TracksFloatMean) {
  const auto x = Rng(16).uniform_tensor(Shape{1, 4, 4, 8}, -1, 1);
  const auto p = compute_quant_params(-1, 1, 8);
  const auto q = quantize_tensor(x, p);
  const auto ref = avg_pool_float(dequantize_tensor(q), 4, 4);
  const auto got = dequantize_tensor(avg_pool_quant(q, 4, 4));
  for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_LE(std::fabs(got[i] - ref[i]), p.delta / 2 + 1e-6f);
}

TEST(AvgPoolFloat, Mean) {
  const FloatTensor x(Shape{1, 2, 2, 1}, {1, 2, 3, 6});
  EXPECT_EQ(avg_pool_float(x, 2, 2)[0], 3.0f);
  EXPECT_THROW(avg_pool_float(x, 3, 3), std::invalid_argument);
}

TEST(Softmax, Examples) {
  EXPECT_EQ(softmax_float(FloatTensor(Shape{1, 1, 1, 1}, {3.5f}))[0], 1.0f);
  const auto eq = softmax_float(FloatTensor(Shape{1, 1, 1, 4}, {2, 2, 2, 2}));
  for (float v : eq.data()) EXPECT_FLOAT_EQ(v, 0.25f);
  const auto two = softmax_float(FloatTensor(Shape{1, 1, 1, 2}, {0.0f, std::log(3.0f)}));
  EXPECT_NEAR(two[0], 0.25f, 1e-7);
  EXPECT_NEAR(two[1], 0.75f, 1e-7);
}

TEST(Softmax, StableAndNormalized) {
  const auto y = softmax_float(FloatTensor(Shape{1, 1, 1, 3}, {1000.0f, 999.0f, -1000.0f}));
  double s = 0;
  for (float v : y.data()) {
    EXPECT_TRUE(std::isfinite(v));
    s += v;
  }
  EXPECT_NEAR(s, 1.0, 1e-6);
  const auto r = softmax_float(Rng(17).uniform_tensor(Shape{1, 1, 1, 1000}, -20, 20));
  s = 0;
  for (float v : r.data()) s += v;
  EXPECT_NEAR(s, 1.0, 1e-6);
}

TEST(ActivationFloat, Kinds) {
  const FloatTensor x(Shape{1, 1, 1, 4}, {-1, 0.5f, 6, 7});
  EXPECT_EQ(activation_float(x, ActivationKind::none), x);
  EXPECT_EQ(activation_float(x, ActivationKind::relu), FloatTensor(x.shape(), {0, 0.5f, 6, 7}));
  EXPECT_EQ(activation_float(x, ActivationKind::relu6), FloatTensor(x.shape(), {0, 0.5f, 6, 6}));
}
