// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "json.hpp"
#include "qfs/builder.hpp"
#include "qfs/random.hpp"
#include "qfs/sqnr.hpp"

using namespace qfs;

namespace {

FloatTensor fill(std::size_t n, float v) {
  return FloatTensor(Shape{1, 1, 1, static_cast<std::int64_t>(n)}, std::vector<float>(n, v));
}

GraphSpec one_conv_net(std::uint64_t seed) {
  ParamSource src(seed);
  GraphSpec g;
  g.name = "one_conv";
  g.input_shape = Shape{1, 8, 8, 3};
  LayerSpec l;
  l.name = "conv";
  l.kind = LayerKind::conv2d;
  l.conv = ConvSpec{1, Padding::same, 3, 3};
  l.weights = src.conv_weights(3, 3, 3, 4, 1.0f);
  l.bias = src.bias(4);
  g.layers.push_back(std::move(l));
  return g;
}

}  // namespace

TEST(SqnrEmpirical, Examples) {
  const auto x = Rng(1).uniform_tensor(Shape{1, 1, 1, 100}, -1, 1);
  EXPECT_EQ(sqnr_empirical(x, x), kInfiniteSqnr);
  EXPECT_NEAR(sqnr_empirical(fill(10, 1.0f), fill(10, 1.1f)), 20.0, 1e-5);
}

TEST(SqnrEmpirical, MonteCarloUniform) {
  const auto x = Rng(2).uniform_tensor(Shape{1, 1000, 1000, 1}, -1, 1);
  const auto p = compute_quant_params(-1, 1, 8);
  const double db = sqnr_empirical(x, dequantize_tensor(quantize_tensor(x, p)));
  EXPECT_NEAR(db, 48.13, 0.2);
  EXPECT_NEAR(db, sqnr_theoretical(p, 1.0 / 3.0), 0.2);
}

TEST(SqnrEmpirical, Errors) {
  EXPECT_THROW(sqnr_empirical(fill(3, 1), fill(4, 1)), std::invalid_argument);
  EXPECT_THROW(sqnr_empirical(fill(3, 0), fill(3, 1)), std::invalid_argument);
}

TEST(SqnrEmpirical, ScaleInvariance) {
  Rng rng(3);
  const auto x = rng.uniform_tensor(Shape{1, 1, 1, 64}, -1, 1);
  const auto y = rng.uniform_tensor(Shape{1, 1, 1, 64}, -1, 1);
  for (float c : {2.0f, -0.5f, 8.0f}) {
    std::vector<float> cx, cy;
    for (std::size_t i = 0; i < x.size(); ++i) {
      cx.push_back(c * x[i]);
      cy.push_back(c * y[i]);
    }
    EXPECT_NEAR(sqnr_empirical(FloatTensor(x.shape(), cx), FloatTensor(y.shape(), cy)),
                sqnr_empirical(x, y), 1e-9);
  }
}

TEST(SqnrEmpirical, MoreNoiseNeverHelps) {
  Rng rng(4);
  const auto x = rng.uniform_tensor(Shape{1, 1, 1, 256}, -1, 1);
  std::vector<float> noisy(x.data().begin(), x.data().end());
  double prev = kInfiniteSqnr;
  for (int step = 0; step < 10; ++step) {
    // Push every element further from the reference.
    for (std::size_t i = 0; i < noisy.size(); ++i) noisy[i] += (noisy[i] >= x[i] ? 0.01f : -0.01f);
    const double db = sqnr_empirical(x, FloatTensor(x.shape(), noisy));
    EXPECT_LT(db, prev);
    prev = db;
  }
}

TEST(SqnrTheory, Constants) {
  EXPECT_NEAR(sqnr_ceiling_db(8), 58.9226, 1e-4);
  const auto p = compute_quant_params(-1, 1, 8);
  EXPECT_NEAR(sqnr_theoretical(p, 1.0 / 3.0), 58.92 - 10 * std::log10(12.0), 0.01);
  EXPECT_NEAR(sqnr_theoretical(p, 1.0 / 3.0), 48.13, 0.01);
  const auto wide = compute_quant_params(-2, 2, 8);
  EXPECT_NEAR(sqnr_theoretical(p, 0.5) - sqnr_theoretical(wide, 0.5), 20 * std::log10(2.0), 1e-4);
  EXPECT_THROW(sqnr_theoretical(p, 0.0), std::invalid_argument);
  EXPECT_THROW(sqnr_ceiling_db(1), std::invalid_argument);
  // 20·log10(65535/255)
  EXPECT_NEAR(sqnr_ceiling_db(16) - sqnr_ceiling_db(8), 48.1987, 1e-4);
}

TEST(SqnrTheory, NoisePower) {
  EXPECT_DOUBLE_EQ(noise_power_theoretical(compute_quant_params(0, 255, 8)), 1.0 / 12.0);
  EXPECT_NEAR(noise_power_theoretical(compute_quant_params(-1, 1, 8)), 5.13e-6, 0.01e-6);
  const auto x = Rng(5).uniform_tensor(Shape{1, 1000, 1000, 1}, -1, 1);
  const auto p = compute_quant_params(-1, 1, 8);
  const double mse = noise_power(x, dequantize_tensor(quantize_tensor(x, p)));
  EXPECT_NEAR(mse / noise_power_theoretical(p), 1.0, 0.02);
}

TEST(SqnrTheory, AgreementAcrossBitWidths) {
  const auto x = Rng(6).uniform_tensor(Shape{1, 1000, 1000, 1}, -1, 1);
  for (int bits : {4, 8, 12}) {
    const auto p = compute_quant_params(-1, 1, bits);
    const double emp = sqnr_empirical(x, dequantize_tensor(quantize_tensor(x, p)));
    EXPECT_NEAR(emp, sqnr_theoretical(p, signal_power(x)), 0.5) << bits;
  }
}

TEST(Profiler, HigherBitWidthWinsEveryLayer) {
  const auto g = one_conv_net(1);
  const auto data = seeded_inputs(g.input_shape, 10, 2);
  QuantizeOptions o8, o16;
  o16.bits = 16;
  const auto r8 = profile_per_layer(g, quantize_graph(g, data, o8), data);
  const auto r16 = profile_per_layer(g, quantize_graph(g, data, o16), data);
  ASSERT_EQ(r8.layers.size(), r16.layers.size());
  for (std::size_t i = 0; i < r8.layers.size(); ++i) {
    EXPECT_GT(r16.layers[i].mean_db, r8.layers[i].mean_db + 40);
  }
}

TEST(Profiler, IdentityNetAddsNoNoise) {
  const auto g = build_identity_net(16);
  const auto data = seeded_inputs(g.input_shape, 20, 3);
  const auto qm = quantize_graph(g, data);
  const auto report = profile_per_layer(g, qm, data);
  double expected = 0;
  for (const auto& x : data) {
    expected += sqnr_empirical(x, dequantize_tensor(quantize_tensor(x, qm.input_params)));
  }
  expected /= double(data.size());
  ASSERT_FALSE(report.layers.empty());
  EXPECT_NEAR(report.layers[0].mean_db, expected, 1e-9);
  EXPECT_EQ(report.layers[0].n_excluded, 0u);
}

TEST(Profiler, DeterministicAndWellFormed) {
  const auto g = build_separable_net(desk_net_options(CoreLayerVariant::separable_qfriendly, 10, 4));
  const auto calib = seeded_inputs(g.input_shape, 8, 5);
  const auto data = seeded_inputs(g.input_shape, 6, 6);
  const auto qm = quantize_graph(g, calib);
  const auto a = profile_per_layer(g, qm, data);
  const auto b = profile_per_layer(g, qm, data);
  EXPECT_EQ(a.to_csv(), b.to_csv());
  EXPECT_EQ(a.to_json(), b.to_json());
  ASSERT_EQ(a.layers.size(), qm.steps.size());
  for (const auto& l : a.layers) {
    EXPECT_EQ(l.n_images, 6u);
    EXPECT_EQ(l.per_image_db.size(), 6u);
    EXPECT_GE(l.noise_power, 0.0);
    double sum = 0;
    std::size_t used = 0;
    for (double v : l.per_image_db) {
      if (std::isfinite(v)) {
        sum += v;
        ++used;
      }
    }
    EXPECT_EQ(used + l.n_excluded, l.n_images);
    if (used) {
      EXPECT_DOUBLE_EQ(l.mean_db, sum / double(used));
    }
  }
  const auto csv = a.to_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "layer,mean_sqnr_db,n_images,n_excluded,signal_power,noise_power,range");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), static_cast<long>(a.layers.size() + 1));
  const auto doc = nlohmann::json::parse(a.to_json());
  ASSERT_EQ(doc.at("layers").size(), a.layers.size());
  EXPECT_EQ(doc["layers"][0]["per_image_sqnr_db"].size(), 6u);
  EXPECT_EQ(doc["layers"][0]["layer"], a.layers[0].layer);
}

TEST(Profiler, ExactMatchesAreExcluded) {
  SQNRReport r;
  LayerSqnr l;
  l.layer = "x";
  l.per_image_db = {kInfiniteSqnr, 30.0};
  l.mean_db = 30.0;
  l.n_images = 2;
  l.n_excluded = 1;
  r.layers.push_back(l);
  const auto doc = nlohmann::json::parse(r.to_json());
  EXPECT_TRUE(doc["layers"][0]["per_image_sqnr_db"][0].is_null());
  EXPECT_EQ(doc["layers"][0]["per_image_sqnr_db"][1], 30.0);
  EXPECT_EQ(r.at("x").n_excluded, 1u);
  EXPECT_THROW(r.at("y"), std::out_of_range);
}

TEST(Profiler, Errors) {
  const auto g = one_conv_net(7);
  const auto data = seeded_inputs(g.input_shape, 2, 8);
  const auto qm = quantize_graph(g, data);
  EXPECT_THROW(profile_per_layer(g, qm, {}), std::invalid_argument);
  auto renamed = g;
  renamed.layers[0].name = "other";
  EXPECT_THROW(profile_per_layer(renamed, qm, data), std::invalid_argument);
  const auto id = build_identity_net(4);
  EXPECT_THROW(profile_per_layer(id, qm, data), std::invalid_argument);
}

TEST(Profiler, QuantFriendlyBeatsSeparableWithDeadChannels) {
  auto ob = desk_net_options(CoreLayerVariant::separable_v1);
  auto oc = desk_net_options(CoreLayerVariant::separable_qfriendly);
  ob.dead_channels = oc.dead_channels = true;
  const auto gb = build_separable_net(ob);
  const auto gc = build_separable_net(oc);
  const auto calib = seeded_inputs(gb.input_shape, 30, 9);
  const auto data = seeded_inputs(gb.input_shape, 30, 10);
  const auto rb = profile_per_layer(gb, quantize_graph(gb, calib), data);
  const auto rc = profile_per_layer(gc, quantize_graph(gc, calib), data);
  ASSERT_EQ(rb.layers.size(), rc.layers.size());
  for (std::size_t i = 0; i < rb.layers.size(); ++i) {
    EXPECT_EQ(rb.layers[i].layer, rc.layers[i].layer);
    EXPECT_GE(rc.layers[i].mean_db, rb.layers[i].mean_db) << rb.layers[i].layer;
  }
}
