// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "qfs/graph.hpp"
#include "qfs/random.hpp"

namespace qfs {

/// Separable-convolution core layer designs.
enum class CoreLayerVariant {
  standard,             // conv -> BN -> ReLU6
  separable_v1,         // DW -> BN -> ReLU6 -> PW -> BN -> ReLU6
  separable_qfriendly,  // DW -> PW -> BN -> ReLU
};

/// Accepts "a"/"b"/"c" or the enum names.
CoreLayerVariant parse_variant(std::string_view s);
std::string_view to_string(CoreLayerVariant v);

/// Seeded parameter initializer.
///
/// Weights are uniform in [-r, r] with r = gain * sqrt(1 / fan_in); the gain
/// is per layer kind. Batch-norm channels draw gamma, beta, mean and variance
/// uniformly from the configured intervals.
class ParamSource {
 public:
  struct Ranges {
    float conv_gain = 2.449f;       // sqrt(6): ReLU-preserving
    float depthwise_gain = 1.732f;  // sqrt(3): variance-preserving
    float classifier_gain = 1.732f;
    float gamma_lo = 0.8f, gamma_hi = 1.2f;
    float beta_lo = -0.1f, beta_hi = 0.1f;
    float mean_lo = -0.1f, mean_hi = 0.1f;
    float var_lo = 0.5f, var_hi = 1.5f;
    float bias_range = 0.1f;
  };

  explicit ParamSource(std::uint64_t seed) : rng_(seed) {}
  ParamSource(std::uint64_t seed, Ranges ranges)
      : rng_(seed), ranges_(ranges) {}

  FloatTensor conv_weights(int kh, int kw, std::int64_t cin,
                           std::int64_t cout, float gain);
  FloatTensor depthwise_weights(int kh, int kw, std::int64_t channels);
  BatchNormParams batchnorm(std::int64_t channels);
  std::vector<float> bias(std::int64_t channels);

  const Ranges& ranges() const { return ranges_; }
  Rng& rng() { return rng_; }

 private:
  Rng rng_;
  Ranges ranges_;
};

/// Layer sequence of one core layer. Layer names are `prefix` + "/dw",
/// "/dw_bn", "/dw_relu6", "/pw", "/pw_bn", "/pw_relu" (or "/pw_relu6"), and
/// for the standard variant "/conv", "/bn", "/relu6".
std::vector<LayerSpec> build_core_layer(CoreLayerVariant variant,
                                        std::int64_t in_ch,
                                        std::int64_t out_ch, int stride,
                                        ParamSource& params,
                                        const std::string& prefix);

struct CoreLayerConfig {
  std::int64_t out_channels;
  int stride;
};

struct SeparableNetOptions {
  CoreLayerVariant variant = CoreLayerVariant::separable_qfriendly;
  std::int64_t input_size = 224;
  std::int64_t input_channels = 3;
  std::int64_t stem_channels = 32;
  int stem_stride = 2;
  std::vector<CoreLayerConfig> core_layers;
  std::int64_t num_classes = 1000;
  std::uint64_t seed = 0;
  /// Kills one channel feeding every depthwise conv: the producing layer's
  /// weights for that channel are zero and its output is driven below zero
  /// before the activation, and any batch-norm on the depthwise output
  /// records that channel with zero variance.
  bool dead_channels = false;
  ParamSource::Ranges ranges{};
};

/// Stem conv, core layers, global average pool, 1x1 classifier, softmax.
///
/// The quantization-friendly variant uses Conv2d+ReLU for the stem and the
/// classifier. The other variants use Conv2d+BN+ReLU6 for the stem and a
/// plain 1x1 conv classifier.
GraphSpec build_separable_net(const SeparableNetOptions& opts);

/// MobileNetV1 core layer progression (13 layers, 7x7x1024 before pooling
/// at 224x224 input).
std::vector<CoreLayerConfig> mobilenet_v1_core_layers();

SeparableNetOptions mobilenet_v1_options(CoreLayerVariant variant,
                                         std::int64_t num_classes = 1000,
                                         std::uint64_t seed = 0);

/// A five core-layer network small enough for per-layer profiling runs.
SeparableNetOptions desk_net_options(CoreLayerVariant variant,
                                     std::int64_t num_classes = 10,
                                     std::uint64_t seed = 0);

/// Single 1x1 identity conv over `channels` followed by softmax; input shape
/// (1, 1, 1, channels).
GraphSpec build_identity_net(std::int64_t channels);

}  // namespace qfs
