// SPDX-License-Identifier: Apache-2.0
#include "qfs/builder.hpp"

#include <cmath>
#include <stdexcept>

namespace qfs {

CoreLayerVariant parse_variant(std::string_view s) {
  if (s == "a" || s == "standard") return CoreLayerVariant::standard;
  if (s == "b" || s == "separable_v1") return CoreLayerVariant::separable_v1;
  if (s == "c" || s == "separable_qfriendly") {
    return CoreLayerVariant::separable_qfriendly;
  }
  throw std::invalid_argument("unknown core-layer variant '" + std::string(s) +
                              "' (expected a, b or c)");
}

std::string_view to_string(CoreLayerVariant v) {
  switch (v) {
    case CoreLayerVariant::standard: return "standard";
    case CoreLayerVariant::separable_v1: return "separable_v1";
    case CoreLayerVariant::separable_qfriendly: return "separable_qfriendly";
  }
  return "standard";
}

FloatTensor ParamSource::conv_weights(int kh, int kw, std::int64_t cin,
                                      std::int64_t cout, float gain) {
  const float r = gain / std::sqrt(static_cast<float>(kh * kw * cin));
  return rng_.uniform_tensor(Shape{kh, kw, cin, cout}, -r, r);
}

FloatTensor ParamSource::depthwise_weights(int kh, int kw,
                                           std::int64_t channels) {
  const float r = ranges_.depthwise_gain / std::sqrt(static_cast<float>(kh * kw));
  return rng_.uniform_tensor(Shape{1, kh, kw, channels}, -r, r);
}

BatchNormParams ParamSource::batchnorm(std::int64_t channels) {
  BatchNormParams bn;
  const auto c = static_cast<std::size_t>(channels);
  bn.gamma.resize(c);
  bn.beta.resize(c);
  bn.mean.resize(c);
  bn.variance.resize(c);
  for (std::size_t k = 0; k < c; ++k) {
    bn.gamma[k] = rng_.uniform(ranges_.gamma_lo, ranges_.gamma_hi);
    bn.beta[k] = rng_.uniform(ranges_.beta_lo, ranges_.beta_hi);
    bn.mean[k] = rng_.uniform(ranges_.mean_lo, ranges_.mean_hi);
    bn.variance[k] = rng_.uniform(ranges_.var_lo, ranges_.var_hi);
  }
  return bn;
}

std::vector<float> ParamSource::bias(std::int64_t channels) {
  std::vector<float> b(static_cast<std::size_t>(channels));
  for (auto& v : b) v = rng_.uniform(-ranges_.bias_range, ranges_.bias_range);
  return b;
}

namespace {

LayerSpec conv_layer(std::string name, LayerKind kind, FloatTensor weights,
                     int stride) {
  LayerSpec l;
  l.name = std::move(name);
  l.kind = kind;
  l.conv = ConvSpec{stride, Padding::same,
                    static_cast<int>(kind == LayerKind::depthwise_conv2d
                                         ? weights.shape().h
                                         : weights.shape().n),
                    static_cast<int>(kind == LayerKind::depthwise_conv2d
                                         ? weights.shape().w
                                         : weights.shape().h)};
  l.weights = std::move(weights);
  return l;
}

LayerSpec bn_layer(std::string name, BatchNormParams bn) {
  LayerSpec l;
  l.name = std::move(name);
  l.kind = LayerKind::batchnorm;
  l.bn = std::move(bn);
  return l;
}

LayerSpec act_layer(std::string name, ActivationKind kind) {
  LayerSpec l;
  l.name = std::move(name);
  l.kind = LayerKind::activation;
  l.activation = kind;
  return l;
}

FloatTensor zero_output_channel(const FloatTensor& w, std::int64_t k) {
  std::vector<float> data(w.data().begin(), w.data().end());
  const auto c = static_cast<std::size_t>(w.shape().c);
  for (std::size_t i = static_cast<std::size_t>(k); i < data.size(); i += c) {
    data[i] = 0.0f;
  }
  return FloatTensor(w.shape(), std::move(data));
}

constexpr float kDeadShift = -0.5f;

/// Makes output channel k of the last conv in `layers` constant and
/// negative before its activation, so it is exactly zero afterwards.
void kill_producer_channel(std::vector<LayerSpec>& layers, std::int64_t k) {
  for (std::size_t i = layers.size(); i-- > 0;) {
    auto& l = layers[i];
    if (!is_conv(l.kind)) continue;
    l.weights = zero_output_channel(*l.weights, k);
    const auto uk = static_cast<std::size_t>(k);
    if (i + 1 < layers.size() && layers[i + 1].kind == LayerKind::batchnorm) {
      auto& bn = *layers[i + 1].bn;
      bn.gamma[uk] = 1.0f;
      bn.beta[uk] = kDeadShift;
      bn.mean[uk] = 0.0f;
      bn.variance[uk] = 0.0f;
    } else {
      if (l.bias.empty()) l.bias.assign(l.weights->shape().c, 0.0f);
      l.bias[uk] = kDeadShift;
    }
    return;
  }
}

/// Records the zero-variance statistics a dead input channel k produces in
/// the batch-norm that follows a depthwise conv.
void mark_dead_depthwise_input(std::vector<LayerSpec>& layers,
                               std::int64_t k) {
  for (std::size_t i = 0; i + 1 < layers.size(); ++i) {
    if (layers[i].kind == LayerKind::depthwise_conv2d &&
        layers[i + 1].kind == LayerKind::batchnorm) {
      auto& bn = *layers[i + 1].bn;
      const auto uk = static_cast<std::size_t>(k);
      bn.mean[uk] = 0.0f;
      bn.variance[uk] = 0.0f;
      bn.beta[uk] = 0.0f;
    }
  }
}

}  // namespace

std::vector<LayerSpec> build_core_layer(CoreLayerVariant variant,
                                        std::int64_t in_ch,
                                        std::int64_t out_ch, int stride,
                                        ParamSource& params,
                                        const std::string& prefix) {
  if (in_ch < 1 || out_ch < 1) {
    throw std::invalid_argument("core layer channel counts must be >= 1");
  }
  if (stride < 1) throw std::invalid_argument("core layer stride must be >= 1");
  const float conv_gain = params.ranges().conv_gain;
  std::vector<LayerSpec> out;
  switch (variant) {
    case CoreLayerVariant::standard:
      out.push_back(conv_layer(prefix + "/conv", LayerKind::conv2d,
                               params.conv_weights(3, 3, in_ch, out_ch, conv_gain),
                               stride));
      out.push_back(bn_layer(prefix + "/bn", params.batchnorm(out_ch)));
      out.push_back(act_layer(prefix + "/relu6", ActivationKind::relu6));
      break;
    case CoreLayerVariant::separable_v1:
      out.push_back(conv_layer(prefix + "/dw", LayerKind::depthwise_conv2d,
                               params.depthwise_weights(3, 3, in_ch), stride));
      out.push_back(bn_layer(prefix + "/dw_bn", params.batchnorm(in_ch)));
      out.push_back(act_layer(prefix + "/dw_relu6", ActivationKind::relu6));
      out.push_back(conv_layer(prefix + "/pw", LayerKind::pointwise_conv2d,
                               params.conv_weights(1, 1, in_ch, out_ch, conv_gain),
                               1));
      out.push_back(bn_layer(prefix + "/pw_bn", params.batchnorm(out_ch)));
      out.push_back(act_layer(prefix + "/pw_relu6", ActivationKind::relu6));
      break;
    case CoreLayerVariant::separable_qfriendly:
      out.push_back(conv_layer(prefix + "/dw", LayerKind::depthwise_conv2d,
                               params.depthwise_weights(3, 3, in_ch), stride));
      out.push_back(conv_layer(prefix + "/pw", LayerKind::pointwise_conv2d,
                               params.conv_weights(1, 1, in_ch, out_ch, conv_gain),
                               1));
      out.push_back(bn_layer(prefix + "/pw_bn", params.batchnorm(out_ch)));
      out.push_back(act_layer(prefix + "/pw_relu", ActivationKind::relu));
      break;
  }
  return out;
}

GraphSpec build_separable_net(const SeparableNetOptions& opts) {
  if (opts.input_size < 1 || opts.input_channels < 1 ||
      opts.stem_channels < 1 || opts.num_classes < 1) {
    throw std::invalid_argument("network dimensions must be >= 1");
  }
  ParamSource params(opts.seed, opts.ranges);
  const bool qfriendly =
      opts.variant == CoreLayerVariant::separable_qfriendly;

  GraphSpec g;
  g.name = std::string(to_string(opts.variant));
  g.input_shape = Shape{1, opts.input_size, opts.input_size,
                        opts.input_channels};

  std::vector<LayerSpec> stem;
  stem.push_back(conv_layer("conv0", LayerKind::conv2d,
                            params.conv_weights(3, 3, opts.input_channels,
                                                opts.stem_channels,
                                                opts.ranges.conv_gain),
                            opts.stem_stride));
  if (qfriendly) {
    stem[0].bias = params.bias(opts.stem_channels);
    stem.push_back(act_layer("conv0/relu", ActivationKind::relu));
  } else {
    stem.push_back(bn_layer("conv0/bn", params.batchnorm(opts.stem_channels)));
    stem.push_back(act_layer("conv0/relu6", ActivationKind::relu6));
  }
  std::int64_t dead = -1;
  if (opts.dead_channels) {
    dead = params.rng().integer(0, opts.stem_channels - 1);
    kill_producer_channel(stem, dead);
  }
  g.layers.insert(g.layers.end(), stem.begin(), stem.end());

  std::int64_t channels = opts.stem_channels;
  for (std::size_t i = 0; i < opts.core_layers.size(); ++i) {
    const auto& cfg = opts.core_layers[i];
    auto core = build_core_layer(opts.variant, channels, cfg.out_channels,
                                 cfg.stride, params,
                                 "core" + std::to_string(i + 1));
    if (opts.dead_channels) {
      mark_dead_depthwise_input(core, dead);
      if (i + 1 < opts.core_layers.size()) {
        dead = params.rng().integer(0, cfg.out_channels - 1);
        kill_producer_channel(core, dead);
      }
    }
    g.layers.insert(g.layers.end(), core.begin(), core.end());
    channels = cfg.out_channels;
  }

  const auto shapes = g.infer_shapes();
  const Shape last = shapes.empty() ? g.input_shape : shapes.back();
  LayerSpec pool;
  pool.name = "pool";
  pool.kind = LayerKind::avg_pool;
  pool.pool_h = last.h;
  pool.pool_w = last.w;
  g.layers.push_back(std::move(pool));

  auto classifier = conv_layer(
      "classifier", LayerKind::conv2d,
      params.conv_weights(1, 1, channels, opts.num_classes,
                          opts.ranges.classifier_gain),
      1);
  classifier.bias = params.bias(opts.num_classes);
  g.layers.push_back(std::move(classifier));
  if (qfriendly) {
    g.layers.push_back(act_layer("classifier/relu", ActivationKind::relu));
  }

  LayerSpec softmax;
  softmax.name = "softmax";
  softmax.kind = LayerKind::softmax;
  g.layers.push_back(std::move(softmax));

  g.infer_shapes();
  return g;
}

std::vector<CoreLayerConfig> mobilenet_v1_core_layers() {
  return {{64, 1},  {128, 2}, {128, 1}, {256, 2},  {256, 1},
          {512, 2}, {512, 1}, {512, 1}, {512, 1},  {512, 1},
          {512, 1}, {1024, 2}, {1024, 1}};
}

SeparableNetOptions mobilenet_v1_options(CoreLayerVariant variant,
                                         std::int64_t num_classes,
                                         std::uint64_t seed) {
  SeparableNetOptions o;
  o.variant = variant;
  o.input_size = 224;
  o.input_channels = 3;
  o.stem_channels = 32;
  o.stem_stride = 2;
  o.core_layers = mobilenet_v1_core_layers();
  o.num_classes = num_classes;
  o.seed = seed;
  return o;
}

SeparableNetOptions desk_net_options(CoreLayerVariant variant,
                                     std::int64_t num_classes,
                                     std::uint64_t seed) {
  SeparableNetOptions o;
  o.variant = variant;
  o.input_size = 16;
  o.input_channels = 3;
  o.stem_channels = 8;
  o.stem_stride = 2;
  o.core_layers = {{16, 1}, {32, 2}, {32, 1}, {64, 2}, {64, 1}};
  o.num_classes = num_classes;
  o.seed = seed;
  return o;
}

GraphSpec build_identity_net(std::int64_t channels) {
  if (channels < 1) throw std::invalid_argument("channels must be >= 1");
  std::vector<float> eye(static_cast<std::size_t>(channels * channels), 0.0f);
  for (std::int64_t k = 0; k < channels; ++k) {
    eye[static_cast<std::size_t>(k * channels + k)] = 1.0f;
  }
  GraphSpec g;
  g.name = "identity";
  g.input_shape = Shape{1, 1, 1, channels};
  g.layers.push_back(conv_layer("identity", LayerKind::pointwise_conv2d,
                                FloatTensor(Shape{1, 1, channels, channels},
                                            std::move(eye)),
                                1));
  LayerSpec softmax;
  softmax.name = "softmax";
  softmax.kind = LayerKind::softmax;
  g.layers.push_back(std::move(softmax));
  return g;
}

}  // namespace qfs
