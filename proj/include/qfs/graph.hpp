// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qfs/bnfold.hpp"
#include "qfs/kernels.hpp"
#include "qfs/tensor.hpp"

namespace qfs {

enum class LayerKind {
  conv2d,
  depthwise_conv2d,
  pointwise_conv2d,
  batchnorm,
  activation,
  avg_pool,
  softmax,
};

std::string_view to_string(LayerKind k);
LayerKind parse_layer_kind(std::string_view s);

bool is_conv(LayerKind k);

/// One node of a linear pipeline. Parameters are owned by the layer.
struct LayerSpec {
  std::string name;
  LayerKind kind = LayerKind::activation;
  ConvSpec conv;                                  // conv kinds
  ActivationKind activation = ActivationKind::none;
  std::int64_t pool_h = 0;                        // 0 = whole input extent
  std::int64_t pool_w = 0;
  std::optional<FloatTensor> weights;             // conv kinds
  std::vector<float> bias;                        // conv kinds, optional
  std::optional<BatchNormParams> bn;              // batchnorm

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Single-input, single-output layer pipeline.
struct GraphSpec {
  std::string name;
  Shape input_shape;
  std::vector<LayerSpec> layers;

  /// Output shape of every layer. Throws std::invalid_argument when
  /// parameters are missing or shapes do not chain, or when a softmax is
  /// anywhere but last.
  std::vector<Shape> infer_shapes() const;

  std::size_t index_of(std::string_view layer_name) const;

  friend bool operator==(const GraphSpec&, const GraphSpec&) = default;
};

struct FloatRun {
  std::vector<FloatTensor> activations;  // one per layer, in order

  const FloatTensor& output() const { return activations.back(); }
};

FloatTensor run_layer_float(const LayerSpec& layer, const FloatTensor& input);

/// Executes every layer with the float kernels, keeping all activations.
FloatRun run_float(const GraphSpec& g, const FloatTensor& input);

/// Folds every batch-norm that directly follows a conv layer into that
/// conv's weights and bias. Other batch-norm layers are left in place.
GraphSpec fold_batchnorm(const GraphSpec& g);

/// Applies zero-variance remediation to batch-norm layers fed by a depthwise
/// conv, or to every batch-norm layer when `all_bn` is set.
GraphSpec remediate_graph(const GraphSpec& g, float threshold,
                          bool all_bn = false);

}  // namespace qfs
