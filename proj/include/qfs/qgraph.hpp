// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qfs/graph.hpp"

namespace qfs {

enum class StepKind { conv2d, depthwise_conv2d, activation, avg_pool };

std::string_view to_string(StepKind k);
StepKind parse_step_kind(std::string_view s);

/// One fixed-point operation. A conv step absorbs a following batch-norm
/// (folded into weights and bias) and a following activation (applied in
/// the code domain after requantization into the activation's range).
struct QuantStep {
  std::string name;          // first float layer of the fused group
  std::string source_layer;  // float layer whose output this step reproduces
  StepKind kind = StepKind::conv2d;
  ConvSpec conv;
  std::optional<QuantTensor> weights;
  std::vector<std::int64_t> bias;  // accumulator domain
  ActivationKind activation = ActivationKind::none;
  std::int64_t pool_h = 0;
  std::int64_t pool_w = 0;
  QuantParams out_params;
  std::vector<float> alpha;  // folded batch-norm scale; empty if none

  friend bool operator==(const QuantStep&, const QuantStep&) = default;
};

struct QuantModel {
  std::string name;
  Shape input_shape;
  int bits = kDefaultBits;
  QuantParams input_params;
  std::vector<QuantStep> steps;
  bool softmax = false;

  friend bool operator==(const QuantModel&, const QuantModel&) = default;
};

struct QuantizeOptions {
  int bits = kDefaultBits;
  bool fold_bn = true;
  bool remediate = false;
  bool remediate_all_bn = false;
  float threshold = kDefaultZeroVarianceThreshold;
};

/// Per-layer min/max of float activations over a calibration set.
struct Calibration {
  RangeObserver input;
  std::vector<RangeObserver> layers;
};

Calibration calibrate(const GraphSpec& g,
                      std::span<const FloatTensor> inputs);

/// Post-training quantization of a float graph:
///  1. optional zero-variance remediation of batch-norm layers,
///  2. batch-norm folding into the preceding conv,
///  3. per-tensor weight params from weight min/max,
///  4. activation params from a float calibration pass.
/// Throws std::invalid_argument on an empty calibration set or when a
/// batch-norm would be left unfolded.
QuantModel quantize_graph(const GraphSpec& g,
                          std::span<const FloatTensor> calibration,
                          const QuantizeOptions& opts = {});

struct QuantRun {
  std::vector<QuantTensor> activations;  // one per step
  FloatTensor logits;                    // dequantized final step
  FloatTensor output;                    // softmax(logits) when present
};

QuantRun run_quant(const QuantModel& m, const FloatTensor& input);

/// Human-readable one-line summaries, one per quantized tensor.
std::vector<std::string> summarize(const QuantModel& m);

}  // namespace qfs
