// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qfs/graph.hpp"
#include "qfs/qgraph.hpp"
#include "qfs/tensor.hpp"

namespace qfs {

/// Returned by sqnr_empirical when the test signal matches exactly.
inline constexpr double kInfiniteSqnr = std::numeric_limits<double>::infinity();

/// 10·log10(Σx² / Σn²) with n = test - reference, in dB.
/// Throws std::invalid_argument on shape mismatch or an all-zero reference.
double sqnr_empirical(const FloatTensor& reference, const FloatTensor& test);

/// Mean of x² over all elements.
double signal_power(const FloatTensor& t);

/// Mean of (test - reference)² over all elements.
double noise_power(const FloatTensor& reference, const FloatTensor& test);

/// 10·log10(12·(2^b - 1)²): the range-independent term of the uniform
/// quantizer SQNR. 58.92 dB at 8 bits.
double sqnr_ceiling_db(int bits);

/// Uniform-noise model: ceiling(b) - 10·log10((x_max - x_min)² / E(x²)).
double sqnr_theoretical(const QuantParams& p, double signal_power);

/// Δ²/12.
double noise_power_theoretical(const QuantParams& p);

struct LayerSqnr {
  std::string layer;
  std::vector<double> per_image_db;  // +inf: exact match, NaN: zero signal
  double mean_db = 0.0;              // mean over finite per-image values
  std::size_t n_images = 0;
  std::size_t n_excluded = 0;
  double signal_power = 0.0;  // mean over images of E(x²)
  double noise_power = 0.0;   // mean over images of E(n²)
  double range = 0.0;         // x_max - x_min of the quantized activation
};

struct SQNRReport {
  std::vector<LayerSqnr> layers;

  const LayerSqnr& at(std::string_view layer) const;

  /// Columns: layer,mean_sqnr_db,n_images,n_excluded,signal_power,
  /// noise_power,range
  std::string to_csv() const;

  /// {"layers": [{..., "per_image_sqnr_db": [...]}]}; non-finite values are
  /// written as null.
  std::string to_json() const;
};

/// Runs both pipelines on every input and measures, for each quantized
/// step, the SQNR of its dequantized output against the float activation
/// of the layer it reproduces. Per-layer means average dB values in input
/// order.
SQNRReport profile_per_layer(const GraphSpec& float_graph,
                             const QuantModel& quant_model,
                             std::span<const FloatTensor> inputs);

}  // namespace qfs
