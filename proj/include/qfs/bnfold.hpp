// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "qfs/tensor.hpp"

namespace qfs {

/// TensorFlow's batch-norm epsilon.
inline constexpr float kDefaultBnEpsilon = 0.0010000000475f;
inline constexpr float kDefaultZeroVarianceThreshold = 1e-12f;

/// Per-channel inference-time batch normalization:
///   y = gamma * (x - mean) / sqrt(variance + epsilon) + beta
struct BatchNormParams {
  std::vector<float> gamma;
  std::vector<float> beta;
  std::vector<float> mean;
  std::vector<float> variance;
  float epsilon = kDefaultBnEpsilon;

  std::size_t channels() const { return gamma.size(); }

  /// Throws std::invalid_argument on ragged vectors, negative or non-finite
  /// variance, or epsilon <= 0.
  void validate() const;

  friend bool operator==(const BatchNormParams&,
                         const BatchNormParams&) = default;
};

/// y = alpha * x + beta_prime, per channel.
struct FoldedBN {
  std::vector<float> alpha;
  std::vector<float> beta_prime;
};

struct WeightStats {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double std = 0.0;
  double max_abs_over_rms = 0.0;
};

FloatTensor batchnorm_apply_float(const FloatTensor& t,
                                  const BatchNormParams& bn);

FoldedBN fold_bn(const BatchNormParams& bn);

struct FoldedWeights {
  FloatTensor weights;
  std::vector<float> bias;
};

/// Scales the output-channel (last) axis of `weights` by alpha and returns
/// beta' as the bias. `existing_bias`, when non-empty, is the conv's own
/// bias and is carried through the transform as alpha*b + beta'.
FoldedWeights fold_into_weights(const FloatTensor& weights,
                                const FoldedBN& folded,
                                const std::vector<float>& existing_bias = {});

/// Replaces every variance <= threshold by the mean variance of the channels
/// above it. Throws std::invalid_argument if no channel is above threshold.
BatchNormParams remediate_zero_variance(
    const BatchNormParams& bn,
    float threshold = kDefaultZeroVarianceThreshold);

/// Indices of channels with variance <= threshold.
std::vector<std::size_t> zero_variance_channels(
    const BatchNormParams& bn,
    float threshold = kDefaultZeroVarianceThreshold);

WeightStats weight_stats(const FloatTensor& weights);

}  // namespace qfs
