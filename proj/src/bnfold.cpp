// SPDX-License-Identifier: Apache-2.0
#include "qfs/bnfold.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace qfs {

void BatchNormParams::validate() const {
  const auto c = gamma.size();
  if (c == 0 || beta.size() != c || mean.size() != c || variance.size() != c) {
    throw std::invalid_argument("batch-norm parameter vectors are ragged");
  }
  if (!(epsilon > 0.0f) || !std::isfinite(epsilon)) {
    throw std::invalid_argument("batch-norm epsilon must be positive");
  }
  for (std::size_t k = 0; k < c; ++k) {
    if (!(variance[k] >= 0.0f) || !std::isfinite(variance[k])) {
      throw std::invalid_argument("batch-norm variance of channel " +
                                  std::to_string(k) + " is invalid");
    }
    if (!std::isfinite(gamma[k]) || !std::isfinite(beta[k]) ||
        !std::isfinite(mean[k])) {
      throw std::invalid_argument("batch-norm channel " + std::to_string(k) +
                                  " has a non-finite parameter");
    }
  }
}

namespace {

double inv_std(const BatchNormParams& bn, std::size_t k) {
  return 1.0 / std::sqrt(static_cast<double>(bn.variance[k]) +
                         static_cast<double>(bn.epsilon));
}

}  // namespace

FloatTensor batchnorm_apply_float(const FloatTensor& t,
                                  const BatchNormParams& bn) {
  bn.validate();
  const auto ch = static_cast<std::size_t>(t.shape().c);
  if (bn.channels() != ch) {
    throw std::invalid_argument("batch-norm has " +
                                std::to_string(bn.channels()) +
                                " channels, tensor has " + std::to_string(ch));
  }
  std::vector<double> scale(ch);
  for (std::size_t k = 0; k < ch; ++k) scale[k] = inv_std(bn, k);
  std::vector<float> out(t.size());
  const auto x = t.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::size_t k = i % ch;
    out[i] = static_cast<float>(
        static_cast<double>(bn.gamma[k]) *
            (static_cast<double>(x[i]) - bn.mean[k]) * scale[k] +
        bn.beta[k]);
  }
  return FloatTensor(t.shape(), std::move(out));
}

FoldedBN fold_bn(const BatchNormParams& bn) {
  bn.validate();
  FoldedBN f;
  f.alpha.resize(bn.channels());
  f.beta_prime.resize(bn.channels());
  for (std::size_t k = 0; k < bn.channels(); ++k) {
    const double a = static_cast<double>(bn.gamma[k]) * inv_std(bn, k);
    f.alpha[k] = static_cast<float>(a);
    f.beta_prime[k] =
        static_cast<float>(static_cast<double>(bn.beta[k]) - a * bn.mean[k]);
  }
  return f;
}

FoldedWeights fold_into_weights(const FloatTensor& weights,
                                const FoldedBN& folded,
                                const std::vector<float>& existing_bias) {
  const auto ch = static_cast<std::size_t>(weights.shape().c);
  if (folded.alpha.size() != ch || folded.beta_prime.size() != ch) {
    throw std::invalid_argument("folded batch-norm has " +
                                std::to_string(folded.alpha.size()) +
                                " channels, weights have " +
                                std::to_string(ch) + " output channels");
  }
  if (!existing_bias.empty() && existing_bias.size() != ch) {
    throw std::invalid_argument("conv bias length does not match channels");
  }
  std::vector<float> w(weights.data().begin(), weights.data().end());
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = static_cast<float>(static_cast<double>(w[i]) * folded.alpha[i % ch]);
  }
  std::vector<float> bias(ch);
  for (std::size_t k = 0; k < ch; ++k) {
    const double b0 = existing_bias.empty() ? 0.0 : existing_bias[k];
    bias[k] = static_cast<float>(static_cast<double>(folded.alpha[k]) * b0 +
                                 folded.beta_prime[k]);
  }
  return {FloatTensor(weights.shape(), std::move(w)), std::move(bias)};
}

std::vector<std::size_t> zero_variance_channels(const BatchNormParams& bn,
                                                float threshold) {
  std::vector<std::size_t> dead;
  for (std::size_t k = 0; k < bn.variance.size(); ++k) {
    if (bn.variance[k] <= threshold) dead.push_back(k);
  }
  return dead;
}

BatchNormParams remediate_zero_variance(const BatchNormParams& bn,
                                        float threshold) {
  bn.validate();
  const auto dead = zero_variance_channels(bn, threshold);
  if (dead.empty()) return bn;
  if (dead.size() == bn.channels()) {
    throw std::invalid_argument(
        "zero-variance remediation: every channel is below threshold, no "
        "donor channels");
  }
  double sum = 0.0;
  std::size_t donors = 0;
  for (float v : bn.variance) {
    if (v > threshold) {
      sum += v;
      ++donors;
    }
  }
  const auto replacement = static_cast<float>(sum / static_cast<double>(donors));
  BatchNormParams out = bn;
  for (auto k : dead) out.variance[k] = replacement;
  return out;
}

WeightStats weight_stats(const FloatTensor& weights) {
  const auto w = weights.data();
  if (w.empty()) throw std::invalid_argument("weight_stats: empty tensor");
  WeightStats s;
  s.min = *std::min_element(w.begin(), w.end());
  s.max = *std::max_element(w.begin(), w.end());
  double sum = 0.0;
  double sum_sq = 0.0;
  double max_abs = 0.0;
  for (float v : w) {
    sum += v;
    sum_sq += static_cast<double>(v) * v;
    max_abs = std::max(max_abs, std::fabs(static_cast<double>(v)));
  }
  const auto n = static_cast<double>(w.size());
  s.mean = std::clamp(sum / n, s.min, s.max);
  double var = 0.0;
  for (float v : w) var += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(var / n);
  const double rms = std::sqrt(sum_sq / n);
  s.max_abs_over_rms = rms > 0.0 ? max_abs / rms : 0.0;
  return s;
}

}  // namespace qfs
