// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "qfs/tensor.hpp"

namespace qfs {

/// Seeded generator with platform-independent output.
///
/// std::uniform_real_distribution is implementation-defined, so uniform
/// variates are built directly from the 64-bit engine output.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform double in [0, 1).
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  float uniform(float lo, float hi) {
    return static_cast<float>(lo + (static_cast<double>(hi) - lo) * unit());
  }

  /// Uniform integer in [lo, hi].
  std::int64_t integer(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(engine_() % span);
  }

  std::uint64_t next() { return engine_(); }

  FloatTensor uniform_tensor(Shape shape, float lo, float hi);

 private:
  std::mt19937_64 engine_;
};

/// Seed for the i-th member of a seeded dataset; decorrelates neighbours.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

/// `count` tensors of shape `shape`, each uniform in [-1, 1).
std::vector<FloatTensor> seeded_inputs(Shape shape, std::size_t count,
                                       std::uint64_t seed);

}  // namespace qfs
