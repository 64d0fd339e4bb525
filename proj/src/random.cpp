// SPDX-License-Identifier: Apache-2.0
#include "qfs/random.hpp"

namespace qfs {

FloatTensor Rng::uniform_tensor(Shape shape, float lo, float hi) {
  shape.validate();
  std::vector<float> data(shape.elements());
  for (auto& v : data) v = uniform(lo, hi);
  return FloatTensor(shape, std::move(data));
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  // splitmix64 finalizer
  std::uint64_t z = base + 0x9E3779B97F4A7C15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::vector<FloatTensor> seeded_inputs(Shape shape, std::size_t count,
                                       std::uint64_t seed) {
  std::vector<FloatTensor> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, i));
    out.push_back(rng.uniform_tensor(shape, -1.0f, 1.0f));
  }
  return out;
}

}  // namespace qfs
