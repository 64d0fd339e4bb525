// SPDX-License-Identifier: Apache-2.0
#include "qfs/tensor.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace qfs {

void Shape::validate() const {
  if (n < 1 || h < 1 || w < 1 || c < 1) {
    throw std::invalid_argument("shape " + str() +
                                ": every dimension must be >= 1");
  }
  constexpr auto kLimit =
      static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max());
  std::uint64_t count = 1;
  for (std::int64_t d : {n, h, w, c}) {
    if (count > kLimit / static_cast<std::uint64_t>(d)) {
      throw std::invalid_argument("shape " + str() +
                                  ": element count overflows");
    }
    count *= static_cast<std::uint64_t>(d);
  }
}

std::string Shape::str() const {
  return "(" + std::to_string(n) + "," + std::to_string(h) + "," +
         std::to_string(w) + "," + std::to_string(c) + ")";
}

FloatTensor::FloatTensor(Shape shape, std::vector<float> data)
    : shape_(shape), data_(std::move(data)) {
  shape_.validate();
  if (data_.size() != shape_.elements()) {
    throw std::invalid_argument(
        "tensor data length " + std::to_string(data_.size()) +
        " does not match shape " + shape_.str() + " (expected " +
        std::to_string(shape_.elements()) + ")");
  }
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw std::invalid_argument("tensor value at index " +
                                  std::to_string(i) + " is not finite");
    }
  }
}

FloatTensor FloatTensor::zeros(Shape shape) {
  shape.validate();
  return FloatTensor(shape, std::vector<float>(shape.elements(), 0.0f));
}

float FloatTensor::at(std::int64_t n, std::int64_t h, std::int64_t w,
                      std::int64_t c) const {
  if (!shape_.contains(n, h, w, c)) {
    throw std::out_of_range("index out of bounds for shape " + shape_.str());
  }
  return data_[shape_.offset(n, h, w, c)];
}

QuantTensor::QuantTensor(Shape shape, std::vector<std::uint16_t> codes,
                         QuantParams params)
    : shape_(shape), codes_(std::move(codes)), params_(params) {
  shape_.validate();
  if (codes_.size() != shape_.elements()) {
    throw std::invalid_argument(
        "code count " + std::to_string(codes_.size()) +
        " does not match shape " + shape_.str());
  }
  const auto top = params_.max_code();
  for (std::size_t i = 0; i < codes_.size(); ++i) {
    if (codes_[i] > top) {
      throw std::invalid_argument("code at index " + std::to_string(i) +
                                  " exceeds 2^bits - 1");
    }
  }
}

std::uint16_t QuantTensor::at(std::int64_t n, std::int64_t h, std::int64_t w,
                              std::int64_t c) const {
  if (!shape_.contains(n, h, w, c)) {
    throw std::out_of_range("index out of bounds for shape " + shape_.str());
  }
  return codes_[shape_.offset(n, h, w, c)];
}

}  // namespace qfs
