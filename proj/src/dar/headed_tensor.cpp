#include "mref/dar/headed_tensor.hpp"

#include <cmath>

#include "mref/errors.hpp"

namespace mref::dar {

std::string TensorShape::to_string() const {
  return "(" + std::to_string(tokens) + " tokens x " + std::to_string(heads) + " heads x " +
         std::to_string(dim) + " dim)";
}

HeadedTensor::HeadedTensor(TensorShape shape, std::vector<double> data)
    : shape_(shape), data_(std::move(data)) {
  if (shape_.tokens == 0 || shape_.heads == 0 || shape_.dim == 0) {
    throw ShapeError("tensor extents must all be >= 1, got " + shape_.to_string());
  }
  const std::size_t expected = shape_.tokens * shape_.heads * shape_.dim;
  if (data_.size() != expected) {
    throw ShapeError("tensor " + shape_.to_string() + " needs " + std::to_string(expected) +
                     " values, got " + std::to_string(data_.size()));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw DomainError("tensor entry " + std::to_string(i) + " is not finite");
    }
  }
}

HeadedTensor HeadedTensor::zeros(TensorShape shape) {
  return HeadedTensor(shape, std::vector<double>(shape.tokens * shape.heads * shape.dim, 0.0));
}

HeadedTensor HeadedTensor::gather(std::span<const std::size_t> token_indices) const {
  if (token_indices.empty()) {
    throw ShapeError("cannot gather zero tokens");
  }
  const std::size_t stride = shape_.heads * shape_.dim;
  std::vector<double> out;
  out.reserve(token_indices.size() * stride);
  for (std::size_t t : token_indices) {
    if (t >= shape_.tokens) {
      throw ShapeError("token index " + std::to_string(t) + " out of range for " +
                       shape_.to_string());
    }
    const auto first = data_.begin() + static_cast<std::ptrdiff_t>(t * stride);
    out.insert(out.end(), first, first + static_cast<std::ptrdiff_t>(stride));
  }
  return HeadedTensor({token_indices.size(), shape_.heads, shape_.dim}, std::move(out));
}

}  // namespace mref::dar
