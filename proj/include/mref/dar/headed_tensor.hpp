#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace mref::dar {

struct TensorShape {
  std::size_t tokens = 0;
  std::size_t heads = 0;
  std::size_t dim = 0;

  bool operator==(const TensorShape&) const = default;
  std::string to_string() const;
};

/// Dense real tensor laid out as (token, head, feature), row-major.
///
/// Houses both queries and keys. Every entry is finite and every extent is at
/// least one; the constructor rejects anything else.
class HeadedTensor {
public:
  HeadedTensor(TensorShape shape, std::vector<double> data);

  /// Zero-filled tensor of the given shape.
  static HeadedTensor zeros(TensorShape shape);

  const TensorShape& shape() const noexcept { return shape_; }
  std::size_t n_tokens() const noexcept { return shape_.tokens; }
  std::size_t n_heads() const noexcept { return shape_.heads; }
  std::size_t head_dim() const noexcept { return shape_.dim; }

  double at(std::size_t token, std::size_t head, std::size_t j) const {
    return data_[offset(token, head) + j];
  }

  /// Feature vector of one (token, head) pair.
  std::span<const double> vec(std::size_t token, std::size_t head) const {
    return {data_.data() + offset(token, head), shape_.dim};
  }

  std::span<const double> data() const noexcept { return data_; }

  /// New tensor holding the listed tokens in the listed order.
  HeadedTensor gather(std::span<const std::size_t> token_indices) const;

  bool operator==(const HeadedTensor&) const = default;

private:
  std::size_t offset(std::size_t token, std::size_t head) const noexcept {
    return (token * shape_.heads + head) * shape_.dim;
  }

  TensorShape shape_;
  std::vector<double> data_;
};

/// Three-axis array indexed (query, head, key); shared layout for logits and
/// attention probabilities.
class QueryKeyGrid {
public:
  QueryKeyGrid() = default;
  QueryKeyGrid(std::size_t queries, std::size_t heads, std::size_t keys)
      : queries_(queries), heads_(heads), keys_(keys),
        values_(queries * heads * keys, 0.0) {}

  std::size_t n_queries() const noexcept { return queries_; }
  std::size_t n_heads() const noexcept { return heads_; }
  std::size_t n_keys() const noexcept { return keys_; }

  double at(std::size_t i, std::size_t h, std::size_t k) const {
    return values_[(i * heads_ + h) * keys_ + k];
  }
  double& at(std::size_t i, std::size_t h, std::size_t k) {
    return values_[(i * heads_ + h) * keys_ + k];
  }

  std::span<const double> row(std::size_t i, std::size_t h) const {
    return {values_.data() + (i * heads_ + h) * keys_, keys_};
  }
  std::span<double> row(std::size_t i, std::size_t h) {
    return {values_.data() + (i * heads_ + h) * keys_, keys_};
  }

  std::span<const double> values() const noexcept { return values_; }

  bool operator==(const QueryKeyGrid&) const = default;

private:
  std::size_t queries_ = 0;
  std::size_t heads_ = 0;
  std::size_t keys_ = 0;
  std::vector<double> values_;
};

/// Pre-softmax scores q.k / sqrt(d).
struct LogitMap : QueryKeyGrid {
  using QueryKeyGrid::QueryKeyGrid;
};

/// Row-stochastic attention weights; every (query, head) row sums to one.
struct AttentionMap : QueryKeyGrid {
  using QueryKeyGrid::QueryKeyGrid;
};

}  // namespace mref::dar
