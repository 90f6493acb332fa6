// SPDX-License-Identifier: Apache-2.0
/**
 * @file   array.hpp
 * @brief  Dense row-major array of doubles used for every vector, matrix and
 *         sequence tensor in the engine.
 */
#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"

namespace riskseq {

using Shape = std::vector<std::size_t>;

inline std::string shape_string(const Shape &shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i)
      out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

inline std::size_t shape_size(const Shape &shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

class Array {
public:
  Array() = default;

  explicit Array(Shape shape, double fill = 0.0)
    : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

  Array(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_size(shape_) != data_.size())
      fail(ErrorKind::Dimension, "shape " + shape_string(shape_) +
                                   " does not match " +
                                   std::to_string(data_.size()) + " values");
  }

  static Array vector(std::initializer_list<double> values) {
    return Array({values.size()}, std::vector<double>(values));
  }

  static Array matrix(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t n = rows.size();
    const std::size_t m = n ? rows.begin()->size() : 0;
    std::vector<double> data;
    data.reserve(n * m);
    for (const auto &row : rows) {
      if (row.size() != m)
        fail(ErrorKind::Dimension, "ragged matrix literal");
      data.insert(data.end(), row.begin(), row.end());
    }
    return Array({n, m}, std::move(data));
  }

  const Shape &shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  const std::vector<double> &storage() const noexcept { return data_; }

  double &operator[](std::size_t flat) { return data_[flat]; }
  double operator[](std::size_t flat) const { return data_[flat]; }

  double &at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  double at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }

  double &at(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  double at(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }

  /// Contiguous slice for a fixed leading index.
  std::span<double> row(std::size_t i) {
    const std::size_t stride = data_.size() / shape_[0];
    return {data_.data() + i * stride, stride};
  }
  std::span<const double> row(std::size_t i) const {
    const std::size_t stride = data_.size() / shape_[0];
    return {data_.data() + i * stride, stride};
  }

  /// Innermost vector of a rank-3 array.
  std::span<double> row(std::size_t i, std::size_t j) {
    return {data_.data() + (i * shape_[1] + j) * shape_[2], shape_[2]};
  }
  std::span<const double> row(std::size_t i, std::size_t j) const {
    return {data_.data() + (i * shape_[1] + j) * shape_[2], shape_[2]};
  }

  void fill(double value) { std::fill(data_.begin(), data_.end(), value); }

  bool operator==(const Array &) const = default;

private:
  Shape shape_;
  std::vector<double> data_;
};

inline void require_shape(const Array &a, const Shape &expected,
                          const std::string &what) {
  if (a.shape() != expected)
    fail(ErrorKind::Dimension, what + ": got " + shape_string(a.shape()) +
                                 ", expected " + shape_string(expected));
}

inline void require_same_shape(const Array &a, const Array &b,
                               const std::string &what) {
  if (a.shape() != b.shape())
    fail(ErrorKind::Dimension, what + ": shapes " + shape_string(a.shape()) +
                                 " and " + shape_string(b.shape()) + " differ");
}

} // namespace riskseq
