// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "permhe/error.hpp"

namespace permhe {

/// n x n real matrix, row-major. The unit of all linear-layer algebra.
class SquareMatrix {
 public:
  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t order) : order_(order), entries_(order * order, 0.0) {
    require(order > 0, ErrorCode::dimension, "matrix order must be positive");
  }
  SquareMatrix(std::size_t order, std::vector<double> entries) : order_(order), entries_(std::move(entries)) {
    require(order > 0, ErrorCode::dimension, "matrix order must be positive");
    require(entries_.size() == order * order, ErrorCode::dimension,
            "expected " + std::to_string(order * order) + " entries, got " + std::to_string(entries_.size()));
    for (double v : entries_) require(std::isfinite(v), ErrorCode::dimension, "matrix entries must be finite");
  }

  static SquareMatrix identity(std::size_t order) {
    SquareMatrix m(order);
    for (std::size_t i = 0; i < order; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t order() const { return order_; }
  double operator()(std::size_t i, std::size_t j) const { return entries_[i * order_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return entries_[i * order_ + j]; }
  std::span<const double> entries() const { return entries_; }

  friend bool operator==(const SquareMatrix&, const SquareMatrix&) = default;

 private:
  std::size_t order_ = 0;
  std::vector<double> entries_;
};

/// General rows x cols matrix used for layer weights before padding.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), entries_(rows * cols, 0.0) {}
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
      : rows_(rows), cols_(cols), entries_(std::move(entries)) {
    require(entries_.size() == rows * cols, ErrorCode::dimension,
            "expected " + std::to_string(rows * cols) + " entries, got " + std::to_string(entries_.size()));
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double operator()(std::size_t i, std::size_t j) const { return entries_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return entries_[i * cols_ + j]; }
  std::span<const double> entries() const { return entries_; }

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> entries_;
};

}  // namespace permhe
