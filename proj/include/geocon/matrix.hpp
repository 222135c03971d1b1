// SPDX-FileCopyrightText: Copyright (c) 2026 The geocon authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "geocon/common.hpp"

namespace geocon {

// Dense row-major matrix of doubles. Hosts every learnable weight; all
// public operations keep entries finite and never broadcast shapes.
class DenseMatrix {
 public:
  DenseMatrix() = default;

  DenseMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_)
      throw config_error("DenseMatrix: data length " + std::to_string(data_.size()) +
                         " does not match " + std::to_string(rows_) + "x" +
                         std::to_string(cols_));
    check_finite("construction");
  }

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }
  double* row_ptr(std::size_t i) { return data_.data() + i * cols_; }

  void set_zero() { std::fill(data_.begin(), data_.end(), 0.0); }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  // y = M x  (x has cols() entries, y has rows() entries)
  void matvec(const double* x, double* y) const {
    const double* w = data_.data();
    for (std::size_t i = 0; i < rows_; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < cols_; ++j) acc += w[j] * x[j];
      y[i] = acc;
      w += cols_;
    }
  }

  // out += M^T d  (d has rows() entries, out has cols() entries)
  void add_matvec_transposed(const double* d, double* out) const {
    const double* w = data_.data();
    for (std::size_t i = 0; i < rows_; ++i) {
      const double di = d[i];
      for (std::size_t j = 0; j < cols_; ++j) out[j] += w[j] * di;
      w += cols_;
    }
  }

  // this += d a^T  (rank-1 gradient accumulation)
  void add_outer(const double* d, const double* a) {
    double* w = data_.data();
    for (std::size_t i = 0; i < rows_; ++i) {
      const double di = d[i];
      for (std::size_t j = 0; j < cols_; ++j) w[j] += di * a[j];
      w += cols_;
    }
  }

  void add_scaled(const DenseMatrix& other, double s) {
    if (other.rows_ != rows_ || other.cols_ != cols_)
      throw config_error("DenseMatrix::add_scaled: shape mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += s * other.data_[i];
  }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  void check_finite(const std::string& where) const {
    if (!all_finite())
      throw numeric_error("DenseMatrix: non-finite entry after " + where);
  }

  bool operator==(const DenseMatrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

}  // namespace geocon
