#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace albench {

using Index = std::int32_t;

// Dense row-major matrix of doubles. Used for feature rows, hidden
// representations and per-row class probabilities.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) {
    return data_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  double* row_ptr(std::size_t r) { return data_.data() + r * cols_; }
  const double* row_ptr(std::size_t r) const { return data_.data() + r * cols_; }

  std::span<double> row(std::size_t r) { return {row_ptr(r), cols_}; }
  std::span<const double> row(std::size_t r) const { return {row_ptr(r), cols_}; }

  std::span<const double> data() const { return data_; }
  std::span<double> mutable_data() { return data_; }

  bool all_finite() const;

  // New matrix made of the given rows, in the given order.
  Matrix select_rows(std::span<const Index> rows) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

using FeatureMatrix = Matrix;
using ProbMatrix = Matrix;

double squared_distance(std::span<const double> a, std::span<const double> b);
double euclidean_distance(std::span<const double> a, std::span<const double> b);

}  // namespace albench
