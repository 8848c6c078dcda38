#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace tp {

// Dense row-major matrix of doubles. Used for weights, token sequences
// (one token per row) and attention maps alike.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// out = a * b
Matrix matmul(const Matrix& a, const Matrix& b);

// Selects rows by index, in the given order.
Matrix gather_rows(const Matrix& m, std::span<const int> rows);

// Stacks matrices with equal column counts vertically.
Matrix vstack(std::span<const Matrix* const> parts);

double max_abs_diff(const Matrix& a, const Matrix& b);

}  // namespace tp
