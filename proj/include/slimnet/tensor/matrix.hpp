#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace slimnet {

using Vector = std::vector<double>;

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  bool all_finite() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Standard product with a fixed serial accumulation order over the inner
// dimension for every output element. Throws ShapeError on mismatch.
Matrix matmul(const Matrix& a, const Matrix& b);

// a^T * b and a * b^T, same accumulation contract as matmul.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix matmul_nt(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& a);

// Rows listed in `keep`, in the given order. Throws IndexError when an index
// is out of range.
Matrix row_slice(const Matrix& w, std::span<const std::size_t> keep);

// Columns listed in `keep`, in the given order.
Matrix col_slice(const Matrix& w, std::span<const std::size_t> keep);

// Adds `v` to every row of `m`.
void add_row_vector(Matrix& m, std::span<const double> v);

// Column sums, accumulated serially over rows.
Vector column_sums(const Matrix& m);

double max_abs_diff(const Matrix& a, const Matrix& b);

}  // namespace slimnet
