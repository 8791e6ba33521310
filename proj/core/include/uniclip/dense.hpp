#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace uniclip {

/// Row-major dense matrix of doubles. Vectors are 1×n matrices.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static DenseMatrix row_vector(std::vector<double> values);

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
  [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
  [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  [[nodiscard]] std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> values() noexcept { return data_; }
  [[nodiscard]] std::span<const double> values() const noexcept { return data_; }

  void fill(double v);
  [[nodiscard]] bool all_finite() const noexcept;
  [[nodiscard]] std::string shape_string() const;

  DenseMatrix& operator+=(const DenseMatrix& other);
  DenseMatrix& operator*=(double s) noexcept;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// a · b
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
/// aᵀ · b
DenseMatrix matmul_at_b(const DenseMatrix& a, const DenseMatrix& b);
/// a · bᵀ restricted to the rows of b from `b_row_begin` on.
DenseMatrix matmul_a_bt(const DenseMatrix& a, const DenseMatrix& b, std::size_t b_row_begin = 0);

/// Horizontal concatenation [a | b]; row counts must agree.
DenseMatrix hconcat(const DenseMatrix& a, const DenseMatrix& b);
/// Columns [begin, begin+count) of m.
DenseMatrix column_slice(const DenseMatrix& m, std::size_t begin, std::size_t count);
/// Stacks b under a; column counts must agree.
DenseMatrix vconcat(const DenseMatrix& a, const DenseMatrix& b);

double dot(std::span<const double> a, std::span<const double> b) noexcept;

void require_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* what);

}  // namespace uniclip
