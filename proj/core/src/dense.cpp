#include "uniclip/dense.hpp"

#include <algorithm>
#include <cmath>

#include "uniclip/errors.hpp"

namespace uniclip {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("DenseMatrix: data length " + std::to_string(data_.size()) +
                     " != " + std::to_string(rows_) + "x" + std::to_string(cols_));
  }
}

DenseMatrix DenseMatrix::row_vector(std::vector<double> values) {
  const auto n = values.size();
  return DenseMatrix(1, n, std::move(values));
}

void DenseMatrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool DenseMatrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string DenseMatrix::shape_string() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

DenseMatrix& DenseMatrix::operator+=(const DenseMatrix& other) {
  require_same_shape(*this, other, "operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

DenseMatrix& DenseMatrix::operator*=(double s) noexcept {
  for (auto& v : data_) v *= s;
  return *this;
}

void require_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(what) + ": shape " + a.shape_string() + " vs " +
                     b.shape_string());
  }
}

namespace {

// out[i, :] += Σ_k a[i, k] · b[k, :], four output rows at a time so each b row is reused.
void multiply_into(const double* a, std::size_t a_stride, std::size_t rows, std::size_t inner, const double* b,
                   std::size_t n, double* out) {
  std::size_t i = 0;
  for (; i + 4 <= rows; i += 4) {
    const double* a0 = a + i * a_stride;
    const double* a1 = a0 + a_stride;
    const double* a2 = a1 + a_stride;
    const double* a3 = a2 + a_stride;
    double* o0 = out + i * n;
    double* o1 = o0 + n;
    double* o2 = o1 + n;
    double* o3 = o2 + n;
    for (std::size_t k = 0; k < inner; ++k) {
      const double x0 = a0[k], x1 = a1[k], x2 = a2[k], x3 = a3[k];
      const double* br = b + k * n;
      for (std::size_t j = 0; j < n; ++j) {
        const double bj = br[j];
        o0[j] += x0 * bj;
        o1[j] += x1 * bj;
        o2[j] += x2 * bj;
        o3[j] += x3 * bj;
      }
    }
  }
  for (; i < rows; ++i) {
    const double* ar = a + i * a_stride;
    double* o = out + i * n;
    for (std::size_t k = 0; k < inner; ++k) {
      const double x = ar[k];
      const double* br = b + k * n;
      for (std::size_t j = 0; j < n; ++j) o[j] += x * br[j];
    }
  }
}

DenseMatrix transpose_rows(const DenseMatrix& m, std::size_t row_begin) {
  DenseMatrix t(m.cols(), m.rows() - row_begin);
  for (std::size_t r = row_begin; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) t(c, r - row_begin) = m(r, c);
  }
  return t;
}

}  // namespace

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + a.shape_string() + " · " + b.shape_string());
  }
  DenseMatrix out(a.rows(), b.cols());
  if (out.empty() || a.cols() == 0) return out;
  multiply_into(a.values().data(), a.cols(), a.rows(), a.cols(), b.values().data(), b.cols(), out.values().data());
  return out;
}

DenseMatrix matmul_at_b(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_at_b: " + a.shape_string() + "ᵀ · " + b.shape_string());
  }
  DenseMatrix out(a.cols(), b.cols());
  if (out.empty() || a.rows() == 0) return out;
  const DenseMatrix at = transpose_rows(a, 0);
  multiply_into(at.values().data(), at.cols(), at.rows(), at.cols(), b.values().data(), b.cols(),
                out.values().data());
  return out;
}

DenseMatrix matmul_a_bt(const DenseMatrix& a, const DenseMatrix& b, std::size_t b_row_begin) {
  if (a.cols() != b.cols() || b_row_begin > b.rows()) {
    throw ShapeError("matmul_a_bt: " + a.shape_string() + " · " + b.shape_string() + "ᵀ");
  }
  DenseMatrix out(a.rows(), b.rows() - b_row_begin);
  if (out.empty() || a.cols() == 0) return out;
  const DenseMatrix bt = transpose_rows(b, b_row_begin);
  multiply_into(a.values().data(), a.cols(), a.rows(), a.cols(), bt.values().data(), bt.cols(),
                out.values().data());
  return out;
}

DenseMatrix hconcat(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("hconcat: " + a.shape_string() + " | " + b.shape_string());
  }
  DenseMatrix out(a.rows(), a.cols() + b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto dst = out.row(r);
    std::copy(a.row(r).begin(), a.row(r).end(), dst.begin());
    std::copy(b.row(r).begin(), b.row(r).end(), dst.begin() + static_cast<std::ptrdiff_t>(a.cols()));
  }
  return out;
}

DenseMatrix column_slice(const DenseMatrix& m, std::size_t begin, std::size_t count) {
  if (begin + count > m.cols()) {
    throw ShapeError("column_slice: [" + std::to_string(begin) + ", +" + std::to_string(count) +
                     ") out of " + m.shape_string());
  }
  DenseMatrix out(m.rows(), count);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto src = m.row(r).subspan(begin, count);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

DenseMatrix vconcat(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  if (a.cols() != b.cols()) {
    throw ShapeError("vconcat: " + a.shape_string() + " over " + b.shape_string());
  }
  std::vector<double> data(a.values().begin(), a.values().end());
  data.insert(data.end(), b.values().begin(), b.values().end());
  return DenseMatrix(a.rows() + b.rows(), a.cols(), std::move(data));
}

double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace uniclip
