#include "mbvd/core/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "mbvd/core/errors.hpp"
#include "mbvd/simd/kernels.hpp"

namespace mbvd {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw UsageError("matrix data size " + std::to_string(data_.size()) + " does not match " +
                     std::to_string(rows_) + "x" + std::to_string(cols_));
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw UsageError("ragged matrix initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::row_vector(std::span<const double> values) {
  return Matrix(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

std::string Matrix::shape_string() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

void Matrix::reshape(std::size_t rows, std::size_t cols) {
  if (rows * cols != data_.size()) {
    throw UsageError("cannot reshape " + shape_string() + " to " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  }
  rows_ = rows;
  cols_ = cols;
}

Matrix& Matrix::operator+=(const Matrix& other) {
  if (!same_shape(other)) throw UsageError("shape mismatch in +=: " + shape_string() + " vs " + other.shape_string());
  simd::axpy(1.0, other.data(), data(), data_.size());
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  if (!same_shape(other)) throw UsageError("shape mismatch in -=: " + shape_string() + " vs " + other.shape_string());
  simd::axpy(-1.0, other.data(), data(), data_.size());
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

double Matrix::sum() const {
  double acc = 0.0;
  for (double v : data_) acc += v;
  return acc;
}

double Matrix::squared_norm() const { return simd::dot(data(), data(), data_.size()); }

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw UsageError("matmul shape mismatch: " + a.shape_string() + " * " + b.shape_string());
  Matrix c(a.rows(), b.cols());
  simd::gemm_nn(a.rows(), b.cols(), a.cols(), a.data(), b.data(), c.data());
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw UsageError("matmul_nt shape mismatch: " + a.shape_string() + " * " + b.shape_string() + "^T");
  Matrix c(a.rows(), b.rows());
  // With many rows on the left the copy of b is cheap next to the product,
  // and the nn kernel blocks far better than row-by-row dots.
  if (a.rows() >= 4 * b.rows() || a.rows() >= 64) {
    const Matrix bt = transpose(b);
    simd::gemm_nn(a.rows(), b.rows(), a.cols(), a.data(), bt.data(), c.data());
  } else {
    simd::gemm_nt(a.rows(), b.rows(), a.cols(), a.data(), b.data(), c.data());
  }
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw UsageError("matmul_tn shape mismatch: " + a.shape_string() + "^T * " + b.shape_string());
  Matrix c(a.cols(), b.cols());
  simd::gemm_tn(a.rows(), b.cols(), a.cols(), a.data(), b.data(), c.data());
  return c;
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) t(c, r) = m(r, c);
  }
  return t;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) throw UsageError("max_abs_diff shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace mbvd
