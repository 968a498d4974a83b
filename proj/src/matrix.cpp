#include "lrange/matrix.hpp"

#include <algorithm>
#include <cmath>

namespace lrange {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(what) + ": shape mismatch " + shape_string(a) +
                                " vs " + shape_string(b));
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
  if (data_.size() != rows * cols) {
    throw std::invalid_argument("Matrix: value count does not match shape");
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

double Matrix::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix& Matrix::operator+=(const Matrix& other) {
  require_same_shape(*this, other, "operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  require_same_shape(*this, other, "operator-=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(Matrix a, double s) { return a *= s; }
Matrix operator*(double s, Matrix a) { return a *= s; }

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: inner dimensions differ " + shape_string(a) + " * " +
                                shape_string(b));
  }
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  Matrix out(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    double* o = out.data() + i * m;
    const double* ai = a.data() + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double s = ai[p];
      if (s == 0.0) continue;
      const double* bp = b.data() + p * m;
      for (std::size_t j = 0; j < m; ++j) o[j] += s * bp[j];
    }
  }
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw std::invalid_argument("matmul_tn: row counts differ " + shape_string(a) + " vs " +
                                shape_string(b));
  }
  const std::size_t k = a.rows(), n = a.cols(), m = b.cols();
  Matrix out(n, m);
  for (std::size_t p = 0; p < k; ++p) {
    const double* ap = a.data() + p * n;
    const double* bp = b.data() + p * m;
    for (std::size_t i = 0; i < n; ++i) {
      const double s = ap[i];
      if (s == 0.0) continue;
      double* o = out.data() + i * m;
      for (std::size_t j = 0; j < m; ++j) o[j] += s * bp[j];
    }
  }
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw std::invalid_argument("matmul_nt: column counts differ " + shape_string(a) + " vs " +
                                shape_string(b));
  }
  const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
  Matrix out(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    const double* ai = a.data() + i * k;
    for (std::size_t j = 0; j < m; ++j) {
      const double* bj = b.data() + j * k;
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
      out(i, j) = acc;
    }
  }
  return out;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

SparseMatrix SparseMatrix::from_dense(const Matrix& m) {
  SparseMatrix s;
  s.rows_ = m.rows();
  s.cols_ = m.cols();
  s.row_ptr_.reserve(m.rows() + 1);
  s.row_ptr_.push_back(0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (m(r, c) != 0.0) {
        s.col_idx_.push_back(c);
        s.values_.push_back(m(r, c));
      }
    }
    s.row_ptr_.push_back(s.col_idx_.size());
  }
  return s;
}

Matrix SparseMatrix::multiply(const Matrix& x) const {
  if (x.rows() != cols_) {
    throw std::invalid_argument("SparseMatrix::multiply: operand has " + shape_string(x) +
                                ", operator has " + std::to_string(cols_) + " columns");
  }
  const std::size_t m = x.cols();
  Matrix out(rows_, m);
  for (std::size_t r = 0; r < rows_; ++r) {
    double* o = out.data() + r * m;
    for (std::size_t e = row_ptr_[r]; e < row_ptr_[r + 1]; ++e) {
      const double s = values_[e];
      const double* xr = x.data() + col_idx_[e] * m;
      for (std::size_t j = 0; j < m; ++j) o[j] += s * xr[j];
    }
  }
  return out;
}

Matrix SparseMatrix::multiply_transposed(const Matrix& x) const {
  if (x.rows() != rows_) {
    throw std::invalid_argument("SparseMatrix::multiply_transposed: operand has " +
                                shape_string(x) + ", operator has " + std::to_string(rows_) +
                                " rows");
  }
  const std::size_t m = x.cols();
  Matrix out(cols_, m);
  for (std::size_t r = 0; r < rows_; ++r) {
    const double* xr = x.data() + r * m;
    for (std::size_t e = row_ptr_[r]; e < row_ptr_[r + 1]; ++e) {
      const double s = values_[e];
      double* o = out.data() + col_idx_[e] * m;
      for (std::size_t j = 0; j < m; ++j) o[j] += s * xr[j];
    }
  }
  return out;
}

Matrix SparseMatrix::to_dense() const {
  Matrix d(rows_, cols_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t e = row_ptr_[r]; e < row_ptr_[r + 1]; ++e) d(r, col_idx_[e]) = values_[e];
  return d;
}

std::string shape_string(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace lrange
