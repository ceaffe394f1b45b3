#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "errors.hpp"
#include "qvector.hpp"

namespace qqmr
{

/// Dense row-major real matrix. Small: blur factors and test oracles.
class RealMatrix
{
public:
  RealMatrix() = default;
  RealMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  static RealMatrix identity(std::size_t n)
  {
    RealMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
    {
      m(i, i) = 1.0;
    }
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double &operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<const double> data() const { return data_; }

  RealMatrix transpose() const
  {
    RealMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
    {
      for (std::size_t j = 0; j < cols_; ++j)
      {
        t(j, i) = (*this)(i, j);
      }
    }
    return t;
  }

  friend RealMatrix operator*(const RealMatrix &a, const RealMatrix &b)
  {
    if (a.cols_ != b.rows_)
    {
      throw usage_error("RealMatrix product: inner dimensions differ");
    }
    RealMatrix c(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
    {
      for (std::size_t k = 0; k < a.cols_; ++k)
      {
        const double aik = a(i, k);
        if (aik == 0.0)
        {
          continue;
        }
        for (std::size_t j = 0; j < b.cols_; ++j)
        {
          c(i, j) += aik * b(k, j);
        }
      }
    }
    return c;
  }

  bool operator==(const RealMatrix &) const = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Dense row-major quaternion matrix.
class QDenseMatrix
{
public:
  QDenseMatrix() = default;
  QDenseMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  static QDenseMatrix identity(std::size_t n)
  {
    QDenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
    {
      m(i, i) = 1.0;
    }
    return m;
  }

  /// Matrix whose columns are the given vectors (all of equal length).
  static QDenseMatrix from_columns(std::span<const QVector> columns)
  {
    if (columns.empty())
    {
      return {};
    }
    QDenseMatrix m(columns[0].size(), columns.size());
    for (std::size_t j = 0; j < columns.size(); ++j)
    {
      detail::check_same_size(columns[j].size(), m.rows_, "from_columns");
      for (std::size_t i = 0; i < m.rows_; ++i)
      {
        m(i, j) = columns[j][i];
      }
    }
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  Quaternion &operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const Quaternion &operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  /// Conjugate transpose.
  QDenseMatrix adjoint() const
  {
    QDenseMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
    {
      for (std::size_t j = 0; j < cols_; ++j)
      {
        t(j, i) = conj((*this)(i, j));
      }
    }
    return t;
  }

  QVector apply(std::span<const Quaternion> x) const
  {
    detail::check_same_size(x.size(), cols_, "QDenseMatrix::apply");
    QVector y(rows_);
    for (std::size_t i = 0; i < rows_; ++i)
    {
      Quaternion s;
      for (std::size_t j = 0; j < cols_; ++j)
      {
        s += (*this)(i, j) * x[j];
      }
      y[i] = s;
    }
    return y;
  }

  double frobenius_norm() const { return norm(data_); }

  friend QDenseMatrix operator*(const QDenseMatrix &a, const QDenseMatrix &b)
  {
    if (a.cols_ != b.rows_)
    {
      throw usage_error("QDenseMatrix product: inner dimensions differ");
    }
    QDenseMatrix c(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
    {
      for (std::size_t k = 0; k < a.cols_; ++k)
      {
        const Quaternion aik = a(i, k);
        for (std::size_t j = 0; j < b.cols_; ++j)
        {
          c(i, j) += aik * b(k, j);
        }
      }
    }
    return c;
  }

  friend QDenseMatrix operator-(QDenseMatrix a, const QDenseMatrix &b)
  {
    if (a.rows_ != b.rows_ || a.cols_ != b.cols_)
    {
      throw usage_error("QDenseMatrix subtract: shape mismatch");
    }
    for (std::size_t i = 0; i < a.data_.size(); ++i)
    {
      a.data_[i] -= b.data_[i];
    }
    return a;
  }

  bool operator==(const QDenseMatrix &) const = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Quaternion> data_;
};

/// The 4m x 4n real counterpart
///   [ M0 -M1 -M2 -M3 ]
///   [ M1  M0 -M3  M2 ]
///   [ M2  M3  M0 -M1 ]
///   [ M3 -M2  M1  M0 ]
/// of M = M0 + M1 i + M2 j + M3 k. Used by tests and oracles only.
inline RealMatrix real_counterpart(const QDenseMatrix &m)
{
  const std::size_t r = m.rows();
  const std::size_t c = m.cols();
  RealMatrix out(4 * r, 4 * c);
  // sign/component table, row block bi, column block bj
  static constexpr int comp[4][4] = {{0, 1, 2, 3}, {1, 0, 3, 2}, {2, 3, 0, 1}, {3, 2, 1, 0}};
  static constexpr int sign[4][4] = {{1, -1, -1, -1}, {1, 1, -1, 1}, {1, 1, 1, -1}, {1, -1, 1, 1}};
  for (int bi = 0; bi < 4; ++bi)
  {
    for (int bj = 0; bj < 4; ++bj)
    {
      for (std::size_t i = 0; i < r; ++i)
      {
        for (std::size_t j = 0; j < c; ++j)
        {
          out(bi * r + i, bj * c + j) = sign[bi][bj] * m(i, j)[comp[bi][bj]];
        }
      }
    }
  }
  return out;
}

/// [M0; M1; M2; M3], shape 4m x n.
inline RealMatrix first_block_column(const QDenseMatrix &m)
{
  const std::size_t r = m.rows();
  RealMatrix out(4 * r, m.cols());
  for (int b = 0; b < 4; ++b)
  {
    for (std::size_t i = 0; i < r; ++i)
    {
      for (std::size_t j = 0; j < m.cols(); ++j)
      {
        out(b * r + i, j) = m(i, j)[b];
      }
    }
  }
  return out;
}

/// Inverse of real_counterpart; reads the first block column.
inline QDenseMatrix from_real_counterpart(const RealMatrix &real)
{
  if (real.rows() % 4 != 0 || real.cols() % 4 != 0)
  {
    throw usage_error("from_real_counterpart: dimensions must be multiples of 4");
  }
  const std::size_t r = real.rows() / 4;
  const std::size_t c = real.cols() / 4;
  QDenseMatrix m(r, c);
  for (std::size_t i = 0; i < r; ++i)
  {
    for (std::size_t j = 0; j < c; ++j)
    {
      m(i, j) = {real(i, j), real(r + i, j), real(2 * r + i, j), real(3 * r + i, j)};
    }
  }
  return m;
}

/// First block column of a vector: [x0; x1; x2; x3] of length 4n.
inline std::vector<double> real_column(std::span<const Quaternion> x)
{
  const std::size_t n = x.size();
  std::vector<double> out(4 * n);
  for (std::size_t i = 0; i < n; ++i)
  {
    for (int b = 0; b < 4; ++b)
    {
      out[b * n + i] = x[i][b];
    }
  }
  return out;
}

inline QVector from_real_column(std::span<const double> col)
{
  if (col.size() % 4 != 0)
  {
    throw usage_error("from_real_column: length must be a multiple of 4");
  }
  const std::size_t n = col.size() / 4;
  QVector x(n);
  for (std::size_t i = 0; i < n; ++i)
  {
    x[i] = {col[i], col[n + i], col[2 * n + i], col[3 * n + i]};
  }
  return x;
}

}  // namespace qqmr
