#pragma once

#include <algorithm>
#include <cstddef>
#include <memory>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "dense.hpp"
#include "errors.hpp"
#include "qvector.hpp"

namespace qqmr
{

/// Linear map Q^cols -> Q^rows with forward and adjoint application.
///
/// Implementations are immutable after construction; apply may be called
/// concurrently. Results are produced in a fixed order so repeated runs are
/// bitwise reproducible.
class QLinearOperator
{
public:
  virtual ~QLinearOperator() = default;

  virtual std::size_t rows() const = 0;
  virtual std::size_t cols() const = 0;

  /// y = A x
  void apply(std::span<const Quaternion> x, std::span<Quaternion> y) const
  {
    detail::check_same_size(x.size(), cols(), "apply (input)");
    detail::check_same_size(y.size(), rows(), "apply (output)");
    do_apply(x, y);
  }

  /// y = A^* x
  void apply_adjoint(std::span<const Quaternion> x, std::span<Quaternion> y) const
  {
    detail::check_same_size(x.size(), rows(), "apply_adjoint (input)");
    detail::check_same_size(y.size(), cols(), "apply_adjoint (output)");
    do_apply_adjoint(x, y);
  }

  QVector apply(std::span<const Quaternion> x) const
  {
    QVector y(rows());
    apply(x, y);
    return y;
  }

  QVector apply_adjoint(std::span<const Quaternion> x) const
  {
    QVector y(cols());
    apply_adjoint(x, y);
    return y;
  }

private:
  virtual void do_apply(std::span<const Quaternion> x, std::span<Quaternion> y) const = 0;
  virtual void do_apply_adjoint(std::span<const Quaternion> x, std::span<Quaternion> y) const = 0;
};

template <typename Value>
struct Triplet
{
  std::size_t row;
  std::size_t col;
  Value value;
};

namespace detail
{
/// Sorts triplets into CSR order and sums duplicates. Explicit zeros are kept.
template <typename Value>
void build_csr(std::size_t rows, std::size_t cols, std::vector<Triplet<Value>> entries,
               std::vector<std::size_t> &row_ptr, std::vector<std::size_t> &col_idx,
               std::vector<Value> &values)
{
  for (const auto &t : entries)
  {
    if (t.row >= rows || t.col >= cols)
    {
      throw usage_error("sparse entry (" + std::to_string(t.row) + ", " + std::to_string(t.col) +
                        ") out of range");
    }
  }
  std::stable_sort(entries.begin(), entries.end(), [](const auto &a, const auto &b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  row_ptr.assign(rows + 1, 0);
  col_idx.clear();
  values.clear();
  for (std::size_t k = 0; k < entries.size(); ++k)
  {
    const auto &t = entries[k];
    if (!col_idx.empty() && k > 0 && entries[k - 1].row == t.row && entries[k - 1].col == t.col)
    {
      values.back() += t.value;
      continue;
    }
    col_idx.push_back(t.col);
    values.push_back(t.value);
    ++row_ptr[t.row + 1];
  }
  std::partial_sum(row_ptr.begin(), row_ptr.end(), row_ptr.begin());
}
}  // namespace detail

/// Real CSR matrix. Acts on quaternion vectors channel by channel.
class RealSparseMatrix : public QLinearOperator
{
public:
  RealSparseMatrix() = default;

  RealSparseMatrix(std::size_t rows, std::size_t cols, std::vector<Triplet<double>> entries)
    : rows_(rows), cols_(cols)
  {
    detail::build_csr(rows, cols, std::move(entries), row_ptr_, col_idx_, values_);
  }

  static RealSparseMatrix identity(std::size_t n)
  {
    std::vector<Triplet<double>> t;
    for (std::size_t i = 0; i < n; ++i)
    {
      t.push_back({i, i, 1.0});
    }
    return {n, n, std::move(t)};
  }

  std::size_t rows() const override { return rows_; }
  std::size_t cols() const override { return cols_; }
  std::size_t nnz() const { return values_.size(); }

  std::span<const std::size_t> row_ptr() const { return row_ptr_; }
  std::span<const std::size_t> col_idx() const { return col_idx_; }
  std::span<const double> values() const { return values_; }

  /// Value at (i, j), 0 when not stored.
  double at(std::size_t i, std::size_t j) const
  {
    const auto first = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]);
    const auto last = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]);
    const auto it = std::lower_bound(first, last, j);
    return (it != last && *it == j) ? values_[static_cast<std::size_t>(it - col_idx_.begin())] : 0.0;
  }

  RealMatrix to_dense() const
  {
    RealMatrix d(rows_, cols_);
    for (std::size_t i = 0; i < rows_; ++i)
    {
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
      {
        d(i, col_idx_[k]) = values_[k];
      }
    }
    return d;
  }

private:
  void do_apply(std::span<const Quaternion> x, std::span<Quaternion> y) const override
  {
    for (std::size_t i = 0; i < rows_; ++i)
    {
      Quaternion s;
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
      {
        s += x[col_idx_[k]] * values_[k];
      }
      y[i] = s;
    }
  }

  void do_apply_adjoint(std::span<const Quaternion> x, std::span<Quaternion> y) const override
  {
    std::fill(y.begin(), y.end(), Quaternion{});
    for (std::size_t i = 0; i < rows_; ++i)
    {
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
      {
        y[col_idx_[k]] += x[i] * values_[k];
      }
    }
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::size_t> col_idx_;
  std::vector<double> values_;
};

/// Quaternion CSR matrix; values stored as four parallel real arrays.
class QSparseMatrix : public QLinearOperator
{
public:
  QSparseMatrix() = default;

  QSparseMatrix(std::size_t rows, std::size_t cols, std::vector<Triplet<Quaternion>> entries)
    : rows_(rows), cols_(cols)
  {
    std::vector<Quaternion> vals;
    detail::build_csr(rows, cols, std::move(entries), row_ptr_, col_idx_, vals);
    for (auto &c : comp_)
    {
      c.resize(vals.size());
    }
    for (std::size_t k = 0; k < vals.size(); ++k)
    {
      comp_[0][k] = vals[k].w;
      comp_[1][k] = vals[k].x;
      comp_[2][k] = vals[k].y;
      comp_[3][k] = vals[k].z;
    }
  }

  static QSparseMatrix from_dense(const QDenseMatrix &d)
  {
    std::vector<Triplet<Quaternion>> t;
    for (std::size_t i = 0; i < d.rows(); ++i)
    {
      for (std::size_t j = 0; j < d.cols(); ++j)
      {
        if (d(i, j) != Quaternion{})
        {
          t.push_back({i, j, d(i, j)});
        }
      }
    }
    return {d.rows(), d.cols(), std::move(t)};
  }

  std::size_t rows() const override { return rows_; }
  std::size_t cols() const override { return cols_; }
  std::size_t nnz() const { return col_idx_.size(); }

  std::span<const std::size_t> row_ptr() const { return row_ptr_; }
  std::span<const std::size_t> col_idx() const { return col_idx_; }

  Quaternion value(std::size_t k) const { return {comp_[0][k], comp_[1][k], comp_[2][k], comp_[3][k]}; }

  QDenseMatrix to_dense() const
  {
    QDenseMatrix d(rows_, cols_);
    for (std::size_t i = 0; i < rows_; ++i)
    {
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
      {
        d(i, col_idx_[k]) = value(k);
      }
    }
    return d;
  }

private:
  void do_apply(std::span<const Quaternion> x, std::span<Quaternion> y) const override
  {
    const double *a0 = comp_[0].data();
    const double *a1 = comp_[1].data();
    const double *a2 = comp_[2].data();
    const double *a3 = comp_[3].data();
    for (std::size_t i = 0; i < rows_; ++i)
    {
      double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
      {
        const Quaternion &b = x[col_idx_[k]];
        s0 += a0[k] * b.w - a1[k] * b.x - a2[k] * b.y - a3[k] * b.z;
        s1 += a0[k] * b.x + a1[k] * b.w + a2[k] * b.z - a3[k] * b.y;
        s2 += a0[k] * b.y - a1[k] * b.z + a2[k] * b.w + a3[k] * b.x;
        s3 += a0[k] * b.z + a1[k] * b.y - a2[k] * b.x + a3[k] * b.w;
      }
      y[i] = {s0, s1, s2, s3};
    }
  }

  void do_apply_adjoint(std::span<const Quaternion> x, std::span<Quaternion> y) const override
  {
    std::fill(y.begin(), y.end(), Quaternion{});
    for (std::size_t i = 0; i < rows_; ++i)
    {
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
      {
        y[col_idx_[k]] += conj(value(k)) * x[i];
      }
    }
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::size_t> col_idx_;
  std::vector<double> comp_[4];
};

/// A = c * B, i.e. entries a_ij = c b_ij for a quaternion scalar c.
///
/// With a real base B0 and c = c0 + c1 i + c2 j + c3 k this is
/// c0 B0 + c1 B0 i + c2 B0 j + c3 B0 k.
class ChannelScaled : public QLinearOperator
{
public:
  ChannelScaled(std::shared_ptr<const QLinearOperator> base, const Quaternion &c)
    : base_(std::move(base)), c_(c)
  {
    if (!base_)
    {
      throw usage_error("ChannelScaled: null base operator");
    }
  }

  std::size_t rows() const override { return base_->rows(); }
  std::size_t cols() const override { return base_->cols(); }
  const Quaternion &coefficient() const { return c_; }
  const QLinearOperator &base() const { return *base_; }

private:
  void do_apply(std::span<const Quaternion> x, std::span<Quaternion> y) const override
  {
    base_->apply(x, y);
    for (auto &q : y)
    {
      q = c_ * q;
    }
  }

  void do_apply_adjoint(std::span<const Quaternion> x, std::span<Quaternion> y) const override
  {
    QVector t(x.size());
    const Quaternion cc = conj(c_);
    for (std::size_t i = 0; i < x.size(); ++i)
    {
      t[i] = cc * x[i];
    }
    base_->apply_adjoint(t, y);
  }

  std::shared_ptr<const QLinearOperator> base_;
  Quaternion c_;
};

/// Operator for A0 + c1 A0 i + ... with a real square A0, from coefficients (c0, c1, c2, c3).
inline std::shared_ptr<ChannelScaled> build_channel_scaled(std::shared_ptr<const RealSparseMatrix> a0,
                                                           const Quaternion &c = {1.0, 2.0, -1.5, 0.5})
{
  if (!a0 || a0->rows() != a0->cols())
  {
    throw usage_error("build_channel_scaled: A0 must be square");
  }
  return std::make_shared<ChannelScaled>(std::move(a0), c);
}

/// Explicit quaternion CSR form of c * A0.
inline QSparseMatrix assemble_channel_scaled(const RealSparseMatrix &a0, const Quaternion &c)
{
  std::vector<Triplet<Quaternion>> t;
  t.reserve(a0.nnz());
  for (std::size_t i = 0; i < a0.rows(); ++i)
  {
    for (std::size_t k = a0.row_ptr()[i]; k < a0.row_ptr()[i + 1]; ++k)
    {
      t.push_back({i, a0.col_idx()[k], c * a0.values()[k]});
    }
  }
  return {a0.rows(), a0.cols(), std::move(t)};
}

/// (B1 kron B2) acting on vec(X) for X in Q^{m x n} stored column-major,
/// where B1 is n x n and B2 is m x m. Uses (B1 kron B2) vec(X) = vec(B2 X B1^T)
/// so the Kronecker matrix is never formed.
class KroneckerOperator : public QLinearOperator
{
public:
  KroneckerOperator(RealMatrix b1, RealMatrix b2) : b1_(std::move(b1)), b2_(std::move(b2))
  {
    if (b1_.rows() != b1_.cols() || b2_.rows() != b2_.cols())
    {
      throw usage_error("KroneckerOperator: factors must be square");
    }
  }

  std::size_t rows() const override { return b1_.rows() * b2_.rows(); }
  std::size_t cols() const override { return rows(); }

  const RealMatrix &outer() const { return b1_; }
  const RealMatrix &inner() const { return b2_; }

private:
  // y = vec(L X R^T) with L = left (m x m), R = right (n x n).
  static void sandwich(const RealMatrix &left, const RealMatrix &right, bool transpose,
                       std::span<const Quaternion> x, std::span<Quaternion> y)
  {
    const std::size_t m = left.rows();
    const std::size_t n = right.rows();
    auto l = [&](std::size_t i, std::size_t j) { return transpose ? left(j, i) : left(i, j); };
    auto r = [&](std::size_t i, std::size_t j) { return transpose ? right(j, i) : right(i, j); };
    // T = X R^T : T[:, c] = sum_c' X[:, c'] R(c, c')
    std::vector<Quaternion> t(m * n);
    for (std::size_t c = 0; c < n; ++c)
    {
      for (std::size_t cp = 0; cp < n; ++cp)
      {
        const double rc = r(c, cp);
        if (rc == 0.0)
        {
          continue;
        }
        for (std::size_t row = 0; row < m; ++row)
        {
          t[c * m + row] += x[cp * m + row] * rc;
        }
      }
    }
    // Y = L T
    for (std::size_t c = 0; c < n; ++c)
    {
      for (std::size_t row = 0; row < m; ++row)
      {
        Quaternion s;
        for (std::size_t k = 0; k < m; ++k)
        {
          const double lk = l(row, k);
          if (lk != 0.0)
          {
            s += t[c * m + k] * lk;
          }
        }
        y[c * m + row] = s;
      }
    }
  }

  void do_apply(std::span<const Quaternion> x, std::span<Quaternion> y) const override
  {
    sandwich(b2_, b1_, false, x, y);
  }

  void do_apply_adjoint(std::span<const Quaternion> x, std::span<Quaternion> y) const override
  {
    sandwich(b2_, b1_, true, x, y);
  }

  RealMatrix b1_;
  RealMatrix b2_;
};

/// y = (B1 kron B2) x for n x n real B1, B2 and |x| = n^2.
inline QVector kron_toeplitz_apply(const RealMatrix &b1, const RealMatrix &b2,
                                   std::span<const Quaternion> x)
{
  if (b1.rows() != b2.rows())
  {
    throw usage_error("kron_toeplitz_apply: B1 and B2 must have the same order");
  }
  const std::size_t n = b1.rows();
  if (x.size() != n * n)
  {
    throw usage_error("kron_toeplitz_apply: vector length " + std::to_string(x.size()) +
                      " is not n^2 = " + std::to_string(n * n));
  }
  return KroneckerOperator(b1, b2).apply(x);
}

/// z = M^{-1} r and its adjoint for a left preconditioner M.
class Preconditioner
{
public:
  virtual ~Preconditioner() = default;
  virtual std::size_t size() const = 0;
  virtual void solve(std::span<const Quaternion> r, std::span<Quaternion> z) const = 0;
  virtual void solve_adjoint(std::span<const Quaternion> r, std::span<Quaternion> z) const = 0;

  QVector solve(std::span<const Quaternion> r) const
  {
    QVector z(r.size());
    solve(r, z);
    return z;
  }
};

/// A' = M^{-1} A (left preconditioning).
class PreconditionedOperator : public QLinearOperator
{
public:
  PreconditionedOperator(const QLinearOperator &a, const Preconditioner &m) : a_(a), m_(m)
  {
    if (a.rows() != m.size() || a.cols() != m.size())
    {
      throw usage_error("PreconditionedOperator: dimension mismatch");
    }
  }

  std::size_t rows() const override { return a_.rows(); }
  std::size_t cols() const override { return a_.cols(); }

private:
  void do_apply(std::span<const Quaternion> x, std::span<Quaternion> y) const override
  {
    QVector t(a_.rows());
    a_.apply(x, t);
    m_.solve(t, y);
  }

  void do_apply_adjoint(std::span<const Quaternion> x, std::span<Quaternion> y) const override
  {
    QVector t(a_.rows());
    m_.solve_adjoint(x, t);
    a_.apply_adjoint(t, y);
  }

  const QLinearOperator &a_;
  const Preconditioner &m_;
};

}  // namespace qqmr
