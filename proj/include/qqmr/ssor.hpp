#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "operator.hpp"

namespace qqmr
{

/// Symmetric Gauss-Seidel (SSOR with unit relaxation) preconditioner for a
/// square quaternion sparse matrix A = D + L + U:
///   M = (D + L) D^{-1} (D + U).
/// Each solve is one forward and one backward triangular sweep.
class SsorPreconditioner : public Preconditioner
{
public:
  explicit SsorPreconditioner(QSparseMatrix a) : a_(std::move(a))
  {
    if (a_.rows() != a_.cols())
    {
      throw usage_error("SSOR: matrix must be square");
    }
    const std::size_t n = a_.rows();
    const auto rp = a_.row_ptr();
    const auto ci = a_.col_idx();
    diag_.resize(n);
    diag_inv_.resize(n);
    for (std::size_t i = 0; i < n; ++i)
    {
      bool found = false;
      for (std::size_t k = rp[i]; k < rp[i + 1]; ++k)
      {
        if (ci[k] == i)
        {
          diag_[i] = a_.value(k);
          found = true;
        }
      }
      if (!found || diag_[i] == Quaternion{})
      {
        throw usage_error("SSOR: zero or missing diagonal entry in row " + std::to_string(i));
      }
      diag_inv_[i] = inv(diag_[i]);
    }
  }

  std::size_t size() const override { return a_.rows(); }

  using Preconditioner::solve;

  void solve(std::span<const Quaternion> r, std::span<Quaternion> z) const override
  {
    const std::size_t n = size();
    detail::check_same_size(r.size(), n, "SSOR solve");
    detail::check_same_size(z.size(), n, "SSOR solve");
    const auto rp = a_.row_ptr();
    const auto ci = a_.col_idx();
    // (D + L) y = r
    QVector y(n);
    for (std::size_t i = 0; i < n; ++i)
    {
      Quaternion s = r[i];
      for (std::size_t k = rp[i]; k < rp[i + 1]; ++k)
      {
        if (ci[k] < i)
        {
          s -= a_.value(k) * y[ci[k]];
        }
      }
      y[i] = diag_inv_[i] * s;
    }
    // (D + U) z = D y
    for (std::size_t ii = n; ii-- > 0;)
    {
      Quaternion s = diag_[ii] * y[ii];
      for (std::size_t k = rp[ii]; k < rp[ii + 1]; ++k)
      {
        if (ci[k] > ii)
        {
          s -= a_.value(k) * z[ci[k]];
        }
      }
      z[ii] = diag_inv_[ii] * s;
    }
  }

  void solve_adjoint(std::span<const Quaternion> r, std::span<Quaternion> z) const override
  {
    const std::size_t n = size();
    detail::check_same_size(r.size(), n, "SSOR solve_adjoint");
    detail::check_same_size(z.size(), n, "SSOR solve_adjoint");
    const auto rp = a_.row_ptr();
    const auto ci = a_.col_idx();
    // (D + U)^* y = r: lower triangular, column-oriented sweep over rows of A
    QVector acc(r.begin(), r.end());
    QVector y(n);
    for (std::size_t i = 0; i < n; ++i)
    {
      y[i] = conj(diag_inv_[i]) * acc[i];
      for (std::size_t k = rp[i]; k < rp[i + 1]; ++k)
      {
        if (ci[k] > i)
        {
          acc[ci[k]] -= conj(a_.value(k)) * y[i];
        }
      }
    }
    // (D + L)^* z = D^* y: upper triangular, backward
    for (std::size_t i = 0; i < n; ++i)
    {
      acc[i] = conj(diag_[i]) * y[i];
    }
    for (std::size_t ii = n; ii-- > 0;)
    {
      z[ii] = conj(diag_inv_[ii]) * acc[ii];
      for (std::size_t k = rp[ii]; k < rp[ii + 1]; ++k)
      {
        if (ci[k] < ii)
        {
          acc[ci[k]] -= conj(a_.value(k)) * z[ii];
        }
      }
    }
  }

  const QSparseMatrix &matrix() const { return a_; }

private:
  QSparseMatrix a_;
  QVector diag_;
  QVector diag_inv_;
};

}  // namespace qqmr
