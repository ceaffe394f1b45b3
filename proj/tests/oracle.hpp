#pragma once

// Dense reference computations on the real counterpart, plus random
// instance generators shared by the unit tests and the acceptance binary.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include "qqmr/qqmr.hpp"

namespace oracle
{

using qqmr::QDenseMatrix;
using qqmr::Quaternion;
using qqmr::QVector;

inline Eigen::MatrixXd to_eigen(const qqmr::RealMatrix &m)
{
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
  {
    for (std::size_t j = 0; j < m.cols(); ++j)
    {
      e(i, j) = m(i, j);
    }
  }
  return e;
}

inline Eigen::VectorXd column(const QVector &x)
{
  const auto c = qqmr::real_column(x);
  return Eigen::Map<const Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size()));
}

inline QVector from_column(const Eigen::VectorXd &c)
{
  return qqmr::from_real_column(std::vector<double>(c.data(), c.data() + c.size()));
}

/// x solving A x = b through an LU factorization of the 4n x 4n real counterpart.
inline QVector direct_solve(const QDenseMatrix &a, const QVector &b)
{
  const Eigen::MatrixXd r = to_eigen(qqmr::real_counterpart(a));
  return from_column(r.partialPivLu().solve(column(b)));
}

/// A x through the real counterpart: R(A) R(x)_c.
inline QVector counterpart_apply(const QDenseMatrix &a, const QVector &x)
{
  return from_column(to_eigen(qqmr::real_counterpart(a)) * column(x));
}

/// min_z || beta e_1 - H z || over quaternion z, via the real counterpart
/// least-squares problem of size 4(m+1) x 4m.
inline double ls_min(const QDenseMatrix &h, double beta)
{
  const Eigen::MatrixXd r = to_eigen(qqmr::real_counterpart(h));
  QVector rhs(h.rows());
  rhs[0] = beta;
  const Eigen::VectorXd b = column(rhs);
  const Eigen::VectorXd z = r.colPivHouseholderQr().solve(b);
  return (b - r * z).norm();
}

inline Quaternion random_quaternion(std::mt19937_64 &rng, double lo = -1.0, double hi = 1.0)
{
  std::uniform_real_distribution<double> u(lo, hi);
  return {u(rng), u(rng), u(rng), u(rng)};
}

inline QVector random_vector(std::size_t n, std::mt19937_64 &rng)
{
  QVector v(n);
  for (auto &q : v)
  {
    q = random_quaternion(rng);
  }
  return v;
}

inline QDenseMatrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64 &rng)
{
  QDenseMatrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
  {
    for (std::size_t j = 0; j < cols; ++j)
    {
      m(i, j) = random_quaternion(rng);
    }
  }
  return m;
}

/// Random entries of size O(1/sqrt(n)) shifted by `shift` I: eigenvalues
/// cluster in a disc around `shift`, so the system is well conditioned.
inline QDenseMatrix well_conditioned(std::size_t n, std::mt19937_64 &rng, double shift = 3.0)
{
  QDenseMatrix m = random_matrix(n, n, rng);
  const double s = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i)
  {
    for (std::size_t j = 0; j < n; ++j)
    {
      m(i, j) = m(i, j) * s;
    }
    m(i, i) += shift;
  }
  return m;
}

/// M + M^*, a random Hermitian matrix.
inline QDenseMatrix random_hermitian(std::size_t n, std::mt19937_64 &rng)
{
  const QDenseMatrix m = random_matrix(n, n, rng);
  QDenseMatrix h(n, n);
  for (std::size_t i = 0; i < n; ++i)
  {
    for (std::size_t j = 0; j < n; ++j)
    {
      h(i, j) = m(i, j) + qqmr::conj(m(j, i));
    }
  }
  return h;
}

inline double rel_diff(const QVector &a, const QVector &b)
{
  const double nb = qqmr::norm(b);
  return qqmr::norm(a - b) / (nb > 0 ? nb : 1.0);
}

/// n x n system whose Krylov space K(A, b) has dimension exactly m: a
/// block upper triangular matrix [A11 A12; 0 A22] with b = [b1; 0], the
/// m x m block A11 having distinct eigenvalues, conjugated by a random
/// permutation.
struct ClosedKrylovSystem
{
  QDenseMatrix a;
  QVector b;
};

inline ClosedKrylovSystem closed_krylov_system(std::size_t n, std::size_t m, std::mt19937_64 &rng)
{
  QDenseMatrix a = well_conditioned(n, rng, 3.0);
  for (std::size_t i = m; i < n; ++i)
  {
    for (std::size_t j = 0; j < m; ++j)
    {
      a(i, j) = Quaternion{};
    }
  }
  QVector b(n);
  for (std::size_t i = 0; i < m; ++i)
  {
    b[i] = random_quaternion(rng);
  }
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i)
  {
    perm[i] = i;
  }
  std::shuffle(perm.begin(), perm.end(), rng);
  ClosedKrylovSystem s{QDenseMatrix(n, n), QVector(n)};
  for (std::size_t i = 0; i < n; ++i)
  {
    s.b[perm[i]] = b[i];
    for (std::size_t j = 0; j < n; ++j)
    {
      s.a(perm[i], perm[j]) = a(i, j);
    }
  }
  return s;
}

}  // namespace oracle
