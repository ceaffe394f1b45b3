#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "errors.hpp"
#include "quaternion.hpp"

namespace qqmr
{

/// Vector in the right quaternion module Q^n: scalars act from the right.
using QVector = std::vector<Quaternion>;

namespace detail
{
inline void check_same_size(std::size_t a, std::size_t b, const char *what)
{
  if (a != b)
  {
    throw usage_error(std::string(what) + ": length mismatch (" + std::to_string(a) + " vs " +
                      std::to_string(b) + ")");
  }
}
}  // namespace detail

/// <x, y> = sum_i conj(y_i) x_i. Right-linear in x, conjugate-symmetric.
inline Quaternion inner(std::span<const Quaternion> x, std::span<const Quaternion> y)
{
  detail::check_same_size(x.size(), y.size(), "inner");
  Quaternion s;
  for (std::size_t i = 0; i < x.size(); ++i)
  {
    s += conj(y[i]) * x[i];
  }
  return s;
}

inline double norm(std::span<const Quaternion> x)
{
  double s = 0.0;
  for (const auto &q : x)
  {
    s += norm2(q);
  }
  return std::sqrt(s);
}

/// y += x * a
inline void axpy(std::span<Quaternion> y, std::span<const Quaternion> x, const Quaternion &a)
{
  detail::check_same_size(x.size(), y.size(), "axpy");
  for (std::size_t i = 0; i < x.size(); ++i)
  {
    y[i] += x[i] * a;
  }
}

/// y += x * a for real a
inline void axpy(std::span<Quaternion> y, std::span<const Quaternion> x, double a)
{
  detail::check_same_size(x.size(), y.size(), "axpy");
  for (std::size_t i = 0; i < x.size(); ++i)
  {
    y[i] += x[i] * a;
  }
}

inline void scale(std::span<Quaternion> x, double a)
{
  for (auto &q : x)
  {
    q *= a;
  }
}

/// x * a with a applied from the right.
inline QVector times(std::span<const Quaternion> x, const Quaternion &a)
{
  QVector out(x.begin(), x.end());
  for (auto &q : out)
  {
    q = q * a;
  }
  return out;
}

inline QVector operator-(const QVector &a, const QVector &b)
{
  detail::check_same_size(a.size(), b.size(), "subtract");
  QVector out(a);
  for (std::size_t i = 0; i < a.size(); ++i)
  {
    out[i] -= b[i];
  }
  return out;
}

inline QVector operator+(const QVector &a, const QVector &b)
{
  detail::check_same_size(a.size(), b.size(), "add");
  QVector out(a);
  for (std::size_t i = 0; i < a.size(); ++i)
  {
    out[i] += b[i];
  }
  return out;
}

}  // namespace qqmr
