#pragma once

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace qqmr
{

/// q = w + x i + y j + z k with i^2 = j^2 = k^2 = ijk = -1.
struct Quaternion
{
  double w = 0.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Quaternion() = default;
  constexpr Quaternion(double re) : w(re) {}
  constexpr Quaternion(double w_, double x_, double y_, double z_) : w(w_), x(x_), y(y_), z(z_) {}

  static constexpr Quaternion i() { return {0.0, 1.0, 0.0, 0.0}; }
  static constexpr Quaternion j() { return {0.0, 0.0, 1.0, 0.0}; }
  static constexpr Quaternion k() { return {0.0, 0.0, 0.0, 1.0}; }

  constexpr double operator[](int c) const
  {
    return c == 0 ? w : c == 1 ? x : c == 2 ? y : z;
  }

  constexpr Quaternion &operator+=(const Quaternion &o)
  {
    w += o.w;
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  constexpr Quaternion &operator-=(const Quaternion &o)
  {
    w -= o.w;
    x -= o.x;
    y -= o.y;
    z -= o.z;
    return *this;
  }
  constexpr Quaternion &operator*=(double s)
  {
    w *= s;
    x *= s;
    y *= s;
    z *= s;
    return *this;
  }
  constexpr Quaternion &operator/=(double s)
  {
    w /= s;
    x /= s;
    y /= s;
    z /= s;
    return *this;
  }

  constexpr bool operator==(const Quaternion &) const = default;
};

constexpr Quaternion operator-(const Quaternion &a) { return {-a.w, -a.x, -a.y, -a.z}; }

constexpr Quaternion operator+(Quaternion a, const Quaternion &b) { return a += b; }
constexpr Quaternion operator-(Quaternion a, const Quaternion &b) { return a -= b; }
constexpr Quaternion operator*(Quaternion a, double s) { return a *= s; }
constexpr Quaternion operator*(double s, Quaternion a) { return a *= s; }
constexpr Quaternion operator/(Quaternion a, double s) { return a /= s; }

/// Hamilton product; a*b != b*a in general.
constexpr Quaternion operator*(const Quaternion &a, const Quaternion &b)
{
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

constexpr Quaternion conj(const Quaternion &q) { return {q.w, -q.x, -q.y, -q.z}; }

constexpr double norm2(const Quaternion &q)
{
  return q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z;
}

inline double abs(const Quaternion &q) { return std::sqrt(norm2(q)); }

inline bool is_real(const Quaternion &q) { return q.x == 0.0 && q.y == 0.0 && q.z == 0.0; }

/// q^{-1} = conj(q) / |q|^2. Throws std::domain_error for q == 0.
inline Quaternion inv(const Quaternion &q)
{
  const double n2 = norm2(q);
  if (n2 == 0.0)
  {
    throw std::domain_error("inverse of zero quaternion");
  }
  return conj(q) / n2;
}

/// q^{-*} = q / |q|^2, the conjugate of the inverse.
inline Quaternion inv_conj(const Quaternion &q)
{
  const double n2 = norm2(q);
  if (n2 == 0.0)
  {
    throw std::domain_error("inverse of zero quaternion");
  }
  return q / n2;
}

inline std::ostream &operator<<(std::ostream &os, const Quaternion &q)
{
  return os << '(' << q.w << ", " << q.x << "i, " << q.y << "j, " << q.z << "k)";
}

}  // namespace qqmr
