#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "quaternion.hpp"

namespace qqmr
{

/// 2x2 unitary quaternion rotation G = [g11 g12; g21 g22].
struct QGivens
{
  Quaternion g11, g12, g21, g22;

  /// G^* [a; b]
  std::pair<Quaternion, Quaternion> apply_adjoint(const Quaternion &a, const Quaternion &b) const
  {
    return {conj(g11) * a + conj(g21) * b, conj(g12) * a + conj(g22) * b};
  }

  /// ||G^* G - I||_F
  double unitarity_defect() const
  {
    const Quaternion d11 = conj(g11) * g11 + conj(g21) * g21 - Quaternion(1.0);
    const Quaternion d12 = conj(g11) * g12 + conj(g21) * g22;
    const Quaternion d21 = conj(g12) * g11 + conj(g22) * g21;
    const Quaternion d22 = conj(g12) * g12 + conj(g22) * g22 - Quaternion(1.0);
    return std::sqrt(norm2(d11) + norm2(d12) + norm2(d21) + norm2(d22));
  }
};

/// Rotation with G^* [a; b] = [t; 0], t = sqrt(|a|^2 + b^2), for a real
/// b >= 0. The branch keeps the larger of |g12|, |g22| real and nonnegative.
inline QGivens make_givens(const Quaternion &a, double b)
{
  if (b < 0.0)
  {
    throw usage_error("make_givens: second entry must be nonnegative");
  }
  const double t = std::hypot(abs(a), b);
  if (t == 0.0)
  {
    throw breakdown_error("make_givens: both entries are zero");
  }
  QGivens g;
  g.g11 = a / t;
  g.g21 = b / t;
  if (abs(a) <= b)
  {
    g.g12 = g.g21;
    g.g22 = -conj(g.g11);
  }
  else
  {
    const double a11 = abs(g.g11);
    g.g22 = a11;
    g.g12 = -(g.g11 / a11) * g.g21;
  }
  return g;
}

/// Column j of the upper triangular factor of a tridiagonal matrix: entries
/// in rows j-2, j-1, j.
struct TridiagColumn
{
  Quaternion eta3, eta2;
  double eta1 = 0;
};

/// Incremental QR of a (m+1) x m tridiagonal matrix with real nonnegative
/// subdiagonal, applied to beta e_1.
class TridiagQR
{
public:
  explicit TridiagQR(double beta) : gamma_(beta) {}

  /// Adds column j (tau at row j-1, alpha at row j, rho at row j+1).
  /// Returns the R column; gamma_j is then available via last_gamma().
  TridiagColumn push(const Quaternion &tau, const Quaternion &alpha, double rho)
  {
    const std::size_t j = rot_.size();
    TridiagColumn c;
    Quaternion top = tau;
    Quaternion diag = alpha;
    if (j >= 2)
    {
      auto [e3, t] = rot_[j - 2].apply_adjoint(Quaternion{}, top);
      c.eta3 = e3;
      top = t;
    }
    if (j >= 1)
    {
      auto [e2, d] = rot_[j - 1].apply_adjoint(top, diag);
      c.eta2 = e2;
      diag = d;
    }
    const QGivens g = make_givens(diag, rho);
    c.eta1 = std::hypot(abs(diag), rho);
    last_gamma_ = conj(g.g11) * gamma_;
    gamma_ = conj(g.g12) * gamma_;
    rot_.push_back(g);
    return c;
  }

  /// gamma_j of the most recently pushed column.
  const Quaternion &last_gamma() const { return last_gamma_; }
  /// |gamma_{m+1}|, the quasi-residual norm.
  double quasi_residual() const { return abs(gamma_); }
  const std::vector<QGivens> &rotations() const { return rot_; }

private:
  Quaternion gamma_;
  Quaternion last_gamma_;
  std::vector<QGivens> rot_;
};

/// Column j of the upper bidiagonal factor: entries in rows j-1, j.
struct BidiagColumn
{
  Quaternion kappa2;
  double kappa1 = 0;
};

/// Incremental QR of a (m+1) x m lower bidiagonal matrix with real
/// nonnegative subdiagonal, applied to beta e_1.
class BidiagQR
{
public:
  explicit BidiagQR(double beta) : gamma_(beta) {}

  /// Adds column j (diag at row j, rho at row j+1).
  BidiagColumn push(const Quaternion &diag, double rho)
  {
    const std::size_t j = rot_.size();
    BidiagColumn c;
    Quaternion d = diag;
    if (j >= 1)
    {
      auto [k2, dd] = rot_[j - 1].apply_adjoint(Quaternion{}, d);
      c.kappa2 = k2;
      d = dd;
    }
    const QGivens g = make_givens(d, rho);
    c.kappa1 = std::hypot(abs(d), rho);
    last_gamma_ = conj(g.g11) * gamma_;
    gamma_ = conj(g.g12) * gamma_;
    rot_.push_back(g);
    return c;
  }

  const Quaternion &last_gamma() const { return last_gamma_; }
  double quasi_residual() const { return abs(gamma_); }
  const std::vector<QGivens> &rotations() const { return rot_; }

private:
  Quaternion gamma_;
  Quaternion last_gamma_;
  std::vector<QGivens> rot_;
};

}  // namespace qqmr
