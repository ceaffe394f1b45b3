#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracle.hpp"

using namespace qqmr;

namespace
{

const Quaternion I = Quaternion::i();

// Applies G_1^*, ..., G_m^* (rotation k acting on rows k, k+1) to the rows of h.
QDenseMatrix rotate_rows(QDenseMatrix h, const std::vector<QGivens> &rots)
{
  for (std::size_t k = 0; k < rots.size(); ++k)
  {
    for (std::size_t c = 0; c < h.cols(); ++c)
    {
      auto [top, bottom] = rots[k].apply_adjoint(h(k, c), h(k + 1, c));
      h(k, c) = top;
      h(k + 1, c) = bottom;
    }
  }
  return h;
}

// (m+1) x m tridiagonal with quaternion diagonal/superdiagonal and positive real subdiagonal.
QDenseMatrix random_tridiagonal(std::size_t m, std::mt19937_64 &rng)
{
  std::uniform_real_distribution<double> u(0.1, 1.0);
  QDenseMatrix h(m + 1, m);
  for (std::size_t c = 0; c < m; ++c)
  {
    h(c, c) = oracle::random_quaternion(rng);
    h(c + 1, c) = u(rng);
    if (c > 0)
    {
      h(c - 1, c) = oracle::random_quaternion(rng);
    }
  }
  return h;
}

}  // namespace

TEST(Givens, RealThreeFour)
{
  const QGivens g = make_givens(3.0, 4.0);
  EXPECT_EQ(g.g11, Quaternion(0.6));
  EXPECT_EQ(g.g21, Quaternion(0.8));
  EXPECT_EQ(g.g12, Quaternion(0.8));
  EXPECT_EQ(g.g22, Quaternion(-0.6));
  auto [top, bottom] = g.apply_adjoint(3.0, 4.0);
  EXPECT_LT(abs(top - Quaternion(5.0)), 1e-15);
  EXPECT_LT(abs(bottom), 1e-15);
  EXPECT_LT(g.unitarity_defect(), 1e-15);
}

TEST(Givens, ImaginaryUnit)
{
  const QGivens g = make_givens(I, 1.0);
  const double r = 1.0 / std::sqrt(2.0);
  EXPECT_LT(abs(g.g11 - I * r), 1e-15);
  EXPECT_LT(abs(g.g12 - Quaternion(r)), 1e-15);
  EXPECT_LT(abs(g.g21 - Quaternion(r)), 1e-15);
  EXPECT_LT(abs(g.g22 - I * r), 1e-15);
  auto [top, bottom] = g.apply_adjoint(I, 1.0);
  EXPECT_LT(abs(top - Quaternion(std::sqrt(2.0))), 1e-15);
  EXPECT_LT(abs(bottom), 1e-15);
  EXPECT_LT(g.unitarity_defect(), 1e-15);
}

TEST(Givens, NothingToAnnihilate)
{
  const Quaternion a(0.3, -0.4, 1.2, 0.5);
  const QGivens g = make_givens(a, 0.0);
  EXPECT_DOUBLE_EQ(g.g22.w, 1.0);
  EXPECT_EQ(g.g12, Quaternion{});
  auto [top, bottom] = g.apply_adjoint(a, 0.0);
  EXPECT_LT(abs(top - Quaternion(abs(a))), 1e-15);
  EXPECT_EQ(bottom, Quaternion{});
}

TEST(Givens, DegenerateInputThrows)
{
  EXPECT_THROW(make_givens(Quaternion{}, 0.0), breakdown_error);
  EXPECT_THROW(make_givens(1.0, -1.0), usage_error);
}

TEST(Givens, RandomRotationsAreUnitaryAndAnnihilate)
{
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int t = 0; t < 500; ++t)
  {
    const Quaternion a = oracle::random_quaternion(rng);
    const double rho = u(rng);
    const QGivens g = make_givens(a, rho);
    EXPECT_LT(g.unitarity_defect(), 1e-12);
    auto [top, bottom] = g.apply_adjoint(a, rho);
    EXPECT_LT(abs(bottom), 1e-14);
    EXPECT_NEAR(top.w, std::hypot(abs(a), rho), 1e-14);
    EXPECT_LT(std::hypot(top.x, top.y, top.z), 1e-14);
  }
}

TEST(TridiagQR, FirstColumnRealCase)
{
  TridiagQR qr(1.0);
  const auto c = qr.push(Quaternion{}, 3.0, 4.0);
  EXPECT_DOUBLE_EQ(c.eta1, 5.0);
  EXPECT_NEAR(qr.quasi_residual(), 0.8, 1e-15);
  EXPECT_NEAR(qr.last_gamma().w, 0.6, 1e-15);
}

TEST(TridiagQR, DiagonalMatrixHasZeroQuasiResidual)
{
  TridiagQR qr(2.0);
  qr.push(Quaternion{}, Quaternion(0.0, 2.0, 0.0, 0.0), 0.0);
  EXPECT_EQ(qr.quasi_residual(), 0.0);
}

TEST(TridiagQR, FactorsRandomTridiagonal)
{
  std::mt19937_64 rng(2);
  const std::size_t m = 4;
  const QDenseMatrix h = random_tridiagonal(m, rng);
  TridiagQR qr(1.0);
  std::vector<TridiagColumn> cols;
  for (std::size_t c = 0; c < m; ++c)
  {
    cols.push_back(qr.push(c > 0 ? h(c - 1, c) : Quaternion{}, h(c, c), h(c + 1, c).w));
  }
  const QDenseMatrix r = rotate_rows(h, qr.rotations());
  for (std::size_t i = 0; i <= m; ++i)
  {
    for (std::size_t c = 0; c < m; ++c)
    {
      Quaternion expected;
      if (i == c)
      {
        expected = cols[c].eta1;
      }
      else if (i + 1 == c)
      {
        expected = cols[c].eta2;
      }
      else if (i + 2 == c)
      {
        expected = cols[c].eta3;
      }
      EXPECT_LT(abs(r(i, c) - expected), 1e-13) << i << "," << c;
    }
  }
  for (const auto &c : cols)
  {
    EXPECT_GT(c.eta1, 0.0);
  }
  // R^* R = H^* H is the phase-free comparison with any other QR of H
  QDenseMatrix rm(m, m);
  for (std::size_t i = 0; i < m; ++i)
  {
    for (std::size_t c = 0; c < m; ++c)
    {
      rm(i, c) = r(i, c);
    }
  }
  EXPECT_LT((rm.adjoint() * rm - h.adjoint() * h).frobenius_norm(), 1e-12);
  for (const auto &g : qr.rotations())
  {
    EXPECT_LT(g.unitarity_defect(), 1e-12);
  }
}

TEST(TridiagQR, QuasiResidualMatchesLeastSquaresOracle)
{
  std::mt19937_64 rng(3);
  for (int t = 0; t < 5; ++t)
  {
    const std::size_t m = 8;
    const QDenseMatrix h = random_tridiagonal(m, rng);
    const double beta = 1.7;
    TridiagQR qr(beta);
    for (std::size_t c = 0; c < m; ++c)
    {
      qr.push(c > 0 ? h(c - 1, c) : Quaternion{}, h(c, c), h(c + 1, c).w);
      QDenseMatrix hk(c + 2, c + 1);
      for (std::size_t i = 0; i < c + 2; ++i)
      {
        for (std::size_t j = 0; j < c + 1; ++j)
        {
          hk(i, j) = h(i, j);
        }
      }
      const double ls = oracle::ls_min(hk, beta);
      EXPECT_NEAR(qr.quasi_residual(), ls, 1e-8 * std::max(ls, 1e-300) + 1e-14) << "step " << c + 1;
    }
  }
}

TEST(BidiagQR, SingleColumnIsOneRotation)
{
  BidiagQR qr(1.0);
  const Quaternion d(0.5, 0.5, -0.5, 0.5);
  const auto c = qr.push(d, 2.0);
  const QGivens g = make_givens(d, 2.0);
  EXPECT_EQ(qr.rotations()[0].g11, g.g11);
  EXPECT_EQ(qr.rotations()[0].g12, g.g12);
  EXPECT_DOUBLE_EQ(c.kappa1, std::hypot(1.0, 2.0));
}

TEST(BidiagQR, DiagonalLHasZeroQuasiResidual)
{
  BidiagQR qr(1.0);
  const auto c1 = qr.push(I, 0.0);
  const auto c2 = qr.push(Quaternion(0, 0, 3, 0), 0.0);
  EXPECT_DOUBLE_EQ(c1.kappa1, 1.0);
  EXPECT_DOUBLE_EQ(c2.kappa1, 3.0);
  EXPECT_EQ(c2.kappa2, Quaternion{});
  EXPECT_EQ(qr.quasi_residual(), 0.0);
}

TEST(BidiagQR, RotationsTriangularizeRandomBidiagonal)
{
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  const std::size_t m = 5;
  QDenseMatrix l(m + 1, m);
  for (std::size_t c = 0; c < m; ++c)
  {
    l(c, c) = oracle::random_quaternion(rng);
    l(c + 1, c) = u(rng);
  }
  BidiagQR qr(1.0);
  std::vector<BidiagColumn> cols;
  for (std::size_t c = 0; c < m; ++c)
  {
    cols.push_back(qr.push(l(c, c), l(c + 1, c).w));
  }
  QDenseMatrix expected(m + 1, m);
  for (std::size_t c = 0; c < m; ++c)
  {
    expected(c, c) = cols[c].kappa1;
    if (c > 0)
    {
      expected(c - 1, c) = cols[c].kappa2;
    }
  }
  EXPECT_LT((rotate_rows(l, qr.rotations()) - expected).frobenius_norm(), 1e-10);
  EXPECT_NEAR(qr.quasi_residual(), oracle::ls_min(l, 1.0), 1e-10);
}
