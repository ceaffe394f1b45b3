#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "oracle.hpp"

using namespace qqmr;

namespace
{

double endpoint_distance(const Trajectory &a, const Trajectory &b)
{
  const auto &p = a.samples.back();
  const auto &q = b.samples.back();
  return std::hypot(p[1] - q[1], p[2] - q[2], p[3] - q[3]);
}

// Explicit (B1 kron B2) c as a dense quaternion matrix.
QDenseMatrix dense_kron(const RealMatrix &b1, const RealMatrix &b2, const Quaternion &c)
{
  const std::size_t n = b1.rows();
  QDenseMatrix m(n * n, n * n);
  for (std::size_t i1 = 0; i1 < n; ++i1)
  {
    for (std::size_t j1 = 0; j1 < n; ++j1)
    {
      for (std::size_t i2 = 0; i2 < n; ++i2)
      {
        for (std::size_t j2 = 0; j2 < n; ++j2)
        {
          m(i1 * n + i2, j1 * n + j2) = c * (b1(i1, j1) * b2(i2, j2));
        }
      }
    }
  }
  return m;
}

QVector pure_image(std::size_t n, std::mt19937_64 &rng)
{
  QVector v = random_qvector(n * n, rng, 0.0, 255.0);
  for (auto &q : v)
  {
    q.w = 0.0;
  }
  return v;
}

}  // namespace

TEST(ChannelScaledProblem, ChannelCoefficients)
{
  const Problem p = gen_channel_scaled(RealSparseMatrix::identity(5), 42);
  ASSERT_TRUE(p.matrix);
  const QDenseMatrix a = p.matrix->to_dense();
  EXPECT_EQ(a(0, 0), Quaternion(1.0, 2.0, -1.5, 0.5));
  EXPECT_DOUBLE_EQ(abs(a(3, 3)), std::sqrt(7.5));
  EXPECT_EQ(a(0, 1), Quaternion{});
}

TEST(ChannelScaledProblem, SeededRightHandSide)
{
  const Problem p1 = gen_channel_scaled(RealSparseMatrix::identity(50), 7);
  const Problem p2 = gen_channel_scaled(RealSparseMatrix::identity(50), 7);
  const Problem p3 = gen_channel_scaled(RealSparseMatrix::identity(50), 8);
  EXPECT_EQ(p1.b, p2.b);
  EXPECT_NE(p1.b, p3.b);
  for (const auto &q : p1.b)
  {
    for (int c = 0; c < 4; ++c)
    {
      EXPECT_GE(q[c], 0.0);
      EXPECT_LE(q[c], 1.0);
    }
  }
}

TEST(ChannelScaledProblem, NonSquareThrows)
{
  EXPECT_THROW(gen_channel_scaled(RealSparseMatrix(2, 3, {}), 1), usage_error);
}

TEST(ConvectionDiffusion, StencilAndNonsymmetry)
{
  const RealSparseMatrix a = convection_diffusion_matrix(4, 10.0);
  EXPECT_EQ(a.rows(), 16u);
  EXPECT_DOUBLE_EQ(a.at(5, 5), 4.0);
  const double c = 10.0 / 5.0 / 2.0;
  EXPECT_DOUBLE_EQ(a.at(5, 4), -1.0 - c);
  EXPECT_DOUBLE_EQ(a.at(5, 6), -1.0 + c);
  EXPECT_DOUBLE_EQ(a.at(5, 1), -1.0);
  EXPECT_DOUBLE_EQ(a.at(5, 9), -1.0);
  EXPECT_DOUBLE_EQ(a.at(4, 3), 0.0);  // grid boundary between columns
  const RealSparseMatrix sym = convection_diffusion_matrix(4, 0.0);
  EXPECT_EQ(sym.to_dense(), sym.to_dense().transpose());
}

TEST(Identity, TruthIsRightHandSide)
{
  const Problem p = identity_problem(10, 3);
  ASSERT_TRUE(p.truth);
  EXPECT_EQ(p.op->apply(*p.truth), p.b);
}

TEST(Chen, DerivativeAtInitialState)
{
  const auto d = chen_rhs({1.0, 1.0, 1.0}, ChenParams{});
  EXPECT_EQ(d[0], 0.0);
  EXPECT_EQ(d[1], -5.0);
  EXPECT_EQ(d[2], -2.0);
}

TEST(Chen, SampleCount)
{
  EXPECT_EQ(chen_rk4(1.0, 1e-3).size(), 1001u);
  EXPECT_EQ(chen_rk4(0.5, 0.1).size(), 6u);
  EXPECT_DOUBLE_EQ(chen_rk4(0.5, 0.1).samples.back()[0], 0.5);
}

TEST(Chen, FourthOrderConvergence)
{
  const double h = 0.01;
  const Trajectory ref = chen_rk4(0.1, h / 128);
  const double e1 = endpoint_distance(chen_rk4(0.1, h), ref);
  const double e2 = endpoint_distance(chen_rk4(0.1, h / 2), ref);
  const double ratio = e1 / e2;
  EXPECT_GT(ratio, 14.0);
  EXPECT_LT(ratio, 18.0);
}

TEST(Chen, DegenerateParametersGiveRotation)
{
  // with all parameters zero: x' = 0, y' = -x z, z' = x y, so from (1, 1, 0)
  // the (y, z) pair rotates: y = cos t, z = sin t
  const Trajectory tr = chen_rk4(1.0, 1e-3, {1.0, 1.0, 0.0}, ChenParams{0.0, 0.0, 0.0});
  for (const auto &s : tr.samples)
  {
    EXPECT_DOUBLE_EQ(s[1], 1.0);
    EXPECT_NEAR(s[2], std::cos(s[0]), 1e-12);
    EXPECT_NEAR(s[3], std::sin(s[0]), 1e-12);
  }
}

TEST(Chen, BadArgumentsAndDivergence)
{
  EXPECT_THROW(chen_rk4(1.0, 0.0), usage_error);
  EXPECT_THROW(chen_rk4(0.01, 0.1), usage_error);
  EXPECT_THROW(chen_rk4(10.0, 0.5), divergence_error);
}

TEST(FilterSystem, ToeplitzStructure)
{
  const Trajectory tr = chen_rk4(1.0, 1e-3);
  const Problem p = build_filter_system(tr, 6, 9, 0.1, 5);
  const QDenseMatrix x = p.matrix->to_dense();
  EXPECT_EQ(x.rows(), 10u);
  EXPECT_EQ(x.cols(), 7u);
  for (std::size_t i = 0; i + 1 < x.rows(); ++i)
  {
    for (std::size_t j = 0; j + 1 < x.cols(); ++j)
    {
      EXPECT_EQ(x(i, j), x(i + 1, j + 1));
    }
  }
  EXPECT_EQ(p.b.size(), 10u);
  for (const auto &q : p.b)
  {
    EXPECT_EQ(q.w, 0.0);
  }
}

TEST(FilterSystem, SquareDimension)
{
  const Problem p = build_filter_system(chen_rk4(1.0, 1e-3), 50, 50, 0.01, 1);
  EXPECT_EQ(p.op->rows(), 51u);
  EXPECT_EQ(p.op->cols(), 51u);
}

TEST(FilterSystem, ScalarCase)
{
  const Trajectory tr = chen_rk4(0.01, 1e-3);
  const Problem p = build_filter_system(tr, 0, 0, 0.0, 1);
  const QDenseMatrix x = p.matrix->to_dense();
  ASSERT_EQ(x.rows(), 1u);
  // input(t) is the target delayed by one sample: the initial state (1, 1, 1)
  EXPECT_EQ(x(0, 0), Quaternion(0, 1, 1, 1));
  const auto &s = tr.samples[1];
  EXPECT_EQ(p.b[0], Quaternion(0, s[1], s[2], s[3]));
  const SolveReport rep = qqmr2_solve(*p.op, p.b, {}, {});
  EXPECT_TRUE(rep.converged());
  EXPECT_LT(abs(rep.x[0] - inv(x(0, 0)) * p.b[0]), 1e-12);
}

TEST(FilterSystem, NoiseIsSeededAndBounded)
{
  const Trajectory tr = chen_rk4(0.1, 1e-3);
  const Problem clean = build_filter_system(tr, 3, 3, 0.0, 1);
  const Problem a = build_filter_system(tr, 3, 3, 0.05, 9);
  const Problem b = build_filter_system(tr, 3, 3, 0.05, 9);
  EXPECT_EQ(a.matrix->to_dense(), b.matrix->to_dense());
  const QDenseMatrix d = a.matrix->to_dense() - clean.matrix->to_dense();
  for (std::size_t i = 0; i < 4; ++i)
  {
    for (std::size_t j = 0; j < 4; ++j)
    {
      for (int c = 0; c < 4; ++c)
      {
        EXPECT_LE(std::abs(d(i, j)[c]), 0.05);
      }
    }
  }
}

TEST(FilterSystem, ShortTrajectoryThrows)
{
  const Trajectory tr = chen_rk4(0.01, 1e-3);  // 11 samples
  EXPECT_THROW(build_filter_system(tr, 5, 5, 0.0, 1), usage_error);
  EXPECT_NO_THROW(build_filter_system(tr, 4, 5, 0.0, 1));
}

TEST(Blur, GaussianFactor)
{
  const RealMatrix b1 = gaussian_toeplitz(30, 1.0, 10);
  EXPECT_NEAR(b1(4, 4), 1.0 / std::sqrt(2.0 * std::numbers::pi), 1e-15);
  EXPECT_NEAR(b1(4, 4), 0.39894, 1e-5);
  EXPECT_NEAR(b1(5, 4), std::exp(-0.5) * b1(4, 4), 1e-15);
  EXPECT_GT(b1(0, 10), 0.0);
  EXPECT_EQ(b1(0, 11), 0.0);
  EXPECT_EQ(b1, b1.transpose());
}

TEST(Blur, BoxFactor)
{
  const RealMatrix b2 = box_toeplitz(20, 7);
  double sum = 0.0;
  for (std::size_t j = 0; j < 20; ++j)
  {
    sum += b2(10, j);
  }
  EXPECT_NEAR(sum, 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(b2(10, 16), 1.0 / 13.0);
  EXPECT_EQ(b2(10, 17), 0.0);
  EXPECT_EQ(box_toeplitz(6, 1), RealMatrix::identity(6));
  EXPECT_THROW(box_toeplitz(4, 0), usage_error);
}

TEST(Blur, MultiChannelFactor)
{
  const auto a = build_blur_multi(5, 3);
  EXPECT_DOUBLE_EQ(abs(a->coefficient()), 2.0);
  const auto id = build_blur_multi(4, 1);
  std::mt19937_64 rng(1);
  const QVector x = oracle::random_vector(16, rng);
  QVector expected(16);
  for (std::size_t i = 0; i < 16; ++i)
  {
    expected[i] = Quaternion(1, 1, -1, -1) * x[i];
  }
  EXPECT_LT(oracle::rel_diff(id->apply(x), expected), 1e-15);
}

TEST(Blur, OperatorsMatchDenseKronecker)
{
  std::mt19937_64 rng(2);
  for (std::size_t n : {3u, 4u, 8u})
  {
    const QVector x = oracle::random_vector(n * n, rng);
    const auto f = build_blur_single_factors(n, 1.0, 10, 7);
    const auto single = build_blur_single(n);
    const QDenseMatrix ds = dense_kron(f.b1, f.b2, 1.0);
    EXPECT_LT(oracle::rel_diff(single->apply(x), ds.apply(x)), 1e-12);
    EXPECT_LT(oracle::rel_diff(single->apply_adjoint(x), ds.adjoint().apply(x)), 1e-12);

    const auto multi = build_blur_multi(n);
    const RealMatrix b2 = box_toeplitz(n, 3);
    const QDenseMatrix dm = dense_kron(b2, b2, Quaternion(1, 1, -1, -1));
    EXPECT_LT(oracle::rel_diff(multi->apply(x), dm.apply(x)), 1e-12);
    EXPECT_LT(oracle::rel_diff(multi->apply_adjoint(x), dm.adjoint().apply(x)), 1e-12);
  }
}

TEST(Blur, DeblurProblemIsConsistent)
{
  std::mt19937_64 rng(3);
  const QVector truth = pure_image(6, rng);
  const Problem p = deblur_problem(build_blur_single(6), truth, "blur");
  EXPECT_EQ(p.b, p.op->apply(truth));
  EXPECT_THROW(deblur_problem(build_blur_single(6), QVector(5), "bad"), usage_error);
}

TEST(Metrics, Psnr)
{
  std::mt19937_64 rng(4);
  const std::size_t n = 8;
  const QVector x = pure_image(n, rng);
  EXPECT_TRUE(std::isinf(psnr(x, x, n)));

  QVector white(n * n, Quaternion(0, 255, 255, 255));
  EXPECT_NEAR(psnr(QVector(n * n), white, n), 0.0, 1e-12);

  QVector e1 = x, e2 = x;
  for (std::size_t i = 0; i < x.size(); ++i)
  {
    const Quaternion d(0, 4.0 * std::sin(i), 2.0, -3.0);
    e1[i] += d;
    e2[i] += d * 0.5;
  }
  EXPECT_NEAR(psnr(e2, x, n) - psnr(e1, x, n), 10.0 * std::log10(4.0), 1e-12);
}

TEST(Metrics, Ssim)
{
  std::mt19937_64 rng(5);
  const QVector x = pure_image(8, rng);
  EXPECT_NEAR(ssim(x, x), 1.0, 1e-15);

  QVector centered = x;
  double mean = 0;
  for (const auto &q : x)
  {
    mean += q.x + q.y + q.z;
  }
  mean /= 3.0 * x.size();
  for (auto &q : centered)
  {
    q -= Quaternion(0, mean, mean, mean);
  }
  QVector negated = centered;
  for (auto &q : negated)
  {
    q = -q;
  }
  EXPECT_LT(ssim(negated, centered), 0.0);

  const QVector black(64);
  const QVector white(64, Quaternion(0, 255, 255, 255));
  const double c1 = 2.55 * 2.55;
  EXPECT_NEAR(ssim(black, white), c1 / (255.0 * 255.0 + c1), 1e-15);
  EXPECT_GT(ssim(black, white), 0.0);
}

TEST(Metrics, PermutationCovariance)
{
  std::mt19937_64 rng(6);
  const std::size_t n = 6;
  const QVector x = pure_image(n, rng);
  const QVector y = pure_image(n, rng);
  std::vector<std::size_t> perm(n * n);
  for (std::size_t i = 0; i < perm.size(); ++i)
  {
    perm[i] = i;
  }
  std::shuffle(perm.begin(), perm.end(), rng);
  QVector px(x.size()), py(y.size());
  for (std::size_t i = 0; i < perm.size(); ++i)
  {
    px[i] = x[perm[i]];
    py[i] = y[perm[i]];
  }
  EXPECT_NEAR(psnr(px, py, n), psnr(x, y, n), 1e-12);
  EXPECT_NEAR(ssim(px, py), ssim(x, y), 1e-12);
}

TEST(ImageIo, VecRoundTrip)
{
  ColorImage img(5, 4);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0, 255);
  for (auto &p : img.planes)
  {
    for (auto &v : p)
    {
      v = u(rng);
    }
  }
  const QVector v = to_qvector(img);
  EXPECT_EQ(v[1 * 5 + 3].y, img.at(2, 3, 1));
  const ColorImage back = from_qvector(v, 5, 4);
  EXPECT_EQ(back.planes, img.planes);
  EXPECT_THROW(ColorImage(4, 2), usage_error);
}

TEST(ImageIo, PpmRoundTrip)
{
  ColorImage img(4, 3);
  for (int p = 1; p < 4; ++p)
  {
    for (std::size_t k = 0; k < 16; ++k)
    {
      img.planes[p][k] = static_cast<double>((k * 17 + p * 40) % 256);
    }
  }
  std::stringstream ss;
  write_ppm(ss, img);
  const ColorImage back = read_pnm(ss);
  EXPECT_EQ(back.n, 4u);
  for (int p = 1; p < 4; ++p)
  {
    EXPECT_EQ(back.planes[p], img.planes[p]);
  }
}

TEST(ImageIo, PgmReplicatesGrayToAllChannels)
{
  ColorImage img(3, 3);
  for (int p = 1; p < 4; ++p)
  {
    for (std::size_t k = 0; k < 9; ++k)
    {
      img.planes[p][k] = static_cast<double>(k * 10);
    }
  }
  std::stringstream ss;
  write_pgm(ss, img);
  const ColorImage back = read_pnm(ss);
  for (int p = 1; p < 4; ++p)
  {
    EXPECT_EQ(back.planes[p], img.planes[p]);
  }
}

TEST(ImageIo, Qimg4RoundTripIsExact)
{
  ColorImage img(3, 4);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 255);
  for (auto &p : img.planes)
  {
    for (auto &v : p)
    {
      v = u(rng);
    }
  }
  std::stringstream ss;
  write_qimg4(ss, img);
  const ColorImage back = read_qimg4(ss);
  EXPECT_EQ(back.channels, 4);
  EXPECT_EQ(back.planes, img.planes);
}

TEST(ImageIo, MalformedInput)
{
  std::stringstream bad("P3\n2 2\n255\n");
  EXPECT_THROW(read_pnm(bad), parse_error);
  std::stringstream rect("P6\n2 3\n255\n");
  EXPECT_THROW(read_pnm(rect), usage_error);
  std::stringstream truncated("P6\n2 2\n255\nabc");
  EXPECT_THROW(read_pnm(truncated), parse_error);
  EXPECT_THROW(read_image("/nonexistent/image.ppm"), io_error);
}
