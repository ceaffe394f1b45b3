#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dense.hpp"
#include "errors.hpp"
#include "operator.hpp"
#include "qvector.hpp"

namespace qqmr
{

/// A linear system A x = b, optionally with its exact solution.
struct Problem
{
  std::shared_ptr<const QLinearOperator> op;
  QVector b;
  std::optional<QVector> truth;
  std::string label;
  /// Explicit sparse form of `op` when one exists (needed by SSOR).
  std::shared_ptr<const QSparseMatrix> matrix;
};

/// Channel coefficients of the Matrix Market experiments: A0 + 2 A0 i - 1.5 A0 j + 0.5 A0 k.
inline constexpr Quaternion default_channel_coefficients{1.0, 2.0, -1.5, 0.5};

/// Vector with all four components uniform in [lo, hi].
inline QVector random_qvector(std::size_t n, std::mt19937_64 &rng, double lo = 0.0, double hi = 1.0)
{
  std::uniform_real_distribution<double> u(lo, hi);
  QVector v(n);
  for (auto &q : v)
  {
    q.w = u(rng);
    q.x = u(rng);
    q.y = u(rng);
    q.z = u(rng);
  }
  return v;
}

/// A = c A0 with b uniform in [0, 1] on every component.
inline Problem gen_channel_scaled(const RealSparseMatrix &a0, std::uint64_t seed,
                            const Quaternion &c = default_channel_coefficients, std::string label = "channel_scaled")
{
  if (a0.rows() != a0.cols())
  {
    throw usage_error("gen_channel_scaled: A0 must be square");
  }
  auto m = std::make_shared<QSparseMatrix>(assemble_channel_scaled(a0, c));
  std::mt19937_64 rng(seed);
  Problem p;
  p.op = m;
  p.matrix = m;
  p.b = random_qvector(a0.rows(), rng);
  p.label = std::move(label);
  return p;
}

/// Upwind-free 5-point discretization of -laplace(u) + beta du/dx on a g x g
/// interior grid of the unit square, scaled by h^2 (diagonal 4). The cell
/// Peclet number beta h / 2 controls the nonsymmetry.
inline RealSparseMatrix convection_diffusion_matrix(std::size_t g, double beta)
{
  if (g == 0)
  {
    throw usage_error("convection_diffusion_matrix: grid must be nonempty");
  }
  const double h = 1.0 / static_cast<double>(g + 1);
  const double c = beta * h / 2.0;
  std::vector<Triplet<double>> t;
  auto id = [g](std::size_t i, std::size_t j) { return j * g + i; };
  for (std::size_t j = 0; j < g; ++j)
  {
    for (std::size_t i = 0; i < g; ++i)
    {
      const std::size_t k = id(i, j);
      t.push_back({k, k, 4.0});
      if (i > 0)
      {
        t.push_back({k, id(i - 1, j), -1.0 - c});
      }
      if (i + 1 < g)
      {
        t.push_back({k, id(i + 1, j), -1.0 + c});
      }
      if (j > 0)
      {
        t.push_back({k, id(i, j - 1), -1.0});
      }
      if (j + 1 < g)
      {
        t.push_back({k, id(i, j + 1), -1.0});
      }
    }
  }
  return {g * g, g * g, std::move(t)};
}

/// Channel-scaled convection-diffusion system of order g^2 with a seeded
/// uniform right-hand side.
inline Problem convection_diffusion_problem(std::size_t g, double beta, std::uint64_t seed,
                                            const Quaternion &c = default_channel_coefficients)
{
  Problem p = gen_channel_scaled(convection_diffusion_matrix(g, beta), seed, c, "convdiff");
  return p;
}

/// Identity system with a seeded right-hand side.
inline Problem identity_problem(std::size_t n, std::uint64_t seed)
{
  auto m = std::make_shared<QSparseMatrix>(assemble_channel_scaled(RealSparseMatrix::identity(n), 1.0));
  std::mt19937_64 rng(seed);
  Problem p;
  p.op = m;
  p.matrix = m;
  p.b = random_qvector(n, rng);
  p.truth = p.b;
  p.label = "identity";
  return p;
}

/// Samples (t, x, y, z) at uniform spacing h.
struct Trajectory
{
  double h = 0;
  std::vector<std::array<double, 4>> samples;
  std::size_t size() const { return samples.size(); }
};

struct ChenParams
{
  double alpha = 35.0;
  double beta = 3.0;
  double rho = 28.0;
};

/// Right-hand side of the Chen system.
inline std::array<double, 3> chen_rhs(const std::array<double, 3> &s, const ChenParams &p)
{
  const double x = s[0], y = s[1], z = s[2];
  return {p.alpha * (y - x), (p.rho - p.alpha) * x - x * z + p.beta * y, x * y - p.beta * z};
}

/// Classical fixed-step RK4 on [0, T]; floor(T/h) + 1 samples.
inline Trajectory chen_rk4(double t_end, double h, std::array<double, 3> init = {1.0, 1.0, 1.0},
                           const ChenParams &params = {})
{
  if (!(h > 0.0) || !(t_end >= h))
  {
    throw usage_error("chen_rk4: need h > 0 and T >= h");
  }
  const auto steps = static_cast<std::size_t>(std::floor(t_end / h + 1e-9));
  Trajectory tr;
  tr.h = h;
  tr.samples.reserve(steps + 1);
  std::array<double, 3> s = init;
  tr.samples.push_back({0.0, s[0], s[1], s[2]});
  auto add = [](const std::array<double, 3> &a, const std::array<double, 3> &k, double f) {
    return std::array<double, 3>{a[0] + f * k[0], a[1] + f * k[1], a[2] + f * k[2]};
  };
  for (std::size_t n = 1; n <= steps; ++n)
  {
    const auto k1 = chen_rhs(s, params);
    const auto k2 = chen_rhs(add(s, k1, h / 2), params);
    const auto k3 = chen_rhs(add(s, k2, h / 2), params);
    const auto k4 = chen_rhs(add(s, k3, h), params);
    for (int c = 0; c < 3; ++c)
    {
      s[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
    }
    if (!std::isfinite(s[0]) || !std::isfinite(s[1]) || !std::isfinite(s[2]))
    {
      throw divergence_error("chen_rk4: state became non-finite at step " + std::to_string(n));
    }
    tr.samples.push_back({static_cast<double>(n) * h, s[0], s[1], s[2]});
  }
  return tr;
}

/// (q+1) x (p+1) quaternion Toeplitz filter system X w = y. The target is
/// y(s) = x_s i + y_s j + z_s k from the trajectory; the input is the target
/// delayed by one sample plus noise uniform in [-noise, noise] on all four
/// components; X[i][j] = input(t + i - j) with t = p + 1 and b[i] = y(t + i).
/// Only square (p == q) systems are accepted by the solvers.
inline Problem build_filter_system(const Trajectory &tr, std::size_t p, std::size_t q, double noise_amp,
                                   std::uint64_t seed)
{
  const std::size_t need = p + q + 2;
  if (tr.size() < need)
  {
    throw usage_error("build_filter_system: trajectory has " + std::to_string(tr.size()) + " samples, need " +
                      std::to_string(need));
  }
  if (noise_amp < 0.0)
  {
    throw usage_error("build_filter_system: noise amplitude must be nonnegative");
  }
  auto target = [&](std::size_t s) {
    const auto &v = tr.samples[s];
    return Quaternion{0.0, v[1], v[2], v[3]};
  };
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-noise_amp, noise_amp);
  // input samples 1 .. p+q+1
  std::vector<Quaternion> input(need);
  for (std::size_t s = 1; s < need; ++s)
  {
    Quaternion n;
    if (noise_amp > 0.0)
    {
      n = {u(rng), u(rng), u(rng), u(rng)};
    }
    input[s] = target(s - 1) + n;
  }
  const std::size_t t = p + 1;
  std::vector<Triplet<Quaternion>> entries;
  entries.reserve((q + 1) * (p + 1));
  for (std::size_t i = 0; i <= q; ++i)
  {
    for (std::size_t j = 0; j <= p; ++j)
    {
      entries.push_back({i, j, input[t + i - j]});
    }
  }
  auto m = std::make_shared<QSparseMatrix>(q + 1, p + 1, std::move(entries));
  Problem pr;
  pr.op = m;
  pr.matrix = m;
  pr.b.resize(q + 1);
  for (std::size_t i = 0; i <= q; ++i)
  {
    pr.b[i] = target(t + i);
  }
  pr.label = "chen";
  return pr;
}

/// Banded Gaussian Toeplitz factor: exp(-(i-j)^2 / (2 sigma^2)) / (sigma sqrt(2 pi)) for |i-j| <= r.
inline RealMatrix gaussian_toeplitz(std::size_t n, double sigma, std::size_t r)
{
  if (!(sigma > 0.0))
  {
    throw usage_error("gaussian_toeplitz: sigma must be positive");
  }
  RealMatrix b(n, n);
  const double scale = 1.0 / (sigma * std::sqrt(2.0 * std::numbers::pi));
  for (std::size_t i = 0; i < n; ++i)
  {
    for (std::size_t j = 0; j < n; ++j)
    {
      const double d = static_cast<double>(i) - static_cast<double>(j);
      if (std::abs(d) <= static_cast<double>(r))
      {
        b(i, j) = scale * std::exp(-d * d / (2.0 * sigma * sigma));
      }
    }
  }
  return b;
}

/// Uniform (box) Toeplitz factor: 1/(2s-1) for |i-j| <= s-1, so interior rows sum to one.
inline RealMatrix box_toeplitz(std::size_t n, std::size_t s)
{
  if (s == 0)
  {
    throw usage_error("box_toeplitz: s must be at least 1");
  }
  RealMatrix b(n, n);
  const double v = 1.0 / static_cast<double>(2 * s - 1);
  for (std::size_t i = 0; i < n; ++i)
  {
    for (std::size_t j = 0; j < n; ++j)
    {
      const std::size_t d = i > j ? i - j : j - i;
      if (d + 1 <= s)
      {
        b(i, j) = v;
      }
    }
  }
  return b;
}

struct BlurFactors
{
  RealMatrix b1;
  RealMatrix b2;
};

inline BlurFactors build_blur_single_factors(std::size_t n, double sigma = 1.0, std::size_t r = 10,
                                             std::size_t s = 7)
{
  if (n == 0)
  {
    throw usage_error("blur: image size must be positive");
  }
  return {gaussian_toeplitz(n, sigma, r), box_toeplitz(n, s)};
}

/// A = (B1 kron B2), the same blur on every channel.
inline std::shared_ptr<ChannelScaled> build_blur_single(std::size_t n, double sigma = 1.0, std::size_t r = 10,
                                                        std::size_t s = 7)
{
  auto f = build_blur_single_factors(n, sigma, r, s);
  return std::make_shared<ChannelScaled>(std::make_shared<KroneckerOperator>(std::move(f.b1), std::move(f.b2)),
                                         1.0);
}

/// Multichannel blur A = (B2 kron B2)(1 + i - j - k).
inline std::shared_ptr<ChannelScaled> build_blur_multi(std::size_t n, std::size_t s = 3)
{
  if (n == 0)
  {
    throw usage_error("blur: image size must be positive");
  }
  auto b2 = box_toeplitz(n, s);
  return std::make_shared<ChannelScaled>(std::make_shared<KroneckerOperator>(b2, b2),
                                         Quaternion{1.0, 1.0, -1.0, -1.0});
}

/// b = A x_true for the deblurring experiments.
inline Problem deblur_problem(std::shared_ptr<const QLinearOperator> blur, QVector truth, std::string label)
{
  detail::check_same_size(truth.size(), blur->cols(), "deblur_problem");
  Problem p;
  p.b = blur->apply(truth);
  p.op = std::move(blur);
  p.truth = std::move(truth);
  p.label = std::move(label);
  return p;
}

/// 10 log10(c n^2 d^2 / ||x_hat - x||^2) for images with c channels; +inf when identical.
inline double psnr(std::span<const Quaternion> x_hat, std::span<const Quaternion> x, std::size_t n,
                   double d = 255.0, int channels = 3)
{
  detail::check_same_size(x_hat.size(), x.size(), "psnr");
  detail::check_same_size(x.size(), n * n, "psnr");
  double err = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
  {
    err += norm2(x_hat[i] - x[i]);
  }
  if (err == 0.0)
  {
    return std::numeric_limits<double>::infinity();
  }
  const double nn = static_cast<double>(n) * static_cast<double>(n);
  return 10.0 * std::log10(channels * nn * d * d / err);
}

/// Global SSIM over all channel samples (x, y, z for 3 channels; all four
/// components for 4). One window; c1 = (0.01 L)^2, c2 = (0.03 L)^2.
inline double ssim(std::span<const Quaternion> x_hat, std::span<const Quaternion> x, double l = 255.0,
                   int channels = 3)
{
  detail::check_same_size(x_hat.size(), x.size(), "ssim");
  if (channels != 3 && channels != 4)
  {
    throw usage_error("ssim: channels must be 3 or 4");
  }
  const int first = channels == 3 ? 1 : 0;
  double sa = 0, sb = 0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
  {
    for (int c = first; c < 4; ++c)
    {
      sa += x_hat[i][c];
      sb += x[i][c];
      ++count;
    }
  }
  if (count == 0)
  {
    throw usage_error("ssim: empty input");
  }
  const double ma = sa / count, mb = sb / count;
  double va = 0, vb = 0, cov = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
  {
    for (int c = first; c < 4; ++c)
    {
      const double da = x_hat[i][c] - ma;
      const double db = x[i][c] - mb;
      va += da * da;
      vb += db * db;
      cov += da * db;
    }
  }
  va /= count;
  vb /= count;
  cov /= count;
  const double c1 = (0.01 * l) * (0.01 * l);
  const double c2 = (0.03 * l) * (0.03 * l);
  return (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
}

}  // namespace qqmr
