#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bio.hpp"
#include "errors.hpp"
#include "givens.hpp"
#include "operator.hpp"
#include "qvector.hpp"

namespace qqmr
{

/// Called after every iteration with the iteration number and current iterate.
using IterateObserver = std::function<void(std::size_t, std::span<const Quaternion>)>;

struct SolveOptions
{
  double tol = 1e-7;
  std::size_t max_iter = 5000;
  BreakdownPolicy breakdown{};
  /// Left preconditioner M; the solver then works on M^{-1} A x = M^{-1} b.
  const Preconditioner *preconditioner = nullptr;
  bool record_history = false;
  /// Recompute b - A x from scratch every this many iterations (0 disables).
  std::size_t recompute_every = 50;
  IterateObserver observer{};
};

enum class Termination
{
  converged,
  max_iter,
  breakdown,
  restart_exhausted
};

inline const char *to_string(Termination t)
{
  switch (t)
  {
  case Termination::converged:
    return "converged";
  case Termination::max_iter:
    return "max_iter";
  case Termination::breakdown:
    return "breakdown";
  case Termination::restart_exhausted:
    return "restart_exhausted";
  }
  return "unknown";
}

/// One row of the convergence history.
struct HistoryEntry
{
  std::size_t iter = 0;
  /// ||r_j|| / ||r_0|| from the updated residual (preconditioned when M is set).
  double rr = 0;
  /// |gamma_{j+1}| / ||r_0||; NaN for solvers without a quasi-residual.
  double quasi_rr = std::numeric_limits<double>::quiet_NaN();
  /// ||b - A x_j|| / ||b - A x_0|| recomputed from scratch; NaN when not recomputed.
  double recomputed_rr = std::numeric_limits<double>::quiet_NaN();
  double wall_ms = 0;
  /// |g12| of the rotation built at this step.
  double g12 = std::numeric_limits<double>::quiet_NaN();
  /// ||G^* G - I||_F of that rotation.
  double givens_defect = std::numeric_limits<double>::quiet_NaN();
  /// Step index within the current Krylov cycle (1-based; resets on restart).
  std::size_t cycle_step = 0;
  /// ||r|| at the start of the current cycle over ||r_0||.
  double cycle_beta = 1.0;
};

struct SolveReport
{
  QVector x;
  std::size_t iterations = 0;
  Termination termination = Termination::max_iter;
  std::string message;
  int restarts = 0;
  double wall_seconds = 0;
  /// ||b - A x|| / ||b - A x0||, recomputed at exit.
  double true_final_rr = 0;
  /// ||M^{-1}(b - A x)|| / ||M^{-1}(b - A x0)|| at exit, preconditioned runs only.
  std::optional<double> preconditioned_final_rr;
  std::vector<HistoryEntry> history;

  bool converged() const { return termination == Termination::converged; }
  /// The residual the stopping test uses.
  double final_rr() const { return preconditioned_final_rr ? *preconditioned_final_rr : true_final_rr; }

  std::vector<double> relative_residuals() const
  {
    std::vector<double> out;
    for (const auto &h : history)
    {
      out.push_back(h.rr);
    }
    return out;
  }

  std::vector<double> quasi_residuals() const
  {
    std::vector<double> out;
    for (const auto &h : history)
    {
      out.push_back(h.quasi_rr);
    }
    return out;
  }
};

namespace detail
{

/// Left-preconditioned residual M^{-1}(b - A x), or b - A x without M.
inline QVector residual(const QLinearOperator &a, const Preconditioner *m, std::span<const Quaternion> b,
                        std::span<const Quaternion> x)
{
  QVector r = a.apply(x);
  for (std::size_t i = 0; i < r.size(); ++i)
  {
    r[i] = b[i] - r[i];
  }
  return m ? m->solve(r) : r;
}

struct CycleStep
{
  BioStatus status = BioStatus::ok;
  double g12 = 0;
  double givens_defect = 0;
  double quasi = 0;
};

/// One Krylov cycle of QQMR on the three-term process.
class Qmr3Cycle
{
public:
  Qmr3Cycle(const QLinearOperator &op, const QVector &r, double beta, const BreakdownPolicy &policy)
    : bio_(op, r, r, policy), qr_(beta), d1_(r.size()), d2_(r.size()), ad1_(r.size()), ad2_(r.size())
  {
  }

  CycleStep step(QVector &x, QVector &r)
  {
    const QVector v = bio_.v();
    const ThreeTermStep s = bio_.step();
    const TridiagColumn c = qr_.push(s.tau, s.alpha, s.rho_next);
    // d_j = (v_j - d_{j-1} eta2 - d_{j-2} eta3) / eta1, and likewise for A d_j
    QVector d = v;
    QVector ad = bio_.last_av();
    axpy(d, d1_, -c.eta2);
    axpy(d, d2_, -c.eta3);
    axpy(ad, ad1_, -c.eta2);
    axpy(ad, ad2_, -c.eta3);
    scale(d, 1.0 / c.eta1);
    scale(ad, 1.0 / c.eta1);
    const Quaternion g = qr_.last_gamma();
    axpy(x, d, g);
    axpy(r, ad, -g);
    d2_ = std::move(d1_);
    d1_ = std::move(d);
    ad2_ = std::move(ad1_);
    ad1_ = std::move(ad);
    const QGivens &rot = qr_.rotations().back();
    return {s.status, abs(rot.g12), rot.unitarity_defect(), qr_.quasi_residual()};
  }

private:
  ThreeTermBio bio_;
  TridiagQR qr_;
  QVector d1_, d2_, ad1_, ad2_;
};

/// One Krylov cycle of QQMR on the coupled two-term process.
class Qmr2Cycle
{
public:
  Qmr2Cycle(const QLinearOperator &op, const QVector &r, double beta, const BreakdownPolicy &policy)
    : bio_(op, r, r, policy), qr_(beta), d1_(r.size()), ad1_(r.size())
  {
  }

  CycleStep step(QVector &x, QVector &r)
  {
    const TwoTermStep s = bio_.step();
    const BidiagColumn c = qr_.push(s.tau1, s.rho_next);
    // dbar_j = (p_j - dbar_{j-1} kappa2) / kappa1
    QVector d = bio_.p();
    QVector ad = bio_.last_ap();
    axpy(d, d1_, -c.kappa2);
    axpy(ad, ad1_, -c.kappa2);
    scale(d, 1.0 / c.kappa1);
    scale(ad, 1.0 / c.kappa1);
    const Quaternion g = qr_.last_gamma();
    axpy(x, d, g);
    axpy(r, ad, -g);
    d1_ = std::move(d);
    ad1_ = std::move(ad);
    const QGivens &rot = qr_.rotations().back();
    return {s.status, abs(rot.g12), rot.unitarity_defect(), qr_.quasi_residual()};
  }

private:
  TwoTermBio bio_;
  BidiagQR qr_;
  QVector d1_, ad1_;
};

inline void check_solve_args(const QLinearOperator &a, std::span<const Quaternion> b,
                             std::span<const Quaternion> x0, const SolveOptions &opts)
{
  if (a.rows() != a.cols())
  {
    throw usage_error("solver: operator must be square (" + std::to_string(a.rows()) + " x " +
                      std::to_string(a.cols()) + ")");
  }
  check_same_size(b.size(), a.rows(), "solver right-hand side");
  if (!x0.empty())
  {
    check_same_size(x0.size(), a.cols(), "solver initial guess");
  }
  if (!(opts.tol > 0.0) || opts.max_iter < 1)
  {
    throw usage_error("solver: need tol > 0 and max_iter >= 1");
  }
  if (opts.preconditioner && opts.preconditioner->size() != a.rows())
  {
    throw usage_error("solver: preconditioner size mismatch");
  }
}

using Clock = std::chrono::steady_clock;

inline double ms_since(Clock::time_point t0)
{
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

/// Bookkeeping shared by all solvers: residual recomputation, history,
/// best iterate and final report.
class SolveDriver
{
public:
  SolveDriver(const QLinearOperator &a, std::span<const Quaternion> b, std::span<const Quaternion> x0,
              const SolveOptions &opts)
    : a_(a), b_(b), opts_(opts), t0_(Clock::now())
  {
    check_solve_args(a, b, x0, opts);
    x = x0.empty() ? QVector(a.cols()) : QVector(x0.begin(), x0.end());
    const QVector r_true = residual(a_, nullptr, b_, x);
    true_beta0_ = norm(r_true);
    r = opts_.preconditioner ? opts_.preconditioner->solve(r_true) : r_true;
    beta0 = norm(r);
    best_x_ = x;
  }

  /// Relative residual the stopping test uses, recomputed from scratch.
  double recompute()
  {
    r = residual(a_, opts_.preconditioner, b_, x);
    return norm(r) / beta0;
  }

  double true_rr() const
  {
    if (true_beta0_ == 0.0)
    {
      return 0.0;
    }
    return norm(residual(a_, nullptr, b_, x)) / true_beta0_;
  }

  void record(std::size_t iter, double rr, HistoryEntry entry)
  {
    if (rr < best_rr_)
    {
      best_rr_ = rr;
      best_x_ = x;
    }
    if (opts_.observer)
    {
      opts_.observer(iter, x);
    }
    if (opts_.record_history)
    {
      entry.iter = iter;
      entry.rr = rr;
      entry.wall_ms = ms_since(t0_);
      report_.history.push_back(entry);
    }
  }

  bool due_for_recompute(std::size_t iter) const
  {
    return opts_.recompute_every > 0 && iter % opts_.recompute_every == 0;
  }

  /// Stores the recomputed true residual in the latest history row.
  void note_true_rr(double value)
  {
    if (opts_.record_history && !report_.history.empty())
    {
      report_.history.back().recomputed_rr = value;
    }
  }

  SolveReport finish(std::size_t iterations, Termination t, std::string message, int restarts)
  {
    if (t != Termination::converged)
    {
      // fall back to the best iterate seen when the last one is worse
      const double last = norm(residual(a_, opts_.preconditioner, b_, x)) / beta0;
      const double best = norm(residual(a_, opts_.preconditioner, b_, best_x_)) / beta0;
      if (best < last)
      {
        x = best_x_;
      }
    }
    report_.x = x;
    report_.iterations = iterations;
    report_.termination = t;
    report_.message = std::move(message);
    report_.restarts = restarts;
    report_.true_final_rr = true_rr();
    if (opts_.preconditioner)
    {
      report_.preconditioned_final_rr = beta0 == 0.0 ? 0.0 : norm(residual(a_, opts_.preconditioner, b_, x)) / beta0;
    }
    note_true_rr(report_.true_final_rr);
    report_.wall_seconds = ms_since(t0_) / 1000.0;
    return std::move(report_);
  }

  const SolveOptions &options() const { return opts_; }

  QVector x;
  QVector r;
  double beta0 = 0;

private:
  const QLinearOperator &a_;
  std::span<const Quaternion> b_;
  const SolveOptions &opts_;
  Clock::time_point t0_;
  double true_beta0_ = 0;
  double best_rr_ = std::numeric_limits<double>::infinity();
  QVector best_x_;
  SolveReport report_;
};

template <class Cycle>
SolveReport run_qmr(const QLinearOperator &a, std::span<const Quaternion> b, std::span<const Quaternion> x0,
                    const SolveOptions &opts)
{
  SolveDriver drv(a, b, x0, opts);
  if (drv.beta0 == 0.0)
  {
    return drv.finish(0, Termination::converged, "zero initial residual", 0);
  }
  std::optional<PreconditionedOperator> pre;
  if (opts.preconditioner)
  {
    pre.emplace(a, *opts.preconditioner);
  }
  const QLinearOperator &op = pre ? static_cast<const QLinearOperator &>(*pre) : a;

  int restarts = 0;
  std::size_t iter = 0;
  while (true)
  {
    // new Krylov cycle from the current residual
    const double beta = norm(drv.r);
    QVector r_unit = drv.r;
    scale(r_unit, 1.0 / beta);
    Cycle cycle(op, r_unit, beta, opts.breakdown);
    std::size_t cycle_step = 0;
    bool new_cycle = false;
    while (!new_cycle)
    {
      if (iter >= opts.max_iter)
      {
        return drv.finish(iter, Termination::max_iter, "iteration limit reached", restarts);
      }
      CycleStep s;
      try
      {
        s = cycle.step(drv.x, drv.r);
      }
      catch (const breakdown_error &e)
      {
        return drv.finish(iter, Termination::breakdown, e.what(), restarts);
      }
      ++iter;
      ++cycle_step;
      double rr = norm(drv.r) / drv.beta0;
      HistoryEntry h;
      h.quasi_rr = s.quasi / drv.beta0;
      h.g12 = s.g12;
      h.givens_defect = s.givens_defect;
      h.cycle_step = cycle_step;
      h.cycle_beta = beta / drv.beta0;
      if (!std::isfinite(rr))
      {
        return drv.finish(iter, Termination::breakdown, "non-finite residual", restarts);
      }
      drv.record(iter, rr, h);

      const bool claims_converged = rr <= opts.tol;
      const bool lucky = s.status == BioStatus::lucky_breakdown;
      const bool broken = s.status == BioStatus::near_breakdown || s.status == BioStatus::serious_breakdown;
      if (claims_converged || lucky || broken || drv.due_for_recompute(iter))
      {
        const double fresh = drv.recompute();
        drv.note_true_rr(drv.true_rr());
        if (fresh <= opts.tol)
        {
          return drv.finish(iter, Termination::converged, lucky ? "converged (lucky breakdown)" : "converged",
                            restarts);
        }
        if (broken)
        {
          if (++restarts > opts.breakdown.max_restarts)
          {
            return drv.finish(iter, Termination::restart_exhausted,
                              std::string("restart limit exceeded after ") + to_string(s.status), restarts);
          }
          new_cycle = true;
        }
        else if (claims_converged || lucky)
        {
          // updated residual drifted from the true one; continue from x
          new_cycle = true;
        }
      }
    }
  }
}

}  // namespace detail

/// QQMR on the three-term biconjugate orthonormalization process.
inline SolveReport qqmr3_solve(const QLinearOperator &a, std::span<const Quaternion> b,
                               std::span<const Quaternion> x0 = {}, const SolveOptions &opts = {})
{
  return detail::run_qmr<detail::Qmr3Cycle>(a, b, x0, opts);
}

/// QQMR on the coupled two-term process.
inline SolveReport qqmr2_solve(const QLinearOperator &a, std::span<const Quaternion> b,
                               std::span<const Quaternion> x0 = {}, const SolveOptions &opts = {})
{
  return detail::run_qmr<detail::Qmr2Cycle>(a, b, x0, opts);
}

enum class QmrVariant
{
  three_term,
  two_term
};

/// Left-preconditioned QQMR: runs the chosen variant on M^{-1} A x = M^{-1} b.
/// Stops on the preconditioned relative residual; the report carries both.
inline SolveReport pqqmr_solve(QmrVariant variant, const QLinearOperator &a, std::span<const Quaternion> b,
                               std::span<const Quaternion> x0, const Preconditioner &m, SolveOptions opts = {})
{
  opts.preconditioner = &m;
  return variant == QmrVariant::three_term ? qqmr3_solve(a, b, x0, opts) : qqmr2_solve(a, b, x0, opts);
}

/// Quaternion biconjugate gradients with shadow residual r~_0 = r_0.
/// Breaks down when <r_j, r~_j> or <A p_j, p~_j> vanishes relative to the
/// norms of its factors.
inline SolveReport qbicg_solve(const QLinearOperator &a, std::span<const Quaternion> b,
                               std::span<const Quaternion> x0 = {}, const SolveOptions &opts = {})
{
  detail::SolveDriver drv(a, b, x0, opts);
  if (drv.beta0 == 0.0)
  {
    return drv.finish(0, Termination::converged, "zero initial residual", 0);
  }
  std::optional<PreconditionedOperator> pre;
  if (opts.preconditioner)
  {
    pre.emplace(a, *opts.preconditioner);
  }
  const QLinearOperator &op = pre ? static_cast<const QLinearOperator &>(*pre) : a;
  const double tiny = std::numeric_limits<double>::epsilon();

  QVector &x = drv.x;
  QVector &r = drv.r;
  QVector rs = r;
  QVector p = r;
  QVector ps = rs;
  QVector ap(r.size()), atps(r.size());
  Quaternion delta = inner(r, rs);

  for (std::size_t iter = 1; iter <= opts.max_iter; ++iter)
  {
    op.apply(p, ap);
    const Quaternion omega = inner(ap, ps);
    if (abs(omega) <= tiny * norm(ap) * norm(ps))
    {
      return drv.finish(iter - 1, Termination::breakdown, "<A p, p~> vanished", 0);
    }
    const Quaternion alpha = inv(omega) * delta;
    const Quaternion alpha_s = conj(delta * inv(omega));
    axpy(x, p, alpha);
    axpy(r, ap, -alpha);
    op.apply_adjoint(ps, atps);
    axpy(rs, atps, -alpha_s);

    double rr = norm(r) / drv.beta0;
    if (!std::isfinite(rr))
    {
      return drv.finish(iter, Termination::breakdown, "non-finite residual", 0);
    }
    drv.record(iter, rr, HistoryEntry{});
    if (rr <= opts.tol || drv.due_for_recompute(iter))
    {
      const QVector r_saved = r;
      const double fresh = drv.recompute();
      drv.note_true_rr(drv.true_rr());
      if (fresh <= opts.tol)
      {
        return drv.finish(iter, Termination::converged, "converged", 0);
      }
      // keep the recurrence residual so the biorthogonality of r and r~ is undisturbed
      r = r_saved;
    }

    const Quaternion delta_next = inner(r, rs);
    if (abs(delta_next) <= tiny * norm(r) * norm(rs))
    {
      return drv.finish(iter, Termination::breakdown, "<r, r~> vanished", 0);
    }
    const Quaternion beta = inv(delta) * delta_next;
    const Quaternion beta_s = conj(delta_next * inv(delta));
    // p = r + p beta, p~ = r~ + p~ beta~
    for (std::size_t i = 0; i < p.size(); ++i)
    {
      p[i] = r[i] + p[i] * beta;
      ps[i] = rs[i] + ps[i] * beta_s;
    }
    delta = delta_next;
  }
  return drv.finish(opts.max_iter, Termination::max_iter, "iteration limit reached", 0);
}

/// Checks ||r_m|| <= sqrt(m+1) |g12^(1) ... g12^(m)| ||r_0|| and the weaker
/// ||r_m|| <= sqrt(m+1) |gamma_{m+1}| at every recorded step, with `slack`
/// relative and `floor` absolute (in units of ||r_0||) roundoff allowance.
/// m counts steps within the current Krylov cycle. Needs record_history.
inline bool check_residual_envelope(const SolveReport &report, double slack = 1.1, double floor = 1e-13)
{
  double product = 1.0;
  for (const auto &h : report.history)
  {
    if (std::isnan(h.g12))
    {
      return false;  // no rotation stream recorded
    }
    if (h.cycle_step == 1)
    {
      product = 1.0;
    }
    product *= h.g12;
    const double root = std::sqrt(static_cast<double>(h.cycle_step) + 1.0);
    const double by_product = root * product * h.cycle_beta;
    const double by_gamma = root * h.quasi_rr;
    if (h.rr > slack * by_product + floor || h.rr > slack * by_gamma + floor)
    {
      return false;
    }
  }
  return true;
}

}  // namespace qqmr
