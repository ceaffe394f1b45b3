#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "dense.hpp"
#include "errors.hpp"
#include "operator.hpp"
#include "qvector.hpp"

namespace qqmr
{

/// Thresholds for the biconjugate orthonormalization processes.
///
/// A near-breakdown is flagged when |sigma| (or |l|) drops below
/// `sigma_tol * max(1, largest |sigma| seen)` (resp. `l_tol * max(1, largest |l| seen)`).
/// A lucky breakdown is flagged when rho_{j+1} <= lucky_tol * ||A v_j||.
struct BreakdownPolicy
{
  double sigma_tol = std::sqrt(std::numeric_limits<double>::epsilon());
  double l_tol = std::sqrt(std::numeric_limits<double>::epsilon());
  double lucky_tol = 1e-13;
  int max_restarts = 20;
};

enum class BioStatus
{
  ok,
  lucky_breakdown,  ///< rho_{j+1} vanished: the Krylov space is A-invariant
  near_breakdown,   ///< |sigma_{j+1}| or |l_j| below threshold
  serious_breakdown ///< eps_{j+1} vanished or a non-finite value appeared
};

inline const char *to_string(BioStatus s)
{
  switch (s)
  {
  case BioStatus::ok:
    return "ok";
  case BioStatus::lucky_breakdown:
    return "lucky_breakdown";
  case BioStatus::near_breakdown:
    return "near_breakdown";
  case BioStatus::serious_breakdown:
    return "serious_breakdown";
  }
  return "unknown";
}

namespace detail
{
inline QVector unit(QVector v, const char *what)
{
  const double n = norm(v);
  if (n == 0.0)
  {
    throw usage_error(std::string(what) + ": starting vector is zero");
  }
  scale(v, 1.0 / n);
  return v;
}

inline void check_square(const QLinearOperator &a, std::size_t n)
{
  if (a.rows() != a.cols())
  {
    throw usage_error("operator must be square");
  }
  detail::check_same_size(n, a.rows(), "starting vector");
}

inline bool finite(const Quaternion &q)
{
  return std::isfinite(q.w) && std::isfinite(q.x) && std::isfinite(q.y) && std::isfinite(q.z);
}
}  // namespace detail

/// Quaternion Lanczos biorthogonalization (<v_i, w_j> = delta_ij), the
/// substrate of the BiCG-type methods. Keeps the whole basis.
class LanczosBiorthogonalization
{
public:
  struct Step
  {
    Quaternion alpha;     ///< alpha_j = <A v_j, w_j>
    double sigma_next;    ///< sigma_{j+1} = |<vbar, wbar>|^{1/2}
    Quaternion beta_next; ///< beta_{j+1} = <vbar, wbar> sigma_{j+1}^{-1}
    bool breakdown = false;
  };

  /// Requires <v1, w1> = 1.
  LanczosBiorthogonalization(const QLinearOperator &a, QVector v1, QVector w1) : a_(a)
  {
    detail::check_square(a, v1.size());
    detail::check_same_size(v1.size(), w1.size(), "starting vectors");
    const Quaternion s = inner(v1, w1);
    if (abs(s - Quaternion(1.0)) > 1e-12)
    {
      throw usage_error("Lanczos biorthogonalization needs <v1, w1> = 1");
    }
    v_.push_back(std::move(v1));
    w_.push_back(std::move(w1));
  }

  /// One pass of the recurrence. Returns breakdown=true (and adds no
  /// vectors) when sigma_{j+1} vanishes.
  Step step()
  {
    if (broken_)
    {
      throw breakdown_error("Lanczos biorthogonalization already broke down");
    }
    const std::size_t j = v_.size() - 1;
    const QVector &v = v_[j];
    const QVector &w = w_[j];
    QVector vbar = a_.apply(v);
    QVector wbar = a_.apply_adjoint(w);
    const double scale_vw = norm(vbar) * norm(wbar);
    Step s;
    s.alpha = inner(vbar, w);
    axpy(vbar, v, -s.alpha);
    axpy(wbar, w, -conj(s.alpha));
    if (j > 0)
    {
      axpy(vbar, v_[j - 1], -beta_);
      axpy(wbar, w_[j - 1], -Quaternion(sigma_));
    }
    const Quaternion vw = inner(vbar, wbar);
    s.sigma_next = std::sqrt(abs(vw));
    // <vbar, wbar> at roundoff level relative to |A v| |A^* w| counts as zero
    if (abs(vw) <= std::numeric_limits<double>::epsilon() * scale_vw)
    {
      s.breakdown = true;
      broken_ = true;
      steps_.push_back(s);
      return s;
    }
    s.beta_next = vw / s.sigma_next;
    wbar = times(wbar, inv_conj(s.beta_next));
    scale(vbar, 1.0 / s.sigma_next);
    v_.push_back(std::move(vbar));
    w_.push_back(std::move(wbar));
    beta_ = s.beta_next;
    sigma_ = s.sigma_next;
    steps_.push_back(s);
    return s;
  }

  const std::vector<QVector> &v_basis() const { return v_; }
  const std::vector<QVector> &w_basis() const { return w_; }
  const std::vector<Step> &steps() const { return steps_; }

private:
  const QLinearOperator &a_;
  std::vector<QVector> v_;
  std::vector<QVector> w_;
  std::vector<Step> steps_;
  Quaternion beta_;
  double sigma_ = 0.0;
  bool broken_ = false;
};

/// Coefficients produced by one step j of the three-term process.
struct ThreeTermStep
{
  std::size_t j = 0;
  Quaternion sigma;      ///< sigma_j = <v_j, w_j>
  Quaternion alpha;      ///< sigma_j^{-1} <A v_j, w_j>
  Quaternion alpha_bar;  ///< sigma_j^{-*} <A v_j, w_j>^*
  Quaternion tau;        ///< tau_j (0 for j = 1)
  double rho_next = 0;   ///< ||vbar_{j+1}||
  double eps_next = 0;   ///< ||wbar_{j+1}||
  Quaternion sigma_next; ///< <v_{j+1}, w_{j+1}>
  Quaternion tau_next;   ///< eps_{j+1} sigma_j^{-1} sigma_{j+1}
  BioStatus status = BioStatus::ok;
};

/// Coefficients produced by one step j of the coupled two-term process.
struct TwoTermStep
{
  std::size_t j = 0;
  Quaternion sigma;      ///< sigma_j
  Quaternion mu;         ///< eps_j l_{j-1}^{-1} sigma_j (superdiagonal of U; 0 for j = 1)
  Quaternion l;          ///< l_j = <A p_j, q_j>
  Quaternion tau1;       ///< sigma_j^{-1} l_j (diagonal of L)
  double rho_next = 0;
  double eps_next = 0;
  Quaternion sigma_next;
  BioStatus status = BioStatus::ok;
};

namespace detail
{
/// State shared by the two processes: the current and previous v/w pair,
/// restart bookkeeping and running magnitudes for relative thresholds.
class BioBase
{
public:
  std::size_t n() const { return v_.size(); }
  /// Index j of the current pair v_j, w_j (1-based, restarts reset to 1).
  std::size_t index() const { return j_; }
  const QVector &v() const { return v_; }
  const QVector &w() const { return w_; }
  const QVector &v_prev() const { return v_prev_; }
  const QVector &w_prev() const { return w_prev_; }
  const Quaternion &sigma() const { return sigma_; }
  BioStatus status() const { return status_; }
  int restarts() const { return restarts_; }
  const BreakdownPolicy &policy() const { return policy_; }

  bool keeps_basis() const { return keep_basis_; }
  /// v_1 .. v_{j} (only with keep_basis).
  const std::vector<QVector> &v_basis() const { return v_hist_; }
  const std::vector<QVector> &w_basis() const { return w_hist_; }

  double sigma_threshold() const { return policy_.sigma_tol * std::max(1.0, max_sigma_); }
  double l_threshold() const { return policy_.l_tol * std::max(1.0, max_l_); }

protected:
  BioBase(const QLinearOperator &a, QVector v1, QVector w1, BreakdownPolicy policy, bool keep_basis)
    : a_(a), policy_(policy), keep_basis_(keep_basis)
  {
    if (policy_.sigma_tol <= 0 || policy_.l_tol <= 0 || policy_.lucky_tol < 0 ||
        policy_.max_restarts < 0)
    {
      throw usage_error("BreakdownPolicy: tolerances must be positive");
    }
    detail::check_square(a, v1.size());
    detail::check_same_size(v1.size(), w1.size(), "starting vectors");
    seed(detail::unit(std::move(v1), "v1"), detail::unit(std::move(w1), "w1"));
    if (sigma_ == Quaternion{})
    {
      throw usage_error("starting vectors must satisfy <v1, w1> != 0");
    }
  }

  void seed(QVector v1, QVector w1)
  {
    v_ = std::move(v1);
    w_ = std::move(w1);
    v_prev_.assign(v_.size(), Quaternion{});
    w_prev_.assign(w_.size(), Quaternion{});
    sigma_ = inner(v_, w_);
    sigma_prev_ = Quaternion{};
    rho_ = 0.0;
    eps_ = 1.0;  // never consumed at j = 1
    j_ = 1;
    max_sigma_ = std::max(max_sigma_, abs(sigma_));
    status_ = abs(sigma_) < sigma_threshold() ? BioStatus::near_breakdown : BioStatus::ok;
    v_hist_.clear();
    w_hist_.clear();
    if (keep_basis_)
    {
      v_hist_.push_back(v_);
      w_hist_.push_back(w_);
    }
  }

  void check_can_step() const
  {
    if (status_ != BioStatus::ok)
    {
      throw breakdown_error(std::string("cannot continue after ") + to_string(status_));
    }
  }

  /// Normalizes vbar, wbar into the next pair and computes sigma_{j+1}.
  /// `av_norm` scales the lucky-breakdown test.
  void advance(QVector &vbar, QVector &wbar, double av_norm, double &rho_next, double &eps_next,
               Quaternion &sigma_next)
  {
    rho_next = norm(vbar);
    eps_next = norm(wbar);
    if (!std::isfinite(rho_next) || !std::isfinite(eps_next))
    {
      status_ = BioStatus::serious_breakdown;
    }
    else if (rho_next <= policy_.lucky_tol * av_norm)
    {
      status_ = BioStatus::lucky_breakdown;
    }
    else if (eps_next == 0.0)
    {
      status_ = BioStatus::serious_breakdown;
    }
    if (rho_next > 0.0)
    {
      scale(vbar, 1.0 / rho_next);
    }
    if (eps_next > 0.0)
    {
      scale(wbar, 1.0 / eps_next);
    }
    sigma_next = inner(vbar, wbar);
    if (status_ == BioStatus::ok)
    {
      max_sigma_ = std::max(max_sigma_, abs(sigma_next));
      if (abs(sigma_next) < sigma_threshold())
      {
        status_ = BioStatus::near_breakdown;
      }
    }
    v_prev_ = std::move(v_);
    w_prev_ = std::move(w_);
    v_ = std::move(vbar);
    w_ = std::move(wbar);
    sigma_prev_ = sigma_;
    sigma_ = sigma_next;
    rho_ = rho_next;
    eps_ = eps_next;
    ++j_;
    if (keep_basis_)
    {
      v_hist_.push_back(v_);
      w_hist_.push_back(w_);
    }
  }

  void bump_restarts()
  {
    if (++restarts_ > policy_.max_restarts)
    {
      throw breakdown_error("biconjugate orthonormalization: restart limit (" +
                            std::to_string(policy_.max_restarts) + ") exceeded");
    }
  }

  const QLinearOperator &a_;
  BreakdownPolicy policy_;
  bool keep_basis_;

  QVector v_, w_, v_prev_, w_prev_;
  Quaternion sigma_, sigma_prev_;
  double rho_ = 0.0;  // rho_j
  double eps_ = 1.0;  // eps_j
  std::size_t j_ = 1;
  BioStatus status_ = BioStatus::ok;
  int restarts_ = 0;
  double max_sigma_ = 0.0;
  double max_l_ = 0.0;
  std::vector<QVector> v_hist_, w_hist_;
};
}  // namespace detail

/// Three-term quaternion biconjugate orthonormalization: unit bases of
/// K(A, v1) and K(A^*, w1) with <v_i, w_j> = 0 for i != j and = sigma_j on
/// the diagonal, and A V_m = V_{m+1} H_{m+1,m} for a tridiagonal H with
/// nonnegative real subdiagonal.
class ThreeTermBio : public detail::BioBase
{
public:
  ThreeTermBio(const QLinearOperator &a, QVector v1, QVector w1, BreakdownPolicy policy = {},
               bool keep_basis = false)
    : BioBase(a, std::move(v1), std::move(w1), policy, keep_basis), av_(v_.size())
  {
  }

  /// Advances from (v_j, w_j) to (v_{j+1}, w_{j+1}). rho_{j+1} and eps_{j+1}
  /// are available in the returned record before any consumer needs them.
  ThreeTermStep step()
  {
    check_can_step();
    ThreeTermStep s;
    s.j = j_;
    s.sigma = sigma_;
    s.tau = tau_;

    a_.apply(v_, av_);
    const Quaternion avw = inner(av_, w_);
    s.alpha = inv(sigma_) * avw;
    s.alpha_bar = inv_conj(sigma_) * conj(avw);

    QVector vbar = av_;
    axpy(vbar, v_, -s.alpha);
    QVector wbar = a_.apply_adjoint(w_);
    axpy(wbar, w_, -s.alpha_bar);
    if (j_ > 1)
    {
      axpy(vbar, v_prev_, -tau_);
      axpy(wbar, w_prev_, -(rho_ * inv_conj(sigma_prev_) * conj(sigma_)));
    }
    const Quaternion sigma_j = sigma_;
    advance(vbar, wbar, norm(av_), s.rho_next, s.eps_next, s.sigma_next);
    s.tau_next = s.eps_next * inv(sigma_j) * s.sigma_next;
    tau_ = s.tau_next;
    s.status = status_;
    steps_.push_back(s);
    return s;
  }

  /// A v_j from the most recent step.
  const QVector &last_av() const { return av_; }

  /// Coefficients since the last (re)start.
  const std::vector<ThreeTermStep> &steps() const { return steps_; }

  /// Reseeds with the given pair; throws breakdown_error past max_restarts.
  void restart(QVector v1, QVector w1)
  {
    bump_restarts();
    seed(detail::unit(std::move(v1), "restart v1"), detail::unit(std::move(w1), "restart w1"));
    tau_ = Quaternion{};
    steps_.clear();
  }

  /// On a near or serious breakdown, reseeds with the last good pair
  /// (v_j, w_j) and returns true; otherwise leaves the state untouched.
  bool restart_if_needed()
  {
    if (status_ != BioStatus::near_breakdown && status_ != BioStatus::serious_breakdown)
    {
      return false;
    }
    const bool have_prev = norm(v_prev_) > 0.0;
    QVector v1 = have_prev ? v_prev_ : v_;
    QVector w1 = have_prev ? w_prev_ : w_;
    restart(std::move(v1), std::move(w1));
    return true;
  }

private:
  QVector av_;
  Quaternion tau_;
  std::vector<ThreeTermStep> steps_;
};

/// Coupled two-term quaternion biconjugate orthonormalization. Produces the
/// same v/w bases as ThreeTermBio in exact arithmetic together with
/// A-biorthogonal direction vectors p_j, q_j (<A p_k, q_j> = l_k delta_kj).
class TwoTermBio : public detail::BioBase
{
public:
  TwoTermBio(const QLinearOperator &a, QVector v1, QVector w1, BreakdownPolicy policy = {},
             bool keep_basis = false)
    : BioBase(a, std::move(v1), std::move(w1), policy, keep_basis), ap_(v_.size())
  {
  }

  TwoTermStep step()
  {
    check_can_step();
    TwoTermStep s;
    s.j = j_;
    s.sigma = sigma_;

    if (j_ == 1)
    {
      p_ = v_;
      q_ = w_;
    }
    else
    {
      s.mu = eps_ * inv(l_prev_) * sigma_;
      const Quaternion nu = rho_ * inv_conj(l_prev_) * conj(sigma_);
      QVector p = v_;
      axpy(p, p_, -s.mu);
      QVector q = w_;
      axpy(q, q_, -nu);
      p_ = std::move(p);
      q_ = std::move(q);
    }
    if (keep_basis_)
    {
      p_hist_.push_back(p_);
      q_hist_.push_back(q_);
    }

    a_.apply(p_, ap_);
    s.l = inner(ap_, q_);
    s.tau1 = inv(sigma_) * s.l;
    max_l_ = std::max(max_l_, abs(s.l));

    QVector vbar = ap_;
    axpy(vbar, v_, -s.tau1);
    QVector wbar = a_.apply_adjoint(q_);
    axpy(wbar, w_, -(inv_conj(sigma_) * conj(s.l)));

    advance(vbar, wbar, norm(ap_), s.rho_next, s.eps_next, s.sigma_next);
    if (status_ == BioStatus::ok && abs(s.l) < l_threshold())
    {
      status_ = BioStatus::near_breakdown;
    }
    l_prev_ = s.l;
    s.status = status_;
    steps_.push_back(s);
    return s;
  }

  /// p_j and A p_j from the most recent step.
  const QVector &p() const { return p_; }
  const QVector &q() const { return q_; }
  const QVector &last_ap() const { return ap_; }

  const std::vector<TwoTermStep> &steps() const { return steps_; }
  const std::vector<QVector> &p_basis() const { return p_hist_; }
  const std::vector<QVector> &q_basis() const { return q_hist_; }

  void restart(QVector v1, QVector w1)
  {
    bump_restarts();
    seed(detail::unit(std::move(v1), "restart v1"), detail::unit(std::move(w1), "restart w1"));
    l_prev_ = Quaternion{};
    p_.clear();
    q_.clear();
    p_hist_.clear();
    q_hist_.clear();
    steps_.clear();
  }

  bool restart_if_needed()
  {
    if (status_ != BioStatus::near_breakdown && status_ != BioStatus::serious_breakdown)
    {
      return false;
    }
    const bool have_prev = norm(v_prev_) > 0.0;
    QVector v1 = have_prev ? v_prev_ : v_;
    QVector w1 = have_prev ? w_prev_ : w_;
    restart(std::move(v1), std::move(w1));
    return true;
  }

private:
  QVector p_, q_, ap_;
  Quaternion l_prev_;
  std::vector<TwoTermStep> steps_;
  std::vector<QVector> p_hist_, q_hist_;
};

// Dense assembly of the projected matrices, for diagnostics and tests.

/// H_{m+1,m}: diagonal alpha_j, superdiagonal tau_{j+1}, subdiagonal rho_{j+1}.
inline QDenseMatrix assemble_h(const std::vector<ThreeTermStep> &steps)
{
  const std::size_t m = steps.size();
  QDenseMatrix h(m + 1, m);
  for (std::size_t c = 0; c < m; ++c)
  {
    h(c, c) = steps[c].alpha;
    h(c + 1, c) = steps[c].rho_next;
    if (c > 0)
    {
      h(c - 1, c) = steps[c].tau;
    }
  }
  return h;
}

/// Hbar_{m+1,m}: diagonal alpha_bar_j, superdiagonal eps_l sigma_{l-1}^{-*} sigma_l^*,
/// subdiagonal rho_{j+1}.
inline QDenseMatrix assemble_h_bar(const std::vector<ThreeTermStep> &steps)
{
  const std::size_t m = steps.size();
  QDenseMatrix h(m + 1, m);
  for (std::size_t c = 0; c < m; ++c)
  {
    h(c, c) = steps[c].alpha_bar;
    h(c + 1, c) = steps[c].rho_next;
    if (c > 0)
    {
      h(c - 1, c) = steps[c - 1].eps_next * inv_conj(steps[c - 1].sigma) * conj(steps[c].sigma);
    }
  }
  return h;
}

/// Gamma_k = diag(s_1..s_k), s_1 = 1, s_i = s_{i-1} rho_i / eps_i.
inline std::vector<double> gamma_scaling(const std::vector<double> &rho, const std::vector<double> &eps,
                                         std::size_t k)
{
  std::vector<double> s(k, 1.0);
  for (std::size_t i = 1; i < k; ++i)
  {
    s[i] = s[i - 1] * rho[i - 1] / eps[i - 1];
  }
  return s;
}

/// L_{m+1,m}: diagonal sigma_j^{-1} l_j, subdiagonal rho_{j+1}.
inline QDenseMatrix assemble_l(const std::vector<TwoTermStep> &steps)
{
  const std::size_t m = steps.size();
  QDenseMatrix l(m + 1, m);
  for (std::size_t c = 0; c < m; ++c)
  {
    l(c, c) = steps[c].tau1;
    l(c + 1, c) = steps[c].rho_next;
  }
  return l;
}

/// U_m: unit upper bidiagonal with superdiagonal mu_j = eps_j l_{j-1}^{-1} sigma_j.
inline QDenseMatrix assemble_u(const std::vector<TwoTermStep> &steps)
{
  const std::size_t m = steps.size();
  QDenseMatrix u = QDenseMatrix::identity(m);
  for (std::size_t c = 1; c < m; ++c)
  {
    u(c - 1, c) = steps[c].mu;
  }
  return u;
}

/// Frobenius residuals of the four matrix relations satisfied by the
/// three-term process after m steps.
struct BioRelationResiduals
{
  double biorthogonality = 0;  ///< ||W_m^* V_m - D_m||
  double forward = 0;          ///< ||A V_m - V_{m+1} H_{m+1,m}||
  double adjoint = 0;          ///< ||A^* W_m - W_{m+1} Gamma_{m+1}^{-1} Hbar_{m+1,m} Gamma_m||
  double projected = 0;        ///< ||W_m^* A V_m - D_m H_m||
  double max() const { return std::max({biorthogonality, forward, adjoint, projected}); }
};

/// Requires a ThreeTermBio constructed with keep_basis = true and at least
/// one completed step since the last restart.
inline BioRelationResiduals verify_bio_relations(const QLinearOperator &a, const ThreeTermBio &bio)
{
  if (!bio.keeps_basis())
  {
    throw usage_error("verify_bio_relations needs keep_basis = true");
  }
  const auto &steps = bio.steps();
  const std::size_t m = steps.size();
  if (m == 0)
  {
    throw usage_error("verify_bio_relations needs at least one step");
  }
  const auto &vb = bio.v_basis();
  const auto &wb = bio.w_basis();
  const std::vector<QVector> vm(vb.begin(), vb.begin() + static_cast<std::ptrdiff_t>(m));
  const std::vector<QVector> wm(wb.begin(), wb.begin() + static_cast<std::ptrdiff_t>(m));
  const QDenseMatrix v = QDenseMatrix::from_columns(vm);
  const QDenseMatrix w = QDenseMatrix::from_columns(wm);
  const QDenseMatrix v1 = QDenseMatrix::from_columns(vb);
  const QDenseMatrix w1 = QDenseMatrix::from_columns(wb);

  std::vector<QVector> av, atw;
  for (std::size_t c = 0; c < m; ++c)
  {
    av.push_back(a.apply(vm[c]));
    atw.push_back(a.apply_adjoint(wm[c]));
  }
  const QDenseMatrix amv = QDenseMatrix::from_columns(av);
  const QDenseMatrix atwm = QDenseMatrix::from_columns(atw);

  QDenseMatrix d(m, m);
  for (std::size_t c = 0; c < m; ++c)
  {
    d(c, c) = steps[c].sigma;
  }
  const QDenseMatrix h = assemble_h(steps);
  QDenseMatrix hm(m, m);
  for (std::size_t i = 0; i < m; ++i)
  {
    for (std::size_t c = 0; c < m; ++c)
    {
      hm(i, c) = h(i, c);
    }
  }

  std::vector<double> rho, eps;
  for (const auto &s : steps)
  {
    rho.push_back(s.rho_next);
    eps.push_back(s.eps_next);
  }
  const auto s = gamma_scaling(rho, eps, m + 1);
  QDenseMatrix scaled = assemble_h_bar(steps);
  for (std::size_t i = 0; i < m + 1; ++i)
  {
    for (std::size_t c = 0; c < m; ++c)
    {
      scaled(i, c) = scaled(i, c) * (s[c] / s[i]);
    }
  }

  BioRelationResiduals r;
  r.biorthogonality = (w.adjoint() * v - d).frobenius_norm();
  r.forward = (amv - v1 * h).frobenius_norm();
  r.adjoint = (atwm - w1 * scaled).frobenius_norm();
  r.projected = (w.adjoint() * amv - d * hm).frobenius_norm();
  return r;
}

}  // namespace qqmr
