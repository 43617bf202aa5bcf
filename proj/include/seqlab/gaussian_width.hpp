#ifndef SEQLAB_GAUSSIAN_WIDTH_HPP
#define SEQLAB_GAUSSIAN_WIDTH_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <utility>
#include <vector>

#include "convex_geometry.hpp"
#include "core.hpp"
#include "estimator.hpp"
#include "penalties.hpp"

namespace seqlab {

/// A reproducible batch of standard Gaussian vectors. Member i is drawn from
/// its own generator seeded with derive_seed(seed, i).
struct NoiseBatch {
  std::uint64_t seed = 0;
  std::size_t count = 0;
  std::size_t dim = 0;

  Vector member(std::size_t i) const {
    std::mt19937_64 gen(derive_seed(seed, static_cast<std::uint64_t>(i)));
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector z(dim);
    for (double& v : z) v = normal(gen);
    return z;
  }

  std::vector<Vector> materialize() const {
    if (count == 0 || dim == 0) throw DomainError("NoiseBatch: count and dim must be positive");
    return parallel_map<Vector>(count, [this](std::size_t i) { return member(i); });
  }
};

struct InnerSup {
  double value = 0.0;
  Vector argmax;
  bool converged = true;
};

/// sup { <z, a - theta> - f(a) : a in set, ||a - theta|| <= t }.
///
/// The ball constraint is handled through its multiplier: with s = 1/mu,
/// a(s) = argmin_{a in set} 1/2 ||a - theta - s z||^2 + s f(a) moves away from
/// theta monotonically in s, and a root search puts ||a(s) - theta|| on t.
/// When the distance saturates below t the ball is inactive and a(s) for the
/// largest s is returned.
inline InnerSup inner_sup(const Vector& z, const Vector& theta, double t, const ConstraintSet& set,
                          const PenaltySpec& f, const SolveOptions& opts = {}) {
  require_dim("inner_sup: z", theta.size(), z.size());
  require_dim("inner_sup: theta", set.dim(), theta.size());
  if (!(t >= 0.0)) throw DomainError("inner_sup: t must be nonnegative");
  const double f_theta = penalty_value(f, theta);
  if (t == 0.0) return {-f_theta, theta, true};

  bool all_converged = true;
  auto point_at = [&](double s) {
    Solution sol = solve_penalized_lse(set, f.scaled(s), axpy(theta, s, z), opts);
    all_converged = all_converged && sol.converged;
    return std::move(sol.point);
  };
  auto finish = [&](Vector a) {
    InnerSup r;
    r.value = dot(z, a - theta) - penalty_value(f, a);
    r.argmax = std::move(a);
    r.converged = all_converged;
    // Never report less than the feasible point theta itself.
    if (r.value < -f_theta) {
      r.value = -f_theta;
      r.argmax = theta;
    }
    return r;
  };

  constexpr double kMaxScale = 1e13;
  double s_lo = 0.0, s_hi = 1.0;
  Vector a_lo = theta;
  double g_lo = -t;
  Vector a_hi = point_at(s_hi);
  double g_hi = dist2(a_hi, theta) - t;
  while (g_hi < 0.0) {
    s_lo = s_hi;
    a_lo = std::move(a_hi);
    g_lo = g_hi;
    if (s_hi >= kMaxScale) return finish(std::move(a_lo));
    s_hi *= 4.0;
    a_hi = point_at(s_hi);
    g_hi = dist2(a_hi, theta) - t;
  }
  if (g_hi == 0.0) return finish(std::move(a_hi));

  // Illinois regula falsi on g(s) = ||a(s) - theta|| - t, keeping a feasible
  // lower end.
  const double gap_tol = 1e-13 * std::max(1.0, t);
  int side = 0;
  for (int it = 0; it < 200; ++it) {
    if (-g_lo <= gap_tol || (s_hi - s_lo) <= 1e-15 * s_hi) break;
    double s = (s_lo * g_hi - s_hi * g_lo) / (g_hi - g_lo);
    if (!(s > s_lo && s < s_hi)) s = 0.5 * (s_lo + s_hi);
    Vector a = point_at(s);
    const double g = dist2(a, theta) - t;
    if (g < 0.0) {
      s_lo = s;
      a_lo = std::move(a);
      g_lo = g;
      if (side == -1) g_hi *= 0.5;
      side = -1;
    } else {
      s_hi = s;
      a_hi = std::move(a);
      g_hi = g;
      if (g == 0.0) return finish(std::move(a_hi));
      if (side == 1) g_lo *= 0.5;
      side = 1;
    }
  }
  return finish(std::move(a_lo));
}

struct WidthEstimate {
  double mean = 0.0;
  double se = 0.0;
  std::size_t failures = 0;
};

/// Monte-Carlo evaluator of m(t) and G(t) = m(t) - t^2/2 at a fixed theta, over
/// one fixed noise batch (common random numbers across t).
class WidthEvaluator {
 public:
  WidthEvaluator(Vector theta, ConstraintSet set, PenaltySpec f, const NoiseBatch& batch,
                 SolveOptions opts = {})
      : theta_(std::move(theta)),
        set_(std::move(set)),
        f_(std::move(f)),
        batch_(batch),
        opts_(opts),
        f_theta_(0.0) {
    require_dim("WidthEvaluator: theta", set_.dim(), theta_.size());
    require_dim("WidthEvaluator: batch", set_.dim(), batch.dim);
    if (!contains(set_, theta_, 1e-6)) throw DomainError("WidthEvaluator: theta must lie in the set");
    f_theta_ = penalty_value(f_, theta_);
    noise_ = batch_.materialize();
  }

  /// Per-member inner suprema at radius t.
  std::vector<InnerSup> evaluate(double t) const {
    return parallel_map<InnerSup>(noise_.size(), [&](std::size_t i) {
      return inner_sup(noise_[i], theta_, t, set_, f_, opts_);
    });
  }

  WidthEstimate m(double t) const {
    if (t == 0.0) return {-f_theta_, 0.0, 0};
    const auto sups = evaluate(t);
    std::vector<double> vals(sups.size());
    WidthEstimate out;
    for (std::size_t i = 0; i < sups.size(); ++i) {
      vals[i] = sups[i].value;
      if (!sups[i].converged) ++out.failures;
    }
    const MeanStderr ms = mean_stderr(vals);
    out.mean = ms.mean;
    out.se = ms.se;
    return out;
  }

  double G(double t) const { return m(t).mean - 0.5 * t * t; }

  const Vector& theta() const { return theta_; }
  const ConstraintSet& set() const { return set_; }
  const PenaltySpec& penalty() const { return f_; }
  const NoiseBatch& batch() const { return batch_; }
  const std::vector<Vector>& noise() const { return noise_; }
  const SolveOptions& options() const { return opts_; }

 private:
  Vector theta_;
  ConstraintSet set_;
  PenaltySpec f_;
  NoiseBatch batch_;
  SolveOptions opts_;
  double f_theta_;
  std::vector<Vector> noise_;
};

inline WidthEstimate estimate_m(const Vector& theta, double t, const ConstraintSet& set,
                                const PenaltySpec& f, const NoiseBatch& batch,
                                const SolveOptions& opts = {}) {
  if (!(t >= 0.0)) throw DomainError("estimate_m: t must be nonnegative");
  return WidthEvaluator(theta, set, f, batch, opts).m(t);
}

struct WidthProfile {
  Vector theta;
  Vector tgrid;
  Vector m_hat;
  Vector se;
  NoiseBatch batch;
  std::size_t failures = 0;
};

inline WidthProfile width_profile(const WidthEvaluator& eval, const Vector& tgrid) {
  for (std::size_t i = 0; i < tgrid.size(); ++i) {
    if (!(tgrid[i] >= 0.0)) throw DomainError("width_profile: t values must be nonnegative");
    if (i > 0 && !(tgrid[i] > tgrid[i - 1])) throw DomainError("width_profile: tgrid must increase");
  }
  WidthProfile p{eval.theta(), tgrid, {}, {}, eval.batch(), 0};
  for (double t : tgrid) {
    const WidthEstimate e = eval.m(t);
    p.m_hat.push_back(e.mean);
    p.se.push_back(e.se);
    p.failures += e.failures;
  }
  return p;
}

struct TThetaResult {
  double t_theta = 0.0;
  double G_at_max = 0.0;
  double lo = 0.0, hi = 0.0;  // final search bracket
  double se = 0.0;
  double m_at_max = 0.0;
  double m_se = 0.0;  // standard error of m-hat at t_theta
  double t_max = 0.0;
  int evaluations = 0;
  std::size_t failures = 0;
};

struct TThetaOptions {
  double rel_width = 1e-3;  // golden-section stops at rel_width * max(1, T_max)
  double initial_t = 1.0;
  int max_doublings = 60;
};

/// Maximizer of the sample G(t) = m-hat(t) - t^2/2 over t >= 0.
///
/// Over a fixed batch every per-noise inner supremum is concave in t, so the
/// sample G is concave and golden-section search is valid. The upper end is
/// found by doubling until G drops on two consecutive doublings, capped at the
/// set's diameter (m is constant past it). The reported se is the half-width of
/// the region where G stays within one standard error of m-hat of its maximum.
inline TThetaResult find_t_theta(const WidthEvaluator& eval, const TThetaOptions& topts = {}) {
  TThetaResult r;
  std::vector<std::pair<double, WidthEstimate>> seen;
  auto G = [&](double t) {
    for (const auto& [tt, e] : seen)
      if (tt == t) return e.mean - 0.5 * t * t;
    WidthEstimate e = eval.m(t);
    r.failures += e.failures;
    ++r.evaluations;
    seen.emplace_back(t, e);
    return e.mean - 0.5 * t * t;
  };

  const double cap = eval.set().diameter();
  if (cap == 0.0) {
    r.G_at_max = G(0.0);
    r.m_at_max = r.G_at_max;
    return r;
  }

  // Bracket.
  double hi = 0.0;
  {
    double prev = G(0.0);
    int drops = 0;
    double t = std::min(topts.initial_t, cap);
    for (int k = 0;; ++k) {
      const double g = G(t);
      drops = g < prev ? drops + 1 : 0;
      prev = g;
      if (drops >= 2 || t >= cap) {
        hi = t;
        break;
      }
      if (k >= topts.max_doublings)
        throw Error("find_t_theta: G still increasing at t = " + std::to_string(t) +
                    " (bracket failure)");
      t = std::min(2.0 * t, cap);
    }
  }
  r.t_max = hi;

  // Golden section on [0, hi].
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  const double width = topts.rel_width * std::max(1.0, hi);
  double a = 0.0, b = hi;
  double c = b - invphi * (b - a), d = a + invphi * (b - a);
  double gc = G(c), gd = G(d);
  while (b - a > width) {
    if (gc >= gd) {
      b = d;
      d = c;
      gd = gc;
      c = b - invphi * (b - a);
      gc = G(c);
    } else {
      a = c;
      c = d;
      gc = gd;
      d = a + invphi * (b - a);
      gd = G(d);
    }
  }
  G(a);
  G(b);
  r.lo = a;
  r.hi = b;
  r.G_at_max = -std::numeric_limits<double>::infinity();
  for (const auto& [t, e] : seen) {
    if (t < a || t > b) continue;
    const double g = e.mean - 0.5 * t * t;
    if (g > r.G_at_max) {
      r.G_at_max = g;
      r.t_theta = t;
      r.m_at_max = e.mean;
      r.m_se = e.se;
    }
  }

  // Standard error from the flatness of G around its peak.
  if (r.m_se > 0.0) {
    const double level = r.G_at_max - r.m_se;
    auto crossing = [&](double inside, double outside) {
      const double stop = 1e-2 * std::abs(outside - inside);
      for (int it = 0; it < 40 && std::abs(outside - inside) > stop; ++it) {
        const double mid = 0.5 * (inside + outside);
        (G(mid) >= level ? inside : outside) = mid;
      }
      return 0.5 * (inside + outside);
    };
    double left = 0.0;
    if (G(0.0) < level) left = crossing(r.t_theta, 0.0);
    double right = r.t_theta + std::max(1e-3, r.t_theta);
    int guard = 0;
    while (G(right) >= level && guard++ < 60) right = r.t_theta + 2.0 * (right - r.t_theta);
    right = crossing(r.t_theta, right);
    r.se = 0.5 * (right - left);
  }
  return r;
}

inline TThetaResult find_t_theta(const Vector& theta, const ConstraintSet& set, const PenaltySpec& f,
                                 const NoiseBatch& batch, const SolveOptions& opts = {},
                                 const TThetaOptions& topts = {}) {
  return find_t_theta(WidthEvaluator(theta, set, f, batch, opts), topts);
}

/// Shape diagnostics of the fixed-batch width function on a t-grid. Violations
/// are reported as positive excesses; each must stay below its tolerance.
struct WidthShapeReport {
  Vector tgrid;
  Vector m_hat;
  TThetaResult ttheta;
  double monotone_violation = 0.0;
  double concavity_violation = 0.0;
  double tangent_violation = 0.0;         // m(t) <= m(t*) + t*(t - t*)
  double strong_concavity_violation = 0.0;  // G(t) - G(t*) <= -(t - t*)^2 / 2
  double shape_tol = 0.0;
  double search_slack = 0.0;
  std::size_t failures = 0;
  bool pass = false;
};

inline WidthShapeReport check_width_shape(const WidthEvaluator& eval, const Vector& tgrid,
                                          const TThetaOptions& topts = {}) {
  WidthShapeReport r;
  r.tgrid = tgrid;
  r.ttheta = find_t_theta(eval, topts);
  const WidthProfile p = width_profile(eval, tgrid);
  r.m_hat = p.m_hat;
  r.failures = p.failures + r.ttheta.failures;
  r.shape_tol = 10.0 * eval.options().tol;
  for (std::size_t i = 1; i < tgrid.size(); ++i) {
    if (tgrid[i] < tgrid[i - 1]) throw DomainError("check_width_shape: tgrid must be nondecreasing");
    r.monotone_violation = std::max(r.monotone_violation, p.m_hat[i - 1] - p.m_hat[i]);
  }
  for (std::size_t i = 1; i + 1 < tgrid.size(); ++i) {
    const double h0 = tgrid[i] - tgrid[i - 1], h1 = tgrid[i + 1] - tgrid[i];
    if (h0 <= 0.0 || h1 <= 0.0) continue;
    // Divided-difference form handles uneven grids.
    const double excess = (p.m_hat[i + 1] - p.m_hat[i]) / h1 - (p.m_hat[i] - p.m_hat[i - 1]) / h0;
    r.concavity_violation = std::max(r.concavity_violation, excess * std::min(h0, h1));
  }
  // t* is known only to the golden-section bracket, so both inequalities get
  // the first-order error of moving t* inside [lo, hi].
  const auto& tt = r.ttheta;
  const double w = tt.hi - tt.lo;
  r.search_slack = r.shape_tol + 2.0 * tt.t_theta * w + w * w;
  for (std::size_t i = 0; i < tgrid.size(); ++i) {
    const double t = tgrid[i], dt = t - tt.t_theta;
    r.tangent_violation = std::max(r.tangent_violation, p.m_hat[i] - tt.m_at_max - tt.t_theta * dt);
    const double g = p.m_hat[i] - 0.5 * t * t;
    r.strong_concavity_violation = std::max(r.strong_concavity_violation, g - tt.G_at_max + 0.5 * dt * dt);
  }
  r.pass = r.monotone_violation <= r.shape_tol && r.concavity_violation <= r.shape_tol &&
           r.tangent_violation <= r.search_slack && r.strong_concavity_violation <= r.search_slack &&
           r.failures == 0;
  return r;
}

}  // namespace seqlab

#endif  // SEQLAB_GAUSSIAN_WIDTH_HPP
