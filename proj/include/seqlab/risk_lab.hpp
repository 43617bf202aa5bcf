#ifndef SEQLAB_RISK_LAB_HPP
#define SEQLAB_RISK_LAB_HPP

#include <algorithm>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <cmath>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "core.hpp"
#include "estimator.hpp"
#include "gaussian_width.hpp"

namespace seqlab {

namespace estimators {
struct PenalizedLse {
  ConstraintSet set;
  PenaltySpec f;
};
struct Identity {};
struct Zero {};
struct JamesStein {};
struct Clip {
  double a;
};
}  // namespace estimators

class EstimatorSpec {
 public:
  using Kind = std::variant<estimators::PenalizedLse, estimators::Identity, estimators::Zero,
                            estimators::JamesStein, estimators::Clip>;

  static EstimatorSpec penalized_lse(ConstraintSet set, PenaltySpec f) {
    return EstimatorSpec(estimators::PenalizedLse{std::move(set), std::move(f)});
  }
  static EstimatorSpec identity() { return EstimatorSpec(estimators::Identity{}); }
  static EstimatorSpec zero() { return EstimatorSpec(estimators::Zero{}); }
  static EstimatorSpec james_stein() { return EstimatorSpec(estimators::JamesStein{}); }
  static EstimatorSpec clip(double a) {
    if (!(a > 0.0) || !std::isfinite(a)) throw DomainError("EstimatorSpec::clip: a must be positive");
    return EstimatorSpec(estimators::Clip{a});
  }

  const Kind& kind() const { return kind_; }

  std::string kind_name() const {
    return std::visit(detail::overloaded{[](const estimators::PenalizedLse&) { return "penalized_lse"; },
                                         [](const estimators::Identity&) { return "identity"; },
                                         [](const estimators::Zero&) { return "zero"; },
                                         [](const estimators::JamesStein&) { return "james_stein"; },
                                         [](const estimators::Clip&) { return "clip"; }},
                      kind_);
  }

  /// Throws unless the estimator is defined in dimension n.
  void check_dim(std::size_t n) const {
    if (const auto* p = std::get_if<estimators::PenalizedLse>(&kind_))
      require_dim("EstimatorSpec: penalized_lse", p->set.dim(), n);
    if (std::holds_alternative<estimators::JamesStein>(kind_) && n < 3)
      throw DomainError("EstimatorSpec: james_stein requires n >= 3");
    if (std::holds_alternative<estimators::Clip>(kind_) && n != 1)
      throw DomainError("EstimatorSpec: clip requires n = 1");
  }

 private:
  explicit EstimatorSpec(Kind k) : kind_(std::move(k)) {}
  Kind kind_;
};

struct EstimateResult {
  Vector point;
  bool converged = true;
};

inline EstimateResult apply_estimator(const EstimatorSpec& est, const Vector& x, const SolveOptions& opts = {}) {
  return std::visit(
      detail::overloaded{
          [&](const estimators::PenalizedLse& p) {
            Solution s = solve_penalized_lse(p.set, p.f, x, opts);
            return EstimateResult{std::move(s.point), s.converged};
          },
          [&](const estimators::Identity&) { return EstimateResult{x, true}; },
          [&](const estimators::Zero&) { return EstimateResult{Vector(x.size(), 0.0), true}; },
          [&](const estimators::JamesStein&) {
            const double nx = dot(x, x);
            if (nx == 0.0) return EstimateResult{x, true};
            return EstimateResult{(1.0 - static_cast<double>(x.size() - 2) / nx) * x, true};
          },
          [&](const estimators::Clip& c) {
            Vector out = x;
            for (double& v : out) v = std::clamp(v, -c.a, c.a);
            return EstimateResult{std::move(out), true};
          }},
      est.kind());
}

/// Right-hand side of the risk bound: t^2 + 2 sqrt(84) t min(sqrt t, 1) + 84 min(t, 1).
inline double risk_bound(double t) {
  if (!(t >= 0.0)) throw DomainError("risk_bound: t must be nonnegative");
  const double c = 2.0 * std::sqrt(84.0);
  return t * t + c * t * std::min(std::sqrt(t), 1.0) + 84.0 * std::min(t, 1.0);
}

inline double risk_bound_derivative(double t) {
  const double c = 2.0 * std::sqrt(84.0);
  return t < 1.0 ? 2.0 * t + 1.5 * c * std::sqrt(t) + 84.0 : 2.0 * t + c;
}

/// min(1, 2 exp(-delta^4 / (32 (t + delta)^2))).
inline double tail_bound(double t, double delta) {
  if (!(t >= 0.0) || !(delta >= 0.0)) throw DomainError("tail_bound: t and delta must be nonnegative");
  if (t + delta == 0.0) return 1.0;
  const double d2 = delta * delta;
  return std::min(1.0, 2.0 * std::exp(-d2 * d2 / (32.0 * (t + delta) * (t + delta))));
}

/// Bounds at or above this value are reported but never gate a check.
inline constexpr double kVacuousTailBound = 0.9;
/// Largest tolerated fraction of solver failures in a run.
inline constexpr double kMaxFailureFraction = 0.01;
inline constexpr double kSigmaSlack = 3.0;

struct RiskOptions {
  SolveOptions solve;
  std::size_t width_reps = 1000;
  TThetaOptions ttheta;
};

struct RiskReport {
  std::string estimator;
  Vector theta;
  double mean_sq_loss = 0.0;
  double se = 0.0;
  std::size_t reps = 0;
  std::size_t failures = 0;
  std::optional<double> t_theta_hat;
  double t_theta_se = 0.0;
  std::optional<double> bound_1co;
  double combined_se = 0.0;
  bool pass = false;
};

namespace detail {

struct LossSample {
  std::vector<double> losses;  // ||est(X) - theta||, failures excluded
  std::size_t failures = 0;
};

inline LossSample loss_sample(const EstimatorSpec& est, const Vector& theta, const NoiseBatch& batch,
                              const SolveOptions& opts) {
  auto results = parallel_map<std::optional<double>>(batch.count, [&](std::size_t i) -> std::optional<double> {
    const EstimateResult r = apply_estimator(est, theta + batch.member(i), opts);
    if (!r.converged) return std::nullopt;
    return dist2(r.point, theta);
  });
  LossSample s;
  s.losses.reserve(results.size());
  for (const auto& r : results) {
    if (r) s.losses.push_back(*r);
    else ++s.failures;
  }
  return s;
}

inline bool failures_ok(std::size_t failures, std::size_t reps) {
  return static_cast<double>(failures) <= kMaxFailureFraction * static_cast<double>(reps);
}

inline NoiseBatch risk_batch(std::uint64_t seed, std::size_t reps, std::size_t n) {
  return {derive_seed(seed, "risk"), reps, n};
}
inline NoiseBatch width_batch(std::uint64_t seed, std::size_t reps, std::size_t n) {
  return {derive_seed(seed, "width"), reps, n};
}

inline void check_theta(const ConstraintSet& set, const Vector& theta, const char* where) {
  require_dim(where, set.dim(), theta.size());
  if (!contains(set, theta, 1e-6)) throw DomainError(std::string(where) + ": theta must lie in the set");
}

}  // namespace detail

/// Monte-Carlo risk E ||est(X) - theta||^2. For penalized_lse the report also
/// carries the risk bound at the estimated t_theta; its standard error is
/// propagated into the pass slack through the bound's derivative.
inline RiskReport simulate_risk(const EstimatorSpec& est, const Vector& theta, std::size_t reps, std::uint64_t seed,
                                const RiskOptions& opts = {}) {
  if (reps < 2) throw DomainError("simulate_risk: reps must be >= 2");
  est.check_dim(theta.size());
  RiskReport r;
  r.estimator = est.kind_name();
  r.theta = theta;
  r.reps = reps;
  if (std::holds_alternative<estimators::Zero>(est.kind())) {
    r.mean_sq_loss = dot(theta, theta);
    r.pass = true;
    return r;
  }
  const auto* plse = std::get_if<estimators::PenalizedLse>(&est.kind());
  if (plse) detail::check_theta(plse->set, theta, "simulate_risk");

  const auto sample = detail::loss_sample(est, theta, detail::risk_batch(seed, reps, theta.size()), opts.solve);
  std::vector<double> sq(sample.losses.size());
  for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = sample.losses[i] * sample.losses[i];
  const MeanStderr ms = mean_stderr(sq);
  r.mean_sq_loss = ms.mean;
  r.se = ms.se;
  r.failures = sample.failures;
  r.combined_se = ms.se;
  r.pass = detail::failures_ok(r.failures, reps) && sq.size() >= 2;

  if (plse) {
    const auto tt = find_t_theta(theta, plse->set, plse->f, detail::width_batch(seed, opts.width_reps, theta.size()),
                                 opts.solve, opts.ttheta);
    r.t_theta_hat = tt.t_theta;
    r.t_theta_se = tt.se;
    r.bound_1co = risk_bound(tt.t_theta);
    r.combined_se = std::hypot(ms.se, risk_bound_derivative(tt.t_theta) * tt.se);
    r.failures += tt.failures;
    r.pass = r.pass && detail::failures_ok(tt.failures, opts.width_reps) &&
             r.mean_sq_loss <= *r.bound_1co + kSigmaSlack * r.combined_se;
  }
  return r;
}

inline RiskReport check_risk_bound(const ConstraintSet& set, const PenaltySpec& f, const Vector& theta,
                                   std::size_t reps, std::uint64_t seed, const RiskOptions& opts = {}) {
  return simulate_risk(EstimatorSpec::penalized_lse(set, f), theta, reps, seed, opts);
}

struct TailReport {
  Vector theta;
  double t_theta_hat = 0.0;
  double t_theta_se = 0.0;
  std::size_t reps = 0;
  std::size_t failures = 0;
  Vector deltas;
  Vector empirical;      // fraction of losses >= t_hat + delta
  Vector binomial_se;
  Vector bounds;         // tail_bound(t_hat, delta)
  Vector slack_bounds;   // bound after shrinking delta by 3 se(t_hat)
  std::vector<bool> informative;
  std::vector<bool> delta_pass;
  bool pass = false;
};

/// Empirical tail P{L >= t_hat + delta} against the concentration bound.
///
/// Since only t_hat is known, the event L >= t_hat + delta is read as a
/// deviation of delta - 3 se(t_hat) from the true t_theta, with the same
/// t + delta in the denominator. Deltas whose raw bound is vacuous pass.
inline TailReport check_tail_bound(const ConstraintSet& set, const PenaltySpec& f, const Vector& theta,
                                   const Vector& deltas, std::size_t reps, std::uint64_t seed,
                                   const RiskOptions& opts = {}) {
  if (reps < 2) throw DomainError("check_tail_bound: reps must be >= 2");
  detail::check_theta(set, theta, "check_tail_bound");
  for (double d : deltas)
    if (!(d >= 0.0)) throw DomainError("check_tail_bound: deltas must be nonnegative");
  const auto est = EstimatorSpec::penalized_lse(set, f);
  const auto tt = find_t_theta(theta, set, f, detail::width_batch(seed, opts.width_reps, theta.size()), opts.solve,
                               opts.ttheta);
  const auto sample = detail::loss_sample(est, theta, detail::risk_batch(seed, reps, theta.size()), opts.solve);

  TailReport r;
  r.theta = theta;
  r.t_theta_hat = tt.t_theta;
  r.t_theta_se = tt.se;
  r.reps = reps;
  r.failures = sample.failures + tt.failures;
  r.deltas = deltas;
  r.pass = detail::failures_ok(sample.failures, reps) && detail::failures_ok(tt.failures, opts.width_reps);
  const double n = static_cast<double>(sample.losses.size());
  for (double d : deltas) {
    const double level = tt.t_theta + d;
    const double hits = static_cast<double>(
        std::count_if(sample.losses.begin(), sample.losses.end(), [&](double l) { return l >= level; }));
    const double p = n > 0 ? hits / n : 0.0;
    const double bse = n > 0 ? std::sqrt(p * (1.0 - p) / n) : 0.0;
    const double raw = tail_bound(tt.t_theta, d);
    const double d_eff = std::max(0.0, d - kSigmaSlack * tt.se);
    double adj = 1.0;
    if (level > 0.0) {
      const double d2 = d_eff * d_eff;
      adj = std::min(1.0, 2.0 * std::exp(-d2 * d2 / (32.0 * level * level)));
    }
    const bool informative = raw < kVacuousTailBound;
    const bool ok = !informative || p <= adj + kSigmaSlack * bse;
    r.empirical.push_back(p);
    r.binomial_se.push_back(bse);
    r.bounds.push_back(raw);
    r.slack_bounds.push_back(adj);
    r.informative.push_back(informative);
    r.delta_pass.push_back(ok);
    r.pass = r.pass && ok;
  }
  return r;
}

struct SmoothnessReport {
  Vector theta1, theta2;
  double distance = 0.0;
  std::size_t reps = 0;
  std::size_t failures = 0;
  // Paired risk comparison E1 <= 2 E2 + 8 d^2.
  double risk1 = 0.0, risk2 = 0.0;
  double paired_excess = 0.0;  // mean of L1^2 - 2 L2^2 - 8 d^2
  double paired_se = 0.0;
  bool risk_pass = false;
  // t_theta2 against the interval around t_theta1.
  double t1 = 0.0, t1_se = 0.0, t2 = 0.0, t2_se = 0.0;
  double interval_lo = 0.0, interval_hi = 0.0;
  bool ttheta_pass = false;
  bool pass = false;
};

/// Interval [(t - sqrt(d^2 + 4 t d))_+, t + sqrt(d^2 + 4 t d)].
inline std::pair<double, double> ttheta_interval(double t, double d) {
  const double r = std::sqrt(d * d + 4.0 * t * d);
  return {std::max(0.0, t - r), t + r};
}

/// Both risks use the same noise draws, so the difference has small variance.
/// For t_theta, the interval is widened over t1 +- 3 se(t1), and t2 may sit
/// 3 se(t2) outside it.
inline SmoothnessReport check_smoothness(const ConstraintSet& set, const PenaltySpec& f, const Vector& theta1,
                                         const Vector& theta2, std::size_t reps, std::uint64_t seed,
                                         const RiskOptions& opts = {}) {
  if (reps < 2) throw DomainError("check_smoothness: reps must be >= 2");
  detail::check_theta(set, theta1, "check_smoothness: theta1");
  detail::check_theta(set, theta2, "check_smoothness: theta2");
  SmoothnessReport r;
  r.theta1 = theta1;
  r.theta2 = theta2;
  r.distance = dist2(theta1, theta2);
  r.reps = reps;
  const double d2 = r.distance * r.distance;

  const NoiseBatch batch = detail::risk_batch(seed, reps, theta1.size());
  struct Pair {
    double l1, l2;
    bool ok;
  };
  const auto pairs = parallel_map<Pair>(reps, [&](std::size_t i) {
    const Vector z = batch.member(i);
    const Solution s1 = solve_penalized_lse(set, f, theta1 + z, opts.solve);
    const Solution s2 = solve_penalized_lse(set, f, theta2 + z, opts.solve);
    const double a = dist2(s1.point, theta1), b = dist2(s2.point, theta2);
    return Pair{a * a, b * b, s1.converged && s2.converged};
  });
  std::vector<double> e1, e2, excess;
  for (const auto& p : pairs) {
    if (!p.ok) {
      ++r.failures;
      continue;
    }
    e1.push_back(p.l1);
    e2.push_back(p.l2);
    excess.push_back(p.l1 - 2.0 * p.l2 - 8.0 * d2);
  }
  r.risk1 = mean_stderr(e1).mean;
  r.risk2 = mean_stderr(e2).mean;
  const MeanStderr ex = mean_stderr(excess);
  r.paired_excess = ex.mean;
  r.paired_se = ex.se;
  r.risk_pass = detail::failures_ok(r.failures, reps) && excess.size() >= 2 && ex.mean <= kSigmaSlack * ex.se;

  const NoiseBatch wb = detail::width_batch(seed, opts.width_reps, theta1.size());
  const auto tt1 = find_t_theta(theta1, set, f, wb, opts.solve, opts.ttheta);
  const auto tt2 = find_t_theta(theta2, set, f, wb, opts.solve, opts.ttheta);
  r.t1 = tt1.t_theta;
  r.t1_se = tt1.se;
  r.t2 = tt2.t_theta;
  r.t2_se = tt2.se;
  r.interval_lo = std::numeric_limits<double>::infinity();
  r.interval_hi = -std::numeric_limits<double>::infinity();
  // The lower end is convex in t, so scan rather than trusting the endpoints.
  constexpr int kScan = 20;
  const double t_lo = std::max(0.0, r.t1 - kSigmaSlack * r.t1_se), t_hi = r.t1 + kSigmaSlack * r.t1_se;
  for (int k = 0; k <= kScan; ++k) {
    const auto [lo, hi] = ttheta_interval(t_lo + (t_hi - t_lo) * k / kScan, r.distance);
    r.interval_lo = std::min(r.interval_lo, lo);
    r.interval_hi = std::max(r.interval_hi, hi);
  }
  const std::size_t wfail = tt1.failures + tt2.failures;
  r.failures += wfail;
  r.ttheta_pass = detail::failures_ok(wfail, 2 * opts.width_reps) &&
                  r.t2 >= r.interval_lo - kSigmaSlack * r.t2_se && r.t2 <= r.interval_hi + kSigmaSlack * r.t2_se;
  r.pass = r.risk_pass && r.ttheta_pass;
  return r;
}

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  double l1_norm = 0.0;
};

/// Integral over [0, inf) of x exp(-x^4 / (32 (1 + x)^2)).
inline QuadratureResult tail_integral_constant(double tol = 1e-12) {
  boost::math::quadrature::exp_sinh<double> integrator;
  auto f = [](double x) {
    const double x2 = x * x;
    return x * std::exp(-x2 * x2 / (32.0 * (1.0 + x) * (1.0 + x)));
  };
  QuadratureResult r;
  r.value = integrator.integrate(f, 0.0, std::numeric_limits<double>::infinity(), tol, &r.error_estimate, &r.l1_norm);
  return r;
}

/// For a sample of nonnegative losses, the mean of L^2 and 2 * integral of
/// x * S(x) over [0, inf), with S the empirical survival function. The two
/// agree for any sample; a mismatch means the tail pipeline is broken.
struct TailMomentIdentity {
  double second_moment = 0.0;
  double tail_integral = 0.0;
};

inline TailMomentIdentity tail_moment_identity(std::vector<double> losses) {
  if (losses.empty()) throw DomainError("tail_moment_identity: empty sample");
  for (double l : losses)
    if (!(l >= 0.0)) throw DomainError("tail_moment_identity: losses must be nonnegative");
  std::sort(losses.begin(), losses.end());
  const double n = static_cast<double>(losses.size());
  TailMomentIdentity out;
  for (double l : losses) out.second_moment += l * l;
  out.second_moment /= n;
  // S(x) = (n - k) / n on (l_(k-1), l_(k)], with l_(-1) = 0.
  double prev = 0.0;
  for (std::size_t k = 0; k < losses.size(); ++k) {
    const double surv = (n - static_cast<double>(k)) / n;
    out.tail_integral += surv * (losses[k] * losses[k] - prev * prev);
    prev = losses[k];
  }
  return out;
}

/// Losses ||est(X) - theta|| of the penalized estimator, in replication order.
inline std::vector<double> loss_samples(const ConstraintSet& set, const PenaltySpec& f, const Vector& theta,
                                        std::size_t reps, std::uint64_t seed, const SolveOptions& opts = {}) {
  detail::check_theta(set, theta, "loss_samples");
  return detail::loss_sample(EstimatorSpec::penalized_lse(set, f), theta,
                             detail::risk_batch(seed, reps, theta.size()), opts)
      .losses;
}

}  // namespace seqlab

#endif  // SEQLAB_RISK_LAB_HPP
