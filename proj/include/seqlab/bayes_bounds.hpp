#ifndef SEQLAB_BAYES_BOUNDS_HPP
#define SEQLAB_BAYES_BOUNDS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "core.hpp"
#include "gaussian_width.hpp"
#include "risk_lab.hpp"

namespace seqlab {

namespace priors {
struct TwoPoint {
  Vector p1, p2;
  double w1 = 0.5, w2 = 0.5;
};
struct Grid {
  std::vector<Vector> points;
  Vector weights;
};
/// Law of the maximiser of <Z, a - theta*> - f(a) over the set intersected
/// with the ball of radius rho * t_hat(theta*).
struct Pushforward {
  Vector theta_star;
  double rho = 0.0;
  ConstraintSet set;
  PenaltySpec f;
  NoiseBatch batch;
  SolveOptions solve;
};
}  // namespace priors

class PriorSpec {
 public:
  using Kind = std::variant<priors::TwoPoint, priors::Grid, priors::Pushforward>;

  static PriorSpec two_point(Vector p1, Vector p2, double w1 = 0.5, double w2 = 0.5) {
    require_dim("PriorSpec::two_point", p1.size(), p2.size());
    check_weights({w1, w2}, "PriorSpec::two_point");
    return PriorSpec(priors::TwoPoint{std::move(p1), std::move(p2), w1, w2});
  }

  static PriorSpec grid(std::vector<Vector> points, Vector weights) {
    if (points.empty()) throw DomainError("PriorSpec::grid: no atoms");
    require_dim("PriorSpec::grid: weights", points.size(), weights.size());
    for (const auto& p : points) require_dim("PriorSpec::grid: atom", points.front().size(), p.size());
    check_weights(weights, "PriorSpec::grid");
    return PriorSpec(priors::Grid{std::move(points), std::move(weights)});
  }

  static PriorSpec uniform_grid(std::vector<Vector> points) {
    const std::size_t k = points.size();
    if (k == 0) throw DomainError("PriorSpec::uniform_grid: no atoms");
    return grid(std::move(points), Vector(k, 1.0 / static_cast<double>(k)));
  }

  static PriorSpec pushforward(Vector theta_star, double rho, ConstraintSet set, PenaltySpec f, NoiseBatch batch,
                               SolveOptions solve = {}) {
    if (!(rho > 0.0) || !(rho * rho + 4.0 * rho < 1.0))
      throw DomainError("PriorSpec::pushforward: need rho > 0 and rho^2 + 4 rho < 1");
    require_dim("PriorSpec::pushforward: theta_star", set.dim(), theta_star.size());
    require_dim("PriorSpec::pushforward: batch", set.dim(), batch.dim);
    if (batch.count == 0) throw DomainError("PriorSpec::pushforward: empty batch");
    if (!contains(set, theta_star, 1e-6)) throw DomainError("PriorSpec::pushforward: theta_star must lie in the set");
    return PriorSpec(priors::Pushforward{std::move(theta_star), rho, std::move(set), std::move(f), batch, solve});
  }

  const Kind& kind() const { return kind_; }

  std::string kind_name() const {
    return std::visit(detail::overloaded{[](const priors::TwoPoint&) { return "two_point"; },
                                         [](const priors::Grid&) { return "grid"; },
                                         [](const priors::Pushforward&) { return "pushforward"; }},
                      kind_);
  }

  std::size_t dim() const {
    return std::visit(detail::overloaded{[](const priors::TwoPoint& p) { return p.p1.size(); },
                                         [](const priors::Grid& g) { return g.points.front().size(); },
                                         [](const priors::Pushforward& p) { return p.theta_star.size(); }},
                      kind_);
  }

 private:
  explicit PriorSpec(Kind k) : kind_(std::move(k)) {}

  static void check_weights(const Vector& w, const char* where) {
    double s = 0.0;
    for (double v : w) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError(std::string(where) + ": weights must be nonnegative");
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-9) throw DomainError(std::string(where) + ": weights must sum to 1");
  }

  Kind kind_;
};

struct PushforwardSample {
  double t_theta_hat = 0.0;
  double radius = 0.0;
  std::vector<Vector> samples;
  std::size_t failures = 0;
};

/// One argmax per noise vector in the prior's batch.
inline PushforwardSample sample_pushforward_prior(const priors::Pushforward& p) {
  PushforwardSample out;
  const auto tt = find_t_theta(p.theta_star, p.set, p.f, p.batch, p.solve);
  out.t_theta_hat = tt.t_theta;
  out.radius = p.rho * tt.t_theta;
  out.failures = tt.failures;
  const auto sups = parallel_map<InnerSup>(p.batch.count, [&](std::size_t i) {
    return inner_sup(p.batch.member(i), p.theta_star, out.radius, p.set, p.f, p.solve);
  });
  out.samples.reserve(sups.size());
  for (const auto& s : sups) {
    if (!s.converged) ++out.failures;
    out.samples.push_back(s.argmax);
  }
  return out;
}

struct DiscretePrior {
  std::vector<Vector> atoms;
  Vector weights;
};

/// Atoms and weights; a pushforward prior becomes the empirical law of its samples.
inline DiscretePrior to_discrete(const PriorSpec& prior) {
  return std::visit(
      detail::overloaded{[](const priors::TwoPoint& p) { return DiscretePrior{{p.p1, p.p2}, {p.w1, p.w2}}; },
                         [](const priors::Grid& g) { return DiscretePrior{g.points, g.weights}; },
                         [](const priors::Pushforward& p) {
                           auto s = sample_pushforward_prior(p);
                           const double w = 1.0 / static_cast<double>(s.samples.size());
                           return DiscretePrior{std::move(s.samples), Vector(p.batch.count, w)};
                         }},
      prior.kind());
}

struct BoundReport {
  std::string method;
  double value = 0.0;
  // Le Cam details.
  double distance = 0.0;
  double tv_bound = 0.0;
  // Small-ball details.
  double information = 0.0;
  double mass_threshold = 0.0;
  double t = 0.0;
  std::size_t best_candidate = 0;
  std::size_t candidates = 0;
};

/// Two-point bound with Pinsker: KL = d^2/2, TV <= d/2, bound d^2/4 (1 - TV)_+.
inline BoundReport lecam_two_point(const Vector& theta0, const Vector& theta1) {
  require_dim("lecam_two_point", theta0.size(), theta1.size());
  BoundReport r;
  r.method = "lecam";
  r.distance = dist2(theta0, theta1);
  r.tv_bound = r.distance / 2.0;
  r.value = 0.25 * r.distance * r.distance * std::max(0.0, 1.0 - r.tv_bound);
  return r;
}

struct ChiSquare {
  double value = 0.0;
  bool saturated = false;
};

inline constexpr double kChiSquareSaturation = 700.0;

/// exp(||theta1 - theta2||^2) - 1; saturates to DBL_MAX past exp(700).
inline ChiSquare chi_sq_gaussian(const Vector& theta1, const Vector& theta2) {
  require_dim("chi_sq_gaussian", theta1.size(), theta2.size());
  const double d = dist2(theta1, theta2);
  const double d2 = d * d;
  if (d2 > kChiSquareSaturation) return {std::numeric_limits<double>::max(), true};
  return {std::expm1(d2), false};
}

/// 1/2 sup{t > 0 : max_a w(B(a, sqrt t)) < 1/(4(1 + I))} with a over the
/// candidates. For each candidate the supremum is the first squared distance at
/// which the cumulative mass reaches the threshold; the bound takes the least.
inline BoundReport small_ball_lower_bound(const DiscretePrior& prior, double information,
                                          const std::vector<Vector>& candidates) {
  if (candidates.empty()) throw DomainError("small_ball_lower_bound: empty candidate list");
  if (!(information >= 0.0)) throw DomainError("small_ball_lower_bound: I must be nonnegative");
  BoundReport r;
  r.method = "small_ball";
  r.information = information;
  r.candidates = candidates.size();
  r.mass_threshold = std::isinf(information) ? 0.0 : 0.25 / (1.0 + information);
  if (r.mass_threshold == 0.0) return r;

  const std::size_t k = prior.atoms.size();
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::pair<double, double>> by_dist(k);
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    for (std::size_t i = 0; i < k; ++i) {
      const double d = dist2(prior.atoms[i], candidates[c]);
      by_dist[i] = {d * d, prior.weights[i]};
    }
    std::sort(by_dist.begin(), by_dist.end());
    double mass = 0.0, reach = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < k; ++i) {
      mass += by_dist[i].second;
      // Tied distances enter the ball together.
      if (i + 1 < k && by_dist[i + 1].first == by_dist[i].first) continue;
      if (mass >= r.mass_threshold) {
        reach = by_dist[i].first;
        break;
      }
    }
    if (reach < best) {
      best = reach;
      r.best_candidate = c;
    }
  }
  r.t = best;
  r.value = std::isfinite(best) ? 0.5 * best : 0.0;
  return r;
}

/// Candidates default to the atoms, plus theta* for a pushforward prior.
inline BoundReport small_ball_lower_bound(const PriorSpec& prior, double information) {
  DiscretePrior d = to_discrete(prior);
  std::vector<Vector> candidates = d.atoms;
  if (const auto* p = std::get_if<priors::Pushforward>(&prior.kind())) candidates.push_back(p->theta_star);
  return small_ball_lower_bound(d, information, candidates);
}

inline BoundReport small_ball_lower_bound(const PriorSpec& prior, double information,
                                          const std::vector<Vector>& candidates) {
  for (const auto& c : candidates) require_dim("small_ball_lower_bound: candidate", prior.dim(), c.size());
  return small_ball_lower_bound(to_discrete(prior), information, candidates);
}

/// Bayes risk of the posterior mean for a 1-D discrete prior: the integral of
/// p(x) Var(theta | x) by the trapezoid rule on [min - 12, max + 12].
inline double bayes_oracle_1d(const DiscretePrior& prior, std::size_t quad_points = 4001) {
  if (quad_points < 100) throw DomainError("bayes_oracle_1d: quad_points must be >= 100");
  const std::size_t k = prior.atoms.size();
  if (k == 0) throw DomainError("bayes_oracle_1d: empty prior");
  Vector th(k);
  for (std::size_t i = 0; i < k; ++i) {
    require_dim("bayes_oracle_1d: atom", 1, prior.atoms[i].size());
    th[i] = prior.atoms[i][0];
  }
  const auto [lo_it, hi_it] = std::minmax_element(th.begin(), th.end());
  const double lo = *lo_it - 12.0, hi = *hi_it + 12.0;
  const double h = (hi - lo) / static_cast<double>(quad_points - 1);
  Vector post(k);
  double total = 0.0;
  for (std::size_t j = 0; j < quad_points; ++j) {
    const double x = lo + h * static_cast<double>(j);
    double px = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      post[i] = prior.weights[i] * normal_pdf(x - th[i]);
      px += post[i];
    }
    if (px <= 0.0) continue;
    double mean = 0.0;
    for (std::size_t i = 0; i < k; ++i) mean += post[i] * th[i];
    mean /= px;
    double var = 0.0;
    for (std::size_t i = 0; i < k; ++i) var += post[i] * (th[i] - mean) * (th[i] - mean);
    const double wj = (j == 0 || j + 1 == quad_points) ? 0.5 : 1.0;
    total += wj * var;  // var already carries the factor p(x)
  }
  return total * h;
}

inline double bayes_oracle_1d(const PriorSpec& prior, std::size_t quad_points = 4001) {
  if (std::holds_alternative<priors::Pushforward>(prior.kind()))
    throw DomainError("bayes_oracle_1d: needs a two-point or grid prior");
  return bayes_oracle_1d(to_discrete(prior), quad_points);
}

struct AverageRisk {
  double mean = 0.0;
  double se = 0.0;
  std::size_t reps = 0;
  std::size_t failures = 0;
  bool pass = false;
};

/// Prior-averaged risk: draw theta from the prior, then X, then the loss.
/// Replication i uses the same noise as simulate_risk with the same seed.
inline AverageRisk avg_risk_under_prior(const EstimatorSpec& est, const DiscretePrior& prior, std::size_t reps,
                                        std::uint64_t seed, const SolveOptions& opts = {}) {
  if (reps < 2) throw DomainError("avg_risk_under_prior: reps must be >= 2");
  if (prior.atoms.empty()) throw DomainError("avg_risk_under_prior: empty prior");
  const std::size_t n = prior.atoms.front().size();
  est.check_dim(n);
  AverageRisk r;
  r.reps = reps;
  if (std::holds_alternative<estimators::Zero>(est.kind())) {
    for (std::size_t i = 0; i < prior.atoms.size(); ++i)
      r.mean += prior.weights[i] * dot(prior.atoms[i], prior.atoms[i]);
    r.pass = true;
    return r;
  }
  Vector cdf(prior.weights.size());
  std::partial_sum(prior.weights.begin(), prior.weights.end(), cdf.begin());
  const NoiseBatch noise = detail::risk_batch(seed, reps, n);
  const std::uint64_t pick_seed = derive_seed(seed, "prior");
  auto results = parallel_map<std::optional<double>>(reps, [&](std::size_t i) -> std::optional<double> {
    std::mt19937_64 gen(derive_seed(pick_seed, i));
    const double u = std::uniform_real_distribution<double>(0.0, cdf.back())(gen);
    const std::size_t idx =
        std::min<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin(), cdf.size() - 1);
    const Vector& theta = prior.atoms[idx];
    const EstimateResult e = apply_estimator(est, theta + noise.member(i), opts);
    if (!e.converged) return std::nullopt;
    const double l = dist2(e.point, theta);
    return l * l;
  });
  std::vector<double> losses;
  for (const auto& v : results) {
    if (v) losses.push_back(*v);
    else ++r.failures;
  }
  const MeanStderr ms = mean_stderr(losses);
  r.mean = ms.mean;
  r.se = ms.se;
  r.pass = detail::failures_ok(r.failures, reps) && losses.size() >= 2;
  return r;
}

inline AverageRisk avg_risk_under_prior(const EstimatorSpec& est, const PriorSpec& prior, std::size_t reps,
                                        std::uint64_t seed, const SolveOptions& opts = {}) {
  return avg_risk_under_prior(est, to_discrete(prior), reps, seed, opts);
}

}  // namespace seqlab

#endif  // SEQLAB_BAYES_BOUNDS_HPP
