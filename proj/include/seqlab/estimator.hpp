#ifndef SEQLAB_ESTIMATOR_HPP
#define SEQLAB_ESTIMATOR_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "convex_geometry.hpp"
#include "core.hpp"
#include "pava.hpp"
#include "penalties.hpp"

namespace seqlab {

enum class SolveMethod { closed_form, pava, dykstra, proximal_dykstra, subgradient };

inline const char* to_string(SolveMethod m) {
  switch (m) {
    case SolveMethod::closed_form: return "closed_form";
    case SolveMethod::pava: return "pava";
    case SolveMethod::dykstra: return "dykstra";
    case SolveMethod::proximal_dykstra: return "proximal_dykstra";
    case SolveMethod::subgradient: return "subgradient";
  }
  return "?";
}

struct StepRule {
  enum class Kind { fixed, diminishing } kind = Kind::diminishing;
  double size = 1.0;  // fixed step, or s0 in s0 / sqrt(k)

  static StepRule fixed(double s) { return {Kind::fixed, s}; }
  static StepRule diminishing(double s0 = 1.0) { return {Kind::diminishing, s0}; }
};

struct SolveOptions {
  /// Which path to take. `automatic` picks the exact closed form when one
  /// exists; the other values force a generic solver (used for cross-checks).
  enum class Path { automatic, proximal_dykstra, subgradient } path = Path::automatic;
  double tol = 1e-8;
  int max_iter = 100000;
  StepRule step_rule = StepRule::diminishing();

  void validate() const {
    if (!(tol > 0.0)) throw DomainError("SolveOptions: tol must be positive");
    if (max_iter < 1) throw DomainError("SolveOptions: max_iter must be >= 1");
    if (!(step_rule.size > 0.0)) throw DomainError("SolveOptions: step size must be positive");
  }
};

/// A (possibly approximate) minimizer of 1/2 ||x - a||^2 + f(a) over the set.
/// `converged == false` marks a soft failure: `point` is the best iterate.
struct Solution {
  Vector point;
  double objective = 0.0;
  int iterations = 0;
  double residual = 0.0;
  SolveMethod method = SolveMethod::closed_form;
  bool converged = true;
};

inline double penalized_objective(const PenaltySpec& f, const Vector& x, const Vector& a) {
  const double d = dist2(x, a);
  return 0.5 * d * d + penalty_value(f, a);
}

namespace detail {

inline Solution finish(const PenaltySpec& f, const Vector& x, Vector point, SolveMethod method,
                       int iterations = 0, double residual = 0.0, bool converged = true) {
  Solution s;
  s.objective = penalized_objective(f, x, point);
  s.point = std::move(point);
  s.method = method;
  s.iterations = iterations;
  s.residual = residual;
  s.converged = converged;
  return s;
}

inline SolveMethod projection_method(const ConstraintSet& set) {
  if (std::holds_alternative<sets::MonotoneCone>(set.kind())) return SolveMethod::pava;
  if (std::holds_alternative<sets::Intersection>(set.kind())) return SolveMethod::dykstra;
  return SolveMethod::closed_form;
}

/// Dykstra-like proximal splitting (Bauschke & Combettes) for prox of f + indicator(set).
inline Solution solve_proximal_dykstra(const ConstraintSet& set, const PenaltySpec& f,
                                       const Vector& x, const SolveOptions& opts) {
  const std::size_t n = x.size();
  const double proj_tol = std::max(1e-3 * opts.tol, 1e-15);
  Vector cur = x;
  Vector p(n, 0.0), q(n, 0.0);
  double residual = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= opts.max_iter; ++it) {
    Vector shifted = cur + p;
    Vector y = *penalty_prox(f, shifted, 1.0);
    Vector p_next = shifted - y;
    Vector yq = y + q;
    Vector next = project(set, yq, proj_tol);
    Vector q_next = yq - next;
    // The iterate can stall while the corrections still move; require both.
    residual = std::max({dist2(next, cur), dist2(next, y), dist2(p_next, p), dist2(q_next, q)});
    p = std::move(p_next);
    q = std::move(q_next);
    cur = std::move(next);
    if (residual < opts.tol) return finish(f, x, cur, SolveMethod::proximal_dykstra, it, residual);
  }
  return finish(f, x, cur, SolveMethod::proximal_dykstra, opts.max_iter, residual, false);
}

inline Solution solve_subgradient(const ConstraintSet& set, const PenaltySpec& f, const Vector& x,
                                  const SolveOptions& opts) {
  const double proj_tol = std::max(1e-3 * opts.tol, 1e-15);
  Vector cur = project(set, x, proj_tol);
  Vector best = cur;
  double best_obj = penalized_objective(f, x, cur);
  double residual = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= opts.max_iter; ++k) {
    Vector g = (cur - x) + penalty_subgradient(f, cur);
    const double step = opts.step_rule.kind == StepRule::Kind::fixed
                            ? opts.step_rule.size
                            : opts.step_rule.size / std::sqrt(static_cast<double>(k));
    Vector next = project(set, axpy(cur, -step, g), proj_tol);
    residual = dist2(next, cur);
    cur = std::move(next);
    const double obj = penalized_objective(f, x, cur);
    if (obj < best_obj) {
      best_obj = obj;
      best = cur;
    }
    if (residual < opts.tol) return finish(f, x, best, SolveMethod::subgradient, k, residual);
  }
  return finish(f, x, best, SolveMethod::subgradient, opts.max_iter, residual, false);
}

}  // namespace detail

/// argmin over the set of 1/2 ||x - a||^2 + f(a).
///
/// Exact paths: f = 0 (projection), LinearForm and Quadratic (the penalty folds
/// into a shifted or rescaled projection), FullSpace (prox), Box + L1
/// (coordinatewise clip of the soft threshold), MonotoneCone + Range (Range is
/// linear on the cone). Everything else goes through proximal Dykstra.
inline Solution solve_penalized_lse(const ConstraintSet& set, const PenaltySpec& f, const Vector& x,
                                    const SolveOptions& opts = {}) {
  require_dim("solve_penalized_lse", set.dim(), x.size());
  opts.validate();
  const std::size_t n = x.size();
  const double proj_tol = std::max(1e-3 * opts.tol, 1e-15);

  if (opts.path == SolveOptions::Path::subgradient) return detail::solve_subgradient(set, f, x, opts);
  if (opts.path == SolveOptions::Path::proximal_dykstra)
    return detail::solve_proximal_dykstra(set, f, x, opts);

  const auto& k = f.kind();
  if (f.is_zero()) return detail::finish(f, x, project(set, x, proj_tol), detail::projection_method(set));
  if (const auto* lf = std::get_if<penalty::LinearForm>(&k)) {
    require_dim("solve_penalized_lse: linear form", n, lf->v.size());
    return detail::finish(f, x, project(set, x - lf->v, proj_tol), detail::projection_method(set));
  }
  if (const auto* qd = std::get_if<penalty::Quadratic>(&k))
    return detail::finish(f, x, project(set, (1.0 / (1.0 + qd->lambda)) * x, proj_tol),
                          detail::projection_method(set));
  if (const auto* single = std::get_if<sets::Singleton>(&set.kind()))
    return detail::finish(f, x, single->point, SolveMethod::closed_form);
  if (std::holds_alternative<sets::FullSpace>(set.kind())) {
    if (auto u = penalty_prox(f, x, 1.0)) return detail::finish(f, x, std::move(*u), SolveMethod::closed_form);
  }
  if (const auto* box = std::get_if<sets::Box>(&set.kind())) {
    if (std::holds_alternative<penalty::L1>(k))
      return detail::finish(f, x, detail::project_box(*box, *penalty_prox(f, x, 1.0)),
                            SolveMethod::closed_form);
  }
  if (std::holds_alternative<sets::MonotoneCone>(set.kind())) {
    if (const auto* rg = std::get_if<penalty::Range>(&k)) {
      Vector shifted = x;
      if (n >= 2) {
        shifted.front() += rg->lambda;
        shifted.back() -= rg->lambda;
      }
      return detail::finish(f, x, pava(shifted), SolveMethod::pava);
    }
  }
  if (penalty_prox(f, x, 1.0)) return detail::solve_proximal_dykstra(set, f, x, opts);
  return detail::solve_subgradient(set, f, x, opts);
}

/// max over pairs of ||est(x1) - est(x2)|| / ||x1 - x2||; pairs with x1 == x2
/// are skipped. Throws ConvergenceError if any solve fails.
inline double check_lipschitz(const ConstraintSet& set, const PenaltySpec& f,
                              const std::vector<std::pair<Vector, Vector>>& pairs,
                              const SolveOptions& opts = {}) {
  if (pairs.empty()) throw DomainError("check_lipschitz: empty pair list");
  double worst = 0.0;
  for (const auto& [a, b] : pairs) {
    const double denom = dist2(a, b);
    if (denom == 0.0) continue;
    const Solution sa = solve_penalized_lse(set, f, a, opts);
    const Solution sb = solve_penalized_lse(set, f, b, opts);
    if (!sa.converged || !sb.converged)
      throw ConvergenceError("check_lipschitz: solver did not converge",
                             sa.converged ? sb.point : sa.point,
                             std::max(sa.residual, sb.residual));
    worst = std::max(worst, dist2(sa.point, sb.point) / denom);
  }
  return worst;
}

}  // namespace seqlab

#endif  // SEQLAB_ESTIMATOR_HPP
