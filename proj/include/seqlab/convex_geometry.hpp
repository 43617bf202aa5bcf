#ifndef SEQLAB_CONVEX_GEOMETRY_HPP
#define SEQLAB_CONVEX_GEOMETRY_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "core.hpp"
#include "pava.hpp"

namespace seqlab {

class ConstraintSet;

namespace sets {

struct FullSpace {
  std::size_t dim;
};
struct Singleton {
  Vector point;
};
struct Box {
  Vector lo, hi;
};
struct Ball {
  Vector center;
  double radius;
};
struct L1Ball {
  Vector center;
  double radius;
};
struct MonotoneCone {
  std::size_t dim;
};
/// {a : sum_i w_i a_i^2 <= r^2}
struct WeightedEllipsoid {
  Vector weights;
  double radius;
};
struct Intersection {
  std::vector<ConstraintSet> members;
  std::optional<Vector> witness;
};

}  // namespace sets

inline constexpr double kDefaultProjectTol = 1e-12;
inline constexpr int kDykstraMaxIter = 100000;

/// A nonempty closed convex subset of R^n. Construct through the named
/// factories, which validate the invariants of each kind.
class ConstraintSet {
 public:
  using Kind = std::variant<sets::FullSpace, sets::Singleton, sets::Box, sets::Ball, sets::L1Ball,
                            sets::MonotoneCone, sets::WeightedEllipsoid, sets::Intersection>;

  static ConstraintSet full_space(std::size_t n) {
    if (n == 0) throw DomainError("full_space: dimension must be positive");
    return ConstraintSet(sets::FullSpace{n});
  }
  static ConstraintSet singleton(Vector point) {
    if (point.empty()) throw DomainError("singleton: empty point");
    return ConstraintSet(sets::Singleton{std::move(point)});
  }
  static ConstraintSet box(Vector lo, Vector hi) {
    if (lo.empty()) throw DomainError("box: empty bounds");
    require_dim("box", lo.size(), hi.size());
    for (std::size_t i = 0; i < lo.size(); ++i)
      if (!(lo[i] <= hi[i])) throw DomainError("box: lo > hi at coordinate " + std::to_string(i));
    return ConstraintSet(sets::Box{std::move(lo), std::move(hi)});
  }
  static ConstraintSet box(std::size_t n, double lo, double hi) {
    return box(Vector(n, lo), Vector(n, hi));
  }
  static ConstraintSet ball(Vector center, double radius) {
    if (center.empty()) throw DomainError("ball: empty center");
    if (!(radius >= 0.0)) throw DomainError("ball: radius must be nonnegative");
    return ConstraintSet(sets::Ball{std::move(center), radius});
  }
  static ConstraintSet l1_ball(Vector center, double radius) {
    if (center.empty()) throw DomainError("l1_ball: empty center");
    if (!(radius >= 0.0)) throw DomainError("l1_ball: radius must be nonnegative");
    return ConstraintSet(sets::L1Ball{std::move(center), radius});
  }
  static ConstraintSet monotone_cone(std::size_t n) {
    if (n == 0) throw DomainError("monotone_cone: dimension must be positive");
    return ConstraintSet(sets::MonotoneCone{n});
  }
  static ConstraintSet weighted_ellipsoid(Vector weights, double radius) {
    if (weights.empty()) throw DomainError("weighted_ellipsoid: empty weights");
    for (double w : weights)
      if (!(w > 0.0)) throw DomainError("weighted_ellipsoid: weights must be strictly positive");
    if (!(radius >= 0.0)) throw DomainError("weighted_ellipsoid: radius must be nonnegative");
    return ConstraintSet(sets::WeightedEllipsoid{std::move(weights), radius});
  }
  static ConstraintSet intersection(std::vector<ConstraintSet> members,
                                    std::optional<Vector> witness = std::nullopt);

  std::size_t dim() const;
  const Kind& kind() const { return kind_; }
  std::string kind_name() const;

  /// Euclidean diameter; +inf for unbounded sets. For intersections this is
  /// the smallest member diameter, an upper bound.
  double diameter() const;

 private:
  explicit ConstraintSet(Kind k) : kind_(std::move(k)) {}
  Kind kind_;
};

Vector project(const ConstraintSet& set, const Vector& x, double tol = kDefaultProjectTol);
Vector dykstra_project(const std::vector<ConstraintSet>& sets, const Vector& x, double tol,
                       int max_iter = kDykstraMaxIter);

// ── Implementation ──────────────────────────────────────────────────

namespace detail {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

inline Vector project_box(const sets::Box& b, const Vector& x) {
  Vector p(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) p[i] = std::clamp(x[i], b.lo[i], b.hi[i]);
  return p;
}

inline Vector project_ball(const sets::Ball& b, const Vector& x) {
  const double d = dist2(x, b.center);
  if (d <= b.radius) return x;
  const double s = b.radius / d;
  Vector p(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) p[i] = b.center[i] + s * (x[i] - b.center[i]);
  return p;
}

/// Sort-and-threshold projection onto the l1 ball (Duchi et al. 2008).
inline Vector project_l1_ball(const sets::L1Ball& b, const Vector& x) {
  const std::size_t n = x.size();
  Vector u(n);
  for (std::size_t i = 0; i < n; ++i) u[i] = std::abs(x[i] - b.center[i]);
  if (norm1(u) <= b.radius) return x;
  if (b.radius == 0.0) return b.center;
  Vector sorted(u);
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  double cumsum = 0.0, tau = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    cumsum += sorted[j];
    const double cand = (cumsum - b.radius) / static_cast<double>(j + 1);
    if (sorted[j] - cand > 0.0) tau = cand;
  }
  Vector p(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double mag = std::max(u[i] - tau, 0.0);
    const double d = x[i] - b.center[i];
    p[i] = b.center[i] + (d < 0.0 ? -mag : mag);
  }
  return p;
}

/// Solves sum_i w_i (x_i / (1 + mu w_i))^2 = r^2 for mu >= 0 by bisection.
inline Vector project_ellipsoid(const sets::WeightedEllipsoid& e, const Vector& x) {
  const std::size_t n = x.size();
  auto level = [&](double mu) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double a = x[i] / (1.0 + mu * e.weights[i]);
      s += e.weights[i] * a * a;
    }
    return s;
  };
  const double r2 = e.radius * e.radius;
  if (level(0.0) <= r2) return x;
  if (e.radius == 0.0) return Vector(n, 0.0);
  double lo = 0.0, hi = 1.0;
  while (level(hi) > r2) {
    lo = hi;
    hi *= 2.0;
  }
  for (int it = 0; it < 400 && hi - lo > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (level(mid) > r2 ? lo : hi) = mid;
  }
  Vector p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = x[i] / (1.0 + hi * e.weights[i]);
  return p;
}

}  // namespace detail

inline ConstraintSet ConstraintSet::intersection(std::vector<ConstraintSet> members,
                                                 std::optional<Vector> witness) {
  if (members.empty()) throw DomainError("intersection: no member sets");
  const std::size_t n = members.front().dim();
  for (const auto& m : members) require_dim("intersection member", n, m.dim());
  if (witness) {
    require_dim("intersection witness", n, witness->size());
    for (const auto& m : members)
      if (dist2(project(m, *witness), *witness) > 1e-9)
        throw DomainError("intersection: witness point lies outside a member set (" +
                          m.kind_name() + ")");
  }
  return ConstraintSet(sets::Intersection{std::move(members), std::move(witness)});
}

inline std::size_t ConstraintSet::dim() const {
  return std::visit(detail::overloaded{
                        [](const sets::FullSpace& s) { return s.dim; },
                        [](const sets::Singleton& s) { return s.point.size(); },
                        [](const sets::Box& s) { return s.lo.size(); },
                        [](const sets::Ball& s) { return s.center.size(); },
                        [](const sets::L1Ball& s) { return s.center.size(); },
                        [](const sets::MonotoneCone& s) { return s.dim; },
                        [](const sets::WeightedEllipsoid& s) { return s.weights.size(); },
                        [](const sets::Intersection& s) { return s.members.front().dim(); },
                    },
                    kind_);
}

inline std::string ConstraintSet::kind_name() const {
  return std::visit(detail::overloaded{
                        [](const sets::FullSpace&) { return std::string("full_space"); },
                        [](const sets::Singleton&) { return std::string("singleton"); },
                        [](const sets::Box&) { return std::string("box"); },
                        [](const sets::Ball&) { return std::string("ball"); },
                        [](const sets::L1Ball&) { return std::string("l1_ball"); },
                        [](const sets::MonotoneCone&) { return std::string("monotone_cone"); },
                        [](const sets::WeightedEllipsoid&) { return std::string("weighted_ellipsoid"); },
                        [](const sets::Intersection&) { return std::string("intersection"); },
                    },
                    kind_);
}

inline double ConstraintSet::diameter() const {
  constexpr double inf = std::numeric_limits<double>::infinity();
  return std::visit(detail::overloaded{
                        [](const sets::FullSpace&) { return inf; },
                        [](const sets::Singleton&) { return 0.0; },
                        [](const sets::Box& s) { return dist2(s.lo, s.hi); },
                        [](const sets::Ball& s) { return 2.0 * s.radius; },
                        [](const sets::L1Ball& s) { return 2.0 * s.radius; },
                        [](const sets::MonotoneCone&) { return inf; },
                        [](const sets::WeightedEllipsoid& s) {
                          const double wmin = *std::min_element(s.weights.begin(), s.weights.end());
                          return 2.0 * s.radius / std::sqrt(wmin);
                        },
                        [](const sets::Intersection& s) {
                          double d = inf;
                          for (const auto& m : s.members) d = std::min(d, m.diameter());
                          return d;
                        },
                    },
                    kind_);
}

inline Vector project(const ConstraintSet& set, const Vector& x, double tol) {
  require_dim("project", set.dim(), x.size());
  if (!(tol > 0.0)) throw DomainError("project: tol must be positive");
  return std::visit(detail::overloaded{
                        [&](const sets::FullSpace&) { return x; },
                        [&](const sets::Singleton& s) { return s.point; },
                        [&](const sets::Box& s) { return detail::project_box(s, x); },
                        [&](const sets::Ball& s) { return detail::project_ball(s, x); },
                        [&](const sets::L1Ball& s) { return detail::project_l1_ball(s, x); },
                        [&](const sets::MonotoneCone&) { return pava(x); },
                        [&](const sets::WeightedEllipsoid& s) { return detail::project_ellipsoid(s, x); },
                        [&](const sets::Intersection& s) { return dykstra_project(s.members, x, tol); },
                    },
                    set.kind());
}

/// Euclidean distance from x to the set.
inline double distance(const ConstraintSet& set, const Vector& x, double tol = kDefaultProjectTol) {
  return dist2(x, project(set, x, tol));
}

/// True iff dist(x, set) <= tol (absolute).
inline bool contains(const ConstraintSet& set, const Vector& x, double tol = 0.0) {
  require_dim("contains", set.dim(), x.size());
  if (!(tol >= 0.0)) throw DomainError("contains: tol must be nonnegative");
  return distance(set, x, std::max(kDefaultProjectTol, 0.01 * tol)) <= tol;
}

/// Dykstra's alternating projections. Stops once a full sweep moves both the
/// iterate and every correction term by less than tol, and the iterate is
/// within 10 tol of every member. The iterate alone can stall for many sweeps
/// while the corrections are still moving. An empty intersection shows up as a
/// failure to reach that state.
inline Vector dykstra_project(const std::vector<ConstraintSet>& sets, const Vector& x, double tol,
                              int max_iter) {
  if (sets.empty()) throw DomainError("dykstra_project: no sets");
  if (!(tol > 0.0)) throw DomainError("dykstra_project: tol must be positive");
  if (max_iter < 1) throw DomainError("dykstra_project: max_iter must be positive");
  const std::size_t n = x.size();
  for (const auto& s : sets) require_dim("dykstra_project", s.dim(), n);
  const double inner_tol = std::max(0.1 * tol, 1e-15);
  if (sets.size() == 1) return project(sets.front(), x, inner_tol);

  Vector cur = x;
  std::vector<Vector> incr(sets.size(), Vector(n, 0.0));
  double change = std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iter; ++it) {
    const Vector prev = cur;
    double incr_change = 0.0;
    for (std::size_t j = 0; j < sets.size(); ++j) {
      Vector shifted = cur + incr[j];
      Vector next = project(sets[j], shifted, inner_tol);
      Vector updated = shifted - next;
      incr_change = std::max(incr_change, dist2(updated, incr[j]));
      incr[j] = std::move(updated);
      cur = std::move(next);
    }
    change = std::max(dist2(prev, cur), incr_change);
    if (change < tol) {
      double worst = 0.0;
      for (const auto& s : sets) worst = std::max(worst, distance(s, cur, inner_tol));
      if (worst <= 10.0 * tol) return cur;
    }
  }
  double worst = 0.0;
  for (const auto& s : sets) worst = std::max(worst, distance(s, cur, inner_tol));
  throw ConvergenceError("dykstra_project: no convergence after " + std::to_string(max_iter) +
                             " sweeps (intersection may be empty)",
                         cur, std::max(change, worst));
}

}  // namespace seqlab

#endif  // SEQLAB_CONVEX_GEOMETRY_HPP
