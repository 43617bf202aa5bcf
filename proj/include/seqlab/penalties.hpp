#ifndef SEQLAB_PENALTIES_HPP
#define SEQLAB_PENALTIES_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <variant>

#include "core.hpp"

namespace seqlab {

namespace penalty {
struct Zero {};
/// lambda * ||a||_1
struct L1 {
  double lambda;
};
/// lambda * (max_i a_i - min_i a_i); on the monotone cone this is lambda (a_n - a_1)
struct Range {
  double lambda;
};
/// (lambda / 2) * ||a||_2^2
struct Quadratic {
  double lambda;
};
/// <v, a>
struct LinearForm {
  Vector v;
};
}  // namespace penalty

/// Real-valued convex penalty f on R^n.
class PenaltySpec {
 public:
  using Kind = std::variant<penalty::Zero, penalty::L1, penalty::Range, penalty::Quadratic,
                            penalty::LinearForm>;

  PenaltySpec() : kind_(penalty::Zero{}) {}

  static PenaltySpec zero() { return PenaltySpec(penalty::Zero{}); }
  static PenaltySpec l1(double lambda) { return PenaltySpec(penalty::L1{check("l1", lambda)}); }
  static PenaltySpec range(double lambda) {
    return PenaltySpec(penalty::Range{check("range", lambda)});
  }
  static PenaltySpec quadratic(double lambda) {
    return PenaltySpec(penalty::Quadratic{check("quadratic", lambda)});
  }
  static PenaltySpec linear_form(Vector v) {
    for (double c : v)
      if (!std::isfinite(c)) throw DomainError("linear_form: coefficients must be finite");
    return PenaltySpec(penalty::LinearForm{std::move(v)});
  }

  const Kind& kind() const { return kind_; }
  bool is_zero() const { return std::holds_alternative<penalty::Zero>(kind_); }
  std::string kind_name() const;

  /// The penalty s * f, s >= 0.
  PenaltySpec scaled(double s) const;

 private:
  explicit PenaltySpec(Kind k) : kind_(std::move(k)) {}
  static double check(const char* who, double lambda) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
      throw DomainError(std::string(who) + ": lambda must be finite and nonnegative");
    return lambda;
  }
  Kind kind_;
};

namespace detail {

template <class... Ts>
struct penalty_visitor : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
penalty_visitor(Ts...) -> penalty_visitor<Ts...>;

inline void check_linear_dim(const PenaltySpec& f, std::size_t n, const char* where) {
  if (const auto* lf = std::get_if<penalty::LinearForm>(&f.kind())) require_dim(where, lf->v.size(), n);
}

/// u with sum_i (x_i - u)_+ = c, for c > 0.
inline double upper_water_level(const Vector& x, double c) {
  Vector s(x);
  std::sort(s.begin(), s.end(), std::greater<double>());
  double cum = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    cum += s[k];
    const double u = (cum - c) / static_cast<double>(k + 1);
    if (k + 1 == s.size() || u >= s[k + 1]) return u;
  }
  return s.back();
}

/// prox of c * (max - min): clip into [l, u] where each clipped tail carries
/// mass c; when the levels would cross, every coordinate collapses to the mean.
inline Vector range_prox(const Vector& x, double c) {
  const std::size_t n = x.size();
  if (n < 2 || c == 0.0) return x;
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  double excess = 0.0;
  for (double v : x) excess += std::max(v - mean, 0.0);
  if (excess <= c) return Vector(n, mean);
  const double u = upper_water_level(x, c);
  Vector neg(n);
  for (std::size_t i = 0; i < n; ++i) neg[i] = -x[i];
  const double l = -upper_water_level(neg, c);
  Vector p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = std::clamp(x[i], l, u);
  return p;
}

}  // namespace detail

inline std::string PenaltySpec::kind_name() const {
  return std::visit(detail::penalty_visitor{
                        [](const penalty::Zero&) { return std::string("zero"); },
                        [](const penalty::L1&) { return std::string("l1"); },
                        [](const penalty::Range&) { return std::string("range"); },
                        [](const penalty::Quadratic&) { return std::string("quadratic"); },
                        [](const penalty::LinearForm&) { return std::string("linear_form"); },
                    },
                    kind_);
}

inline PenaltySpec PenaltySpec::scaled(double s) const {
  if (!(s >= 0.0) || !std::isfinite(s)) throw DomainError("penalty scale must be finite and nonnegative");
  return std::visit(detail::penalty_visitor{
                        [](const penalty::Zero&) { return PenaltySpec::zero(); },
                        [s](const penalty::L1& p) { return PenaltySpec::l1(s * p.lambda); },
                        [s](const penalty::Range& p) { return PenaltySpec::range(s * p.lambda); },
                        [s](const penalty::Quadratic& p) { return PenaltySpec::quadratic(s * p.lambda); },
                        [s](const penalty::LinearForm& p) { return PenaltySpec::linear_form(s * p.v); },
                    },
                    kind_);
}

inline double penalty_value(const PenaltySpec& f, const Vector& x) {
  detail::check_linear_dim(f, x.size(), "penalty_value");
  return std::visit(detail::penalty_visitor{
                        [](const penalty::Zero&) { return 0.0; },
                        [&](const penalty::L1& p) { return p.lambda * norm1(x); },
                        [&](const penalty::Range& p) {
                          if (x.empty()) return 0.0;
                          const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
                          return p.lambda * (*mx - *mn);
                        },
                        [&](const penalty::Quadratic& p) { return 0.5 * p.lambda * dot(x, x); },
                        [&](const penalty::LinearForm& p) { return dot(p.v, x); },
                    },
                    f.kind());
}

/// A subgradient with deterministic tie-breaking: 0 for |.| at 0, first-index
/// argmax/argmin for Range.
inline Vector penalty_subgradient(const PenaltySpec& f, const Vector& x) {
  detail::check_linear_dim(f, x.size(), "penalty_subgradient");
  const std::size_t n = x.size();
  return std::visit(detail::penalty_visitor{
                        [&](const penalty::Zero&) { return Vector(n, 0.0); },
                        [&](const penalty::L1& p) {
                          Vector g(n);
                          for (std::size_t i = 0; i < n; ++i)
                            g[i] = x[i] > 0.0 ? p.lambda : (x[i] < 0.0 ? -p.lambda : 0.0);
                          return g;
                        },
                        [&](const penalty::Range& p) {
                          Vector g(n, 0.0);
                          if (n == 0) return g;
                          const auto imax = static_cast<std::size_t>(
                              std::max_element(x.begin(), x.end()) - x.begin());
                          const auto imin = static_cast<std::size_t>(
                              std::min_element(x.begin(), x.end()) - x.begin());
                          if (imax == imin) return g;
                          g[imax] += p.lambda;
                          g[imin] -= p.lambda;
                          return g;
                        },
                        [&](const penalty::Quadratic& p) { return p.lambda * x; },
                        [&](const penalty::LinearForm& p) { return p.v; },
                    },
                    f.kind());
}

/// argmin_u 1/2 ||u - x||^2 + step f(u). Every catalog kind has a closed form,
/// so the optional is always engaged; callers still branch on it.
inline std::optional<Vector> penalty_prox(const PenaltySpec& f, const Vector& x, double step) {
  if (!(step > 0.0)) throw DomainError("penalty_prox: step must be positive");
  detail::check_linear_dim(f, x.size(), "penalty_prox");
  return std::visit(detail::penalty_visitor{
                        [&](const penalty::Zero&) -> std::optional<Vector> { return x; },
                        [&](const penalty::L1& p) -> std::optional<Vector> {
                          const double c = step * p.lambda;
                          Vector u(x.size());
                          for (std::size_t i = 0; i < x.size(); ++i) {
                            const double m = std::max(std::abs(x[i]) - c, 0.0);
                            u[i] = x[i] < 0.0 ? -m : m;
                          }
                          return u;
                        },
                        [&](const penalty::Range& p) -> std::optional<Vector> {
                          return detail::range_prox(x, step * p.lambda);
                        },
                        [&](const penalty::Quadratic& p) -> std::optional<Vector> {
                          return (1.0 / (1.0 + step * p.lambda)) * x;
                        },
                        [&](const penalty::LinearForm& p) -> std::optional<Vector> {
                          return axpy(x, -step, p.v);
                        },
                    },
                    f.kind());
}

}  // namespace seqlab

#endif  // SEQLAB_PENALTIES_HPP
