#ifndef SEQLAB_CSTAR_HPP
#define SEQLAB_CSTAR_HPP

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <string>

#include "core.hpp"

namespace seqlab {

struct HardCaseConstants {
  double rho = 0.0295;
  double beta = 0.42;
  double eta = 1e-20;
  double b = 51.53;

  void validate() const {
    if (!(rho > 0.0) || !(rho * rho + 4.0 * rho < 1.0))
      throw DomainError("HardCaseConstants: need rho > 0 and rho^2 + 4 rho < 1");
    if (!(beta > 0.0 && beta < 1.0)) throw DomainError("HardCaseConstants: beta must lie in (0, 1)");
    if (!(eta >= 0.0)) throw DomainError("HardCaseConstants: eta must be nonnegative");
    if (!(b > 0.0) || !std::isfinite(b)) throw DomainError("HardCaseConstants: b must be positive");
  }

  /// 1 - sqrt(rho^2 + 4 rho).
  double shrink() const { return 1.0 - std::sqrt(rho * rho + 4.0 * rho); }
};

inline double hard_case_constant(const HardCaseConstants& c) {
  c.validate();
  const double s = c.shrink();
  const double num = c.rho * c.rho * (1.0 - c.beta) * (1.0 - c.beta) * s * s;
  const double den = 2.0 * (2.0 + 8.0 * c.rho * c.rho + 4.0 * std::sqrt(84.0) / std::sqrt(c.b) + 168.0 / c.b);
  return num / den;
}

struct EasyCase {
  double formula = 0.0;  // 1 / (12 (b^2 + 2 sqrt(84) b^1.5 + 84 b) + 32)
  double fallback = 1.0 / 32.0;
  double minimum = 0.0;
};

inline EasyCase easy_case_constant(double b) {
  if (!(b >= 0.0) || !std::isfinite(b)) throw DomainError("easy_case_constant: b must be nonnegative");
  EasyCase e;
  e.formula = 1.0 / (12.0 * (b * b + 2.0 * std::sqrt(84.0) * std::pow(b, 1.5) + 84.0 * b) + 32.0);
  e.minimum = std::min(e.formula, e.fallback);
  return e;
}

struct Sufficiency {
  double rhs = 0.0;
  double b_squared = 0.0;
  double inner = 0.0;
  bool holds = false;
  std::string diagnostic;
};

/// rhs = log 12 / ((rho beta s^2 - eta / b^2)^2 / (18 rho^2) - rho^2), s = 1 - sqrt(rho^2 + 4 rho);
/// the condition holds when rhs < b^2. The bracket before squaring must be
/// positive; squaring a negative one would hide the sign.
inline Sufficiency sufficiency_check(const HardCaseConstants& c) {
  c.validate();
  Sufficiency out;
  out.b_squared = c.b * c.b;
  const double s = c.shrink();
  const double lead = c.rho * c.beta * s * s - c.eta / out.b_squared;
  if (!(lead > 0.0)) {
    out.rhs = std::numeric_limits<double>::infinity();
    out.diagnostic = "rho beta s^2 - eta / b^2 is nonpositive (" + std::to_string(lead) + ")";
    return out;
  }
  out.inner = lead * lead / (18.0 * c.rho * c.rho) - c.rho * c.rho;
  if (!(out.inner > 0.0)) {
    out.rhs = std::numeric_limits<double>::infinity();
    out.diagnostic = "denominator is nonpositive (" + std::to_string(out.inner) + ")";
    return out;
  }
  out.rhs = std::log(12.0) / out.inner;
  out.holds = out.rhs < out.b_squared;
  return out;
}

inline constexpr double kClipQuadTol = 1e-8;

/// E(clip(X, -a, a) - theta)^2 for X ~ N(theta, 1), |theta| <= a: the
/// interior integral by adaptive Gauss-Kronrod plus the two boundary masses.
inline double clip_risk(double a, double theta, double tol = kClipQuadTol) {
  if (!(a > 0.0)) throw DomainError("clip_risk: a must be positive");
  if (!(std::abs(theta) <= a)) throw DomainError("clip_risk: need |theta| <= a");
  auto integrand = [theta](double x) {
    const double z = x - theta;
    return z * z * normal_pdf(z);
  };
  double err = 0.0;
  const double interior = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, -a, a, 30, tol, &err);
  if (!std::isfinite(interior) || err > std::max(tol, 1e3 * std::numeric_limits<double>::epsilon()) * std::max(1.0, interior))
    throw ConvergenceError("clip_risk: quadrature did not converge", {interior}, err);
  const double up = a - theta, dn = a + theta;
  return interior + up * up * (1.0 - normal_cdf(up)) + dn * dn * normal_cdf(-dn);
}

/// 2 (1 - Phi(2a)) (theta^2 + a^2).
inline double clip_risk_lower_bound(double a, double theta) {
  return 2.0 * (1.0 - normal_cdf(2.0 * a)) * (theta * theta + a * a);
}

struct RatioBound {
  double a = 0.0;
  double sup_ratio = 0.0;
  double argmax_theta = 0.0;
  double bound = 0.0;  // 1 / (4 (1 - Phi(2a)))
  bool holds = false;
};

/// max over an equispaced theta-grid of theta^2 / clip_risk(a, theta), the
/// risk ratio of the zero estimator to the clipped one, against its bound.
inline RatioBound normalized_ratio_bound(double a, std::size_t grid_points = 2001) {
  if (!(a > 0.0)) throw DomainError("normalized_ratio_bound: a must be positive");
  if (grid_points < 2) throw DomainError("normalized_ratio_bound: need at least 2 grid points");
  RatioBound r;
  r.a = a;
  r.bound = 1.0 / (4.0 * (1.0 - normal_cdf(2.0 * a)));
  for (std::size_t i = 0; i < grid_points; ++i) {
    const double theta = std::clamp(-a + 2.0 * a * static_cast<double>(i) / static_cast<double>(grid_points - 1), -a, a);
    const double ratio = theta * theta / clip_risk(a, theta);
    if (ratio > r.sup_ratio) {
      r.sup_ratio = ratio;
      r.argmax_theta = theta;
    }
  }
  r.holds = r.sup_ratio <= r.bound;
  return r;
}

struct CertificateReport {
  HardCaseConstants constants;
  double hard_constant = 0.0;
  EasyCase easy;
  Sufficiency sufficiency;
  double cstar_lower = 0.0;  // min of the hard and easy constants and 1/32
  RatioBound upper_demo;
  double cstar_upper_demo = 0.0;
};

inline CertificateReport certificate(const HardCaseConstants& c = {}, double demo_a = 0.01) {
  CertificateReport r;
  r.constants = c;
  r.hard_constant = hard_case_constant(c);
  r.easy = easy_case_constant(c.b);
  r.sufficiency = sufficiency_check(c);
  r.cstar_lower = std::min(r.hard_constant, r.easy.minimum);
  r.upper_demo = normalized_ratio_bound(demo_a);
  r.cstar_upper_demo = r.upper_demo.bound;
  return r;
}

}  // namespace seqlab

#endif  // SEQLAB_CSTAR_HPP
