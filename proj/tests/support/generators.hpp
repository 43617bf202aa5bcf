#ifndef SEQLAB_TESTS_GENERATORS_HPP
#define SEQLAB_TESTS_GENERATORS_HPP

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "seqlab/convex_geometry.hpp"
#include "seqlab/penalties.hpp"

namespace seqlab::testing {

inline Vector random_vector(std::mt19937_64& gen, std::size_t n, double scale = 2.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Vector v(n);
  for (double& x : v) x = normal(gen);
  return v;
}

inline double uniform(std::mt19937_64& gen, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(gen);
}

struct NamedSet {
  std::string name;
  ConstraintSet set;
};

/// One instance of every catalog kind in dimension n.
inline std::vector<NamedSet> set_catalog(std::size_t n) {
  Vector lo(n), hi(n), w(n), c(n);
  for (std::size_t i = 0; i < n; ++i) {
    lo[i] = -1.0 - 0.1 * static_cast<double>(i);
    hi[i] = 0.5 + 0.2 * static_cast<double>(i);
    w[i] = 1.0 + static_cast<double>(i);
    c[i] = 0.1 * static_cast<double>(i);
  }
  std::vector<NamedSet> out;
  out.push_back({"full_space", ConstraintSet::full_space(n)});
  out.push_back({"singleton", ConstraintSet::singleton(c)});
  out.push_back({"box", ConstraintSet::box(lo, hi)});
  out.push_back({"ball", ConstraintSet::ball(c, 1.5)});
  out.push_back({"l1_ball", ConstraintSet::l1_ball(c, 2.0)});
  out.push_back({"monotone_cone", ConstraintSet::monotone_cone(n)});
  out.push_back({"weighted_ellipsoid", ConstraintSet::weighted_ellipsoid(w, 1.2)});
  out.push_back({"intersection",
                 ConstraintSet::intersection({ConstraintSet::box(n, -1.0, 1.0),
                                              ConstraintSet::ball(Vector(n, 0.3), 1.0)},
                                             Vector(n, 0.3))});
  return out;
}

struct NamedPenalty {
  std::string name;
  PenaltySpec f;
};

inline std::vector<NamedPenalty> penalty_catalog(std::size_t n) {
  Vector v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = 0.3 * (static_cast<double>(i % 3) - 1.0);
  return {{"zero", PenaltySpec::zero()},
          {"l1", PenaltySpec::l1(0.7)},
          {"range", PenaltySpec::range(0.5)},
          {"quadratic", PenaltySpec::quadratic(0.8)},
          {"linear_form", PenaltySpec::linear_form(v)}};
}

/// A point of the set: the projection of a random vector.
inline Vector random_member(std::mt19937_64& gen, const ConstraintSet& set, double scale = 2.0) {
  return project(set, random_vector(gen, set.dim(), scale), 1e-13);
}

}  // namespace seqlab::testing

#endif  // SEQLAB_TESTS_GENERATORS_HPP
