#include "seqlab/estimator.hpp"

#include <gtest/gtest.h>

#include <random>

#include "generators.hpp"

namespace seqlab {
namespace {

using testing::penalty_catalog;
using testing::random_member;
using testing::random_vector;
using testing::set_catalog;

void ExpectNear(const Vector& got, const Vector& want, double tol) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], tol) << "coordinate " << i;
}

TEST(SolvePenalizedLse, FullSpaceL1MatchesPerCoordinateGrid) {
  const Vector x{3.0, -0.5};
  Vector oracle(2);
  for (int c = 0; c < 2; ++c) {
    double best = 1e300;
    for (int i = -50000; i <= 50000; ++i) {
      const double u = i * 1e-4;
      const double obj = 0.5 * (x[c] - u) * (x[c] - u) + std::abs(u);
      if (obj < best) {
        best = obj;
        oracle[c] = u;
      }
    }
  }
  ExpectNear(oracle, {2.0, 0.0}, 1e-4);
  const Solution s = solve_penalized_lse(ConstraintSet::full_space(2), PenaltySpec::l1(1.0), x);
  ExpectNear(s.point, oracle, 1e-4);
  EXPECT_EQ(s.method, SolveMethod::closed_form);
  EXPECT_NEAR(s.objective, 0.5 * (1.0 + 0.25) + 2.0, 1e-14);
}

TEST(SolvePenalizedLse, BoxWithoutPenaltyClips) {
  const Solution s = solve_penalized_lse(ConstraintSet::box(1, -1.0, 1.0), PenaltySpec::zero(), {5.0});
  ExpectNear(s.point, {1.0}, 0.0);
  EXPECT_TRUE(s.converged);
}

TEST(SolvePenalizedLse, MonotoneRangePoolsWhenStationaryPointIsInfeasible) {
  // 2-D grid oracle over a1 <= a2.
  const Vector x{2.0, 1.0};
  const auto f = PenaltySpec::range(0.25);
  Vector best;
  double best_obj = 1e300;
  for (int i = 0; i <= 300; ++i) {
    for (int j = i; j <= 300; ++j) {
      const Vector a{i * 0.01, j * 0.01};
      const double obj = penalized_objective(f, x, a);
      if (obj < best_obj) {
        best_obj = obj;
        best = a;
      }
    }
  }
  ExpectNear(best, {1.5, 1.5}, 1e-12);
  const Solution s = solve_penalized_lse(ConstraintSet::monotone_cone(2), f, x);
  ExpectNear(s.point, best, 1e-12);
  EXPECT_EQ(s.method, SolveMethod::pava);
}

TEST(SolvePenalizedLse, DimensionMismatchThrows) {
  EXPECT_THROW(solve_penalized_lse(ConstraintSet::box(2, 0, 1), PenaltySpec::zero(), {1.0}),
               DimensionError);
  EXPECT_THROW(solve_penalized_lse(ConstraintSet::box(2, 0, 1), PenaltySpec::linear_form({1.0}), {1.0, 1.0}),
               DimensionError);
}

TEST(SolvePenalizedLse, NonConvergenceIsSoft) {
  SolveOptions opts;
  opts.max_iter = 1;
  opts.path = SolveOptions::Path::proximal_dykstra;
  const Solution s =
      solve_penalized_lse(ConstraintSet::ball({0.0, 0.0}, 1.0), PenaltySpec::l1(0.5), {3.0, 1.0}, opts);
  EXPECT_FALSE(s.converged);
  EXPECT_EQ(s.point.size(), 2u);
  EXPECT_GT(s.residual, opts.tol);
}

// Three-point isotonic fits against a grid QP oracle.
Vector IsotonicGrid3(const Vector& x) {
  Vector best;
  double best_d = 1e300;
  for (int i = 0; i <= 80; ++i)
    for (int j = i; j <= 80; ++j)
      for (int k = j; k <= 80; ++k) {
        const Vector a{i * 0.05, j * 0.05, k * 0.05};
        const double d = dist2(a, x);
        if (d < best_d) {
          best_d = d;
          best = a;
        }
      }
  return best;
}

TEST(Pava, Examples) {
  ExpectNear(pava(Vector{1.0, 2.0, 3.0}), {1.0, 2.0, 3.0}, 0.0);
  ExpectNear(pava(Vector{2.0, 1.0}), {1.5, 1.5}, 0.0);
  const Vector oracle = IsotonicGrid3({3.0, 1.0, 2.0});
  ExpectNear(oracle, {2.0, 2.0, 2.0}, 1e-12);
  ExpectNear(pava(Vector{3.0, 1.0, 2.0}), oracle, 1e-12);
  ExpectNear(pava(Vector{4.0}), {4.0}, 0.0);
}

TEST(CheckLipschitz, IdenticalPairsAreSkipped) {
  const Vector a{0.3, 0.4};
  EXPECT_EQ(check_lipschitz(ConstraintSet::full_space(2), PenaltySpec::l1(1.0), {{a, a}}), 0.0);
  EXPECT_THROW(check_lipschitz(ConstraintSet::full_space(2), PenaltySpec::l1(1.0), {}), DomainError);
}

TEST(CheckLipschitz, BoxProjectionAcrossBoundary) {
  const SolveOptions opts;
  std::vector<std::pair<Vector, Vector>> pairs;
  for (int i = 0; i < 50; ++i) pairs.push_back({{0.9 - 0.01 * i}, {1.1 + 0.05 * i}});
  EXPECT_LE(check_lipschitz(ConstraintSet::box(1, -1.0, 1.0), PenaltySpec::zero(), pairs, opts),
            1.0 + 10 * opts.tol);
}

TEST(CheckLipschitz, SoftThresholdingIsNonexpansive) {
  std::mt19937_64 gen(3);
  const SolveOptions opts;
  std::vector<std::pair<Vector, Vector>> pairs;
  for (int i = 0; i < 1000; ++i) pairs.push_back({random_vector(gen, 4), random_vector(gen, 4)});
  // Independent oracle: direct soft thresholding.
  double oracle = 0.0;
  for (const auto& [a, b] : pairs) {
    Vector sa(4), sb(4);
    for (int c = 0; c < 4; ++c) {
      sa[c] = std::copysign(std::max(std::abs(a[c]) - 1.0, 0.0), a[c]);
      sb[c] = std::copysign(std::max(std::abs(b[c]) - 1.0, 0.0), b[c]);
    }
    oracle = std::max(oracle, dist2(sa, sb) / dist2(a, b));
  }
  const double ratio = check_lipschitz(ConstraintSet::full_space(4), PenaltySpec::l1(1.0), pairs, opts);
  EXPECT_NEAR(ratio, oracle, 1e-12);
  EXPECT_LE(ratio, 1.0 + 10 * opts.tol);
}

// Properties over every (set, penalty) pair in the catalog.
class CatalogProperties : public ::testing::Test {
 protected:
  static constexpr std::size_t kDim = 5;
};

TEST_F(CatalogProperties, SolutionsAreFeasibleAndBeatRandomCandidates) {
  std::mt19937_64 gen(21);
  const SolveOptions opts;
  for (const auto& [sname, set] : set_catalog(kDim)) {
    for (const auto& [fname, f] : penalty_catalog(kDim)) {
      SCOPED_TRACE(sname + " / " + fname);
      for (int rep = 0; rep < 10; ++rep) {
        const Vector x = random_vector(gen, kDim, 2.0);
        const Solution s = solve_penalized_lse(set, f, x, opts);
        ASSERT_TRUE(s.converged) << "residual " << s.residual;
        EXPECT_TRUE(contains(set, s.point, 10 * opts.tol));
        EXPECT_NEAR(s.objective, penalized_objective(f, x, s.point), 1e-12);
        const double slack = opts.tol * (1.0 + dot(x, x));
        for (int k = 0; k < 200; ++k) {
          const Vector c = k % 2 ? random_member(gen, set, 2.0)
                                 : project(set, axpy(s.point, 0.05, random_vector(gen, kDim, 1.0)), 1e-13);
          EXPECT_LE(s.objective, penalized_objective(f, x, c) + slack);
        }
      }
    }
  }
}

TEST_F(CatalogProperties, ExactPathsAgreeWithGenericSolver) {
  std::mt19937_64 gen(22);
  SolveOptions generic;
  generic.path = SolveOptions::Path::proximal_dykstra;
  generic.tol = 1e-11;
  const SolveOptions opts;
  for (const auto& [sname, set] : set_catalog(kDim)) {
    for (const auto& [fname, f] : penalty_catalog(kDim)) {
      SCOPED_TRACE(sname + " / " + fname);
      for (int rep = 0; rep < 100; ++rep) {
        const Vector x = random_vector(gen, kDim, 2.0);
        const Solution fast = solve_penalized_lse(set, f, x, opts);
        const Solution slow = solve_penalized_lse(set, f, x, generic);
        ASSERT_TRUE(slow.converged);
        EXPECT_LE(dist2(fast.point, slow.point), 10 * opts.tol);
      }
    }
  }
}

TEST_F(CatalogProperties, EstimatorMapIsOneLipschitz) {
  std::mt19937_64 gen(23);
  const SolveOptions opts;
  for (const auto& [sname, set] : set_catalog(kDim)) {
    for (const auto& [fname, f] : penalty_catalog(kDim)) {
      SCOPED_TRACE(sname + " / " + fname);
      std::vector<std::pair<Vector, Vector>> pairs;
      for (int i = 0; i < 1000; ++i) {
        const Vector a = random_vector(gen, kDim, 2.0);
        // Mix of far pairs and close pairs, where kinks matter most.
        const Vector b = i % 2 ? random_vector(gen, kDim, 2.0) : axpy(a, 0.01, random_vector(gen, kDim, 1.0));
        pairs.emplace_back(a, b);
      }
      EXPECT_LE(check_lipschitz(set, f, pairs, opts), 1.0 + 10 * opts.tol);
    }
  }
}

TEST(Subgradient, ApproachesClosedFormOnSmoothProblem) {
  SolveOptions opts;
  opts.path = SolveOptions::Path::subgradient;
  opts.step_rule = StepRule::diminishing(0.5);
  opts.max_iter = 20000;
  const auto set = ConstraintSet::box(3, -1.0, 1.0);
  const auto f = PenaltySpec::l1(0.3);
  const Vector x{1.7, -0.2, 0.6};
  const Solution sub = solve_penalized_lse(set, f, x, opts);
  const Solution exact = solve_penalized_lse(set, f, x);
  EXPECT_EQ(sub.method, SolveMethod::subgradient);
  EXPECT_LE(sub.objective, exact.objective + 1e-4);
  EXPECT_LE(dist2(sub.point, exact.point), 1e-2);
}

}  // namespace
}  // namespace seqlab
