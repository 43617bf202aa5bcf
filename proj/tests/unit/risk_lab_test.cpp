#include "seqlab/risk_lab.hpp"

#include <gtest/gtest.h>

#include <random>

#include "generators.hpp"

namespace seqlab {
namespace {

using testing::random_vector;

TEST(RiskBound, ArithmeticValues) {
  EXPECT_EQ(risk_bound(0.0), 0.0);
  EXPECT_NEAR(risk_bound(1.0), 1.0 + 2.0 * std::sqrt(84.0) + 84.0, 1e-12);
  EXPECT_NEAR(risk_bound(1.0), 103.33, 5e-3);
  EXPECT_NEAR(risk_bound(4.0), 16.0 + 8.0 * std::sqrt(84.0) + 84.0, 1e-12);
  EXPECT_NEAR(risk_bound(4.0), 173.32, 5e-3);
  // Below one the min() terms switch branch.
  EXPECT_NEAR(risk_bound(0.25), 0.0625 + 2.0 * std::sqrt(84.0) * 0.125 + 21.0, 1e-12);
  EXPECT_THROW(risk_bound(-1.0), DomainError);
}

TEST(RiskBound, DerivativeMatchesFiniteDifferences) {
  for (double t : {0.1, 0.5, 0.9, 1.5, 3.0, 10.0}) {
    const double h = 1e-6;
    EXPECT_NEAR(risk_bound_derivative(t), (risk_bound(t + h) - risk_bound(t - h)) / (2 * h), 1e-4) << t;
  }
}

TEST(TailBound, VacuousCases) {
  EXPECT_EQ(tail_bound(1.0, 2.0), 1.0);  // 2 exp(-16/288) > 1
  EXPECT_NEAR(2.0 * std::exp(-16.0 / 288.0), 1.892, 1e-3);
  EXPECT_EQ(tail_bound(1.0, 0.0), 1.0);
  EXPECT_EQ(tail_bound(0.0, 0.0), 1.0);
  EXPECT_NEAR(tail_bound(1.0, 20.0), 2.0 * std::exp(-160000.0 / (32.0 * 441.0)), 1e-15);
}

TEST(ApplyEstimator, Examples) {
  EXPECT_EQ(apply_estimator(EstimatorSpec::clip(1.0), {2.5}).point, Vector{1.0});
  EXPECT_EQ(apply_estimator(EstimatorSpec::clip(1.0), {-0.5}).point, Vector{-0.5});
  const auto js = apply_estimator(EstimatorSpec::james_stein(), {1.0, 1.0, 1.0, 1.0}).point;
  for (double v : js) EXPECT_DOUBLE_EQ(v, 0.5);
  EXPECT_EQ(apply_estimator(EstimatorSpec::james_stein(), Vector(3, 0.0)).point, Vector(3, 0.0));
  EXPECT_EQ(apply_estimator(EstimatorSpec::zero(), {3.0, 1.0}).point, (Vector{0.0, 0.0}));
}

TEST(EstimatorSpec, DimensionRequirements) {
  EXPECT_THROW(EstimatorSpec::james_stein().check_dim(2), DomainError);
  EXPECT_NO_THROW(EstimatorSpec::james_stein().check_dim(3));
  EXPECT_THROW(EstimatorSpec::clip(1.0).check_dim(2), DomainError);
  EXPECT_THROW(EstimatorSpec::clip(0.0), DomainError);
  EXPECT_THROW(EstimatorSpec::penalized_lse(ConstraintSet::full_space(2), PenaltySpec::zero()).check_dim(3),
               DimensionError);
}

TEST(SimulateRisk, IdentityRiskIsDimension) {
  std::mt19937_64 gen(1);
  const auto r = simulate_risk(EstimatorSpec::identity(), random_vector(gen, 10), 4000, 11);
  EXPECT_NEAR(r.mean_sq_loss, 10.0, 3.0 * r.se);
  EXPECT_FALSE(r.bound_1co.has_value());
  EXPECT_TRUE(r.pass);
}

TEST(SimulateRisk, ZeroEstimatorIsExact) {
  const auto r = simulate_risk(EstimatorSpec::zero(), {1.0, -2.0, 0.5}, 10, 3);
  EXPECT_EQ(r.mean_sq_loss, 5.25);
  EXPECT_EQ(r.se, 0.0);
}

TEST(SimulateRisk, JamesSteinAtOrigin) {
  // n - (n - 2)^2 E[1 / chi^2_n] = 10 - 64 / 8.
  const auto r = simulate_risk(EstimatorSpec::james_stein(), Vector(10, 0.0), 4000, 12);
  EXPECT_NEAR(r.mean_sq_loss, 2.0, 3.0 * r.se);
}

TEST(SimulateRisk, JamesSteinBeatsIdentityAwayFromOrigin) {
  std::mt19937_64 gen(13);
  for (int rep = 0; rep < 5; ++rep) {
    const Vector theta = random_vector(gen, 6, 2.0);
    const auto js = simulate_risk(EstimatorSpec::james_stein(), theta, 2000, 100 + rep);
    const auto id = simulate_risk(EstimatorSpec::identity(), theta, 2000, 100 + rep);
    // Shared seeds give paired draws; the gap is far above MC noise here.
    EXPECT_LT(js.mean_sq_loss, id.mean_sq_loss);
  }
}

TEST(SimulateRisk, RejectsTooFewReps) {
  EXPECT_THROW(simulate_risk(EstimatorSpec::identity(), {0.0}, 1, 1), DomainError);
}

TEST(CheckRiskBound, SingletonHasZeroRiskAndBound) {
  const Vector theta{0.4, -0.1};
  const auto r = check_risk_bound(ConstraintSet::singleton(theta), PenaltySpec::zero(), theta, 50, 5);
  EXPECT_EQ(r.mean_sq_loss, 0.0);
  EXPECT_EQ(*r.t_theta_hat, 0.0);
  EXPECT_EQ(*r.bound_1co, 0.0);
  EXPECT_TRUE(r.pass);
}

TEST(CheckRiskBound, FullSpaceL1Passes) {
  RiskOptions opts;
  opts.width_reps = 400;
  const auto r = check_risk_bound(ConstraintSet::full_space(10), PenaltySpec::l1(1.0), Vector(10, 0.0), 2000, 6, opts);
  EXPECT_TRUE(r.pass);
  EXPECT_GT(*r.t_theta_hat, 0.0);
  EXPECT_LE(r.mean_sq_loss, *r.bound_1co);
  EXPECT_EQ(r.failures, 0u);
}

TEST(CheckRiskBound, ThetaOutsideSetThrows) {
  EXPECT_THROW(check_risk_bound(ConstraintSet::box(1, -1, 1), PenaltySpec::zero(), {3.0}, 10, 1), DomainError);
}

TEST(CheckRiskBound, TooManySolverFailuresFailTheRun) {
  RiskOptions opts;
  opts.solve.max_iter = 1;
  opts.width_reps = 20;
  const auto set = ConstraintSet::ball({0.0, 0.0}, 1.0);
  const auto r = check_risk_bound(set, PenaltySpec::l1(0.5), {0.0, 0.0}, 100, 2, opts);
  EXPECT_GT(r.failures, 1u);
  EXPECT_FALSE(r.pass);
}

TEST(CheckTailBound, BoxPassesOnDeltaGrid) {
  RiskOptions opts;
  opts.width_reps = 400;
  const auto r = check_tail_bound(ConstraintSet::box(10, -1.0, 1.0), PenaltySpec::zero(), Vector(10, 0.0),
                                  {0.0, 2.0, 3.0, 4.0, 5.0, 20.0}, 2000, 7, opts);
  EXPECT_TRUE(r.pass);
  ASSERT_EQ(r.empirical.size(), 6u);
  for (std::size_t i = 0; i < r.deltas.size(); ++i) {
    EXPECT_GE(r.empirical[i], 0.0);
    EXPECT_LE(r.empirical[i], 1.0);
    EXPECT_EQ(r.bounds[i], tail_bound(r.t_theta_hat, r.deltas[i]));
    EXPECT_GE(r.slack_bounds[i], r.bounds[i]);
  }
  EXPECT_FALSE(r.informative[0]);
  EXPECT_TRUE(r.informative[5]);
}

TEST(CheckTailBound, NegativeDeltaThrows) {
  EXPECT_THROW(check_tail_bound(ConstraintSet::full_space(1), PenaltySpec::zero(), {0.0}, {-1.0}, 10, 1),
               DomainError);
}

TEST(CheckSmoothness, IdenticalPointsPass) {
  RiskOptions opts;
  opts.width_reps = 200;
  const auto set = ConstraintSet::box(5, -1.0, 1.0);
  const Vector theta(5, 0.2);
  const auto r = check_smoothness(set, PenaltySpec::zero(), theta, theta, 500, 8, opts);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.distance, 0.0);
  EXPECT_EQ(r.t1, r.t2);
  EXPECT_NEAR(r.paired_excess, -r.risk1, 1e-12);
}

TEST(CheckSmoothness, BoxShiftAlongAxis) {
  RiskOptions opts;
  opts.width_reps = 300;
  Vector theta2(5, 0.0);
  theta2[0] = 0.5;
  const auto r = check_smoothness(ConstraintSet::box(5, -1.0, 1.0), PenaltySpec::zero(), Vector(5, 0.0), theta2,
                                  1000, 9, opts);
  EXPECT_TRUE(r.risk_pass);
  EXPECT_TRUE(r.ttheta_pass);
  EXPECT_NEAR(r.distance, 0.5, 1e-15);
  EXPECT_LE(r.interval_lo, r.t1);
  EXPECT_GE(r.interval_hi, r.t1);
}

TEST(TthetaInterval, ClosedForm) {
  const auto [lo, hi] = ttheta_interval(2.0, 0.25);
  const double r = std::sqrt(0.0625 + 2.0);
  EXPECT_DOUBLE_EQ(lo, 2.0 - r);
  EXPECT_DOUBLE_EQ(hi, 2.0 + r);
  EXPECT_EQ(ttheta_interval(0.1, 1.0).first, 0.0);
  EXPECT_EQ(ttheta_interval(3.0, 0.0).first, 3.0);
}

TEST(TailIntegral, BelowTwentyOneAndMatchesSimpson) {
  const auto q = tail_integral_constant();
  // Composite Simpson on [0, 400]; the integrand is below 1e-300 beyond.
  auto f = [](double x) { return x * std::exp(-std::pow(x, 4) / (32.0 * (1.0 + x) * (1.0 + x))); };
  const int m = 400000;
  const double h = 400.0 / m;
  double s = f(0.0) + f(400.0);
  for (int i = 1; i < m; ++i) s += (i % 2 ? 4.0 : 2.0) * f(i * h);
  s *= h / 3.0;
  EXPECT_NEAR(q.value, s, 1e-8);
  EXPECT_LE(q.value, 21.0);
  EXPECT_GT(q.value, 20.0);
}

TEST(TailMomentIdentity, HoldsForEmpiricalLosses) {
  const auto losses = loss_samples(ConstraintSet::monotone_cone(6), PenaltySpec::range(0.5), Vector(6, 0.0), 3000, 4);
  ASSERT_EQ(losses.size(), 3000u);
  const auto id = tail_moment_identity(losses);
  EXPECT_NEAR(id.second_moment, id.tail_integral, 1e-10 * id.second_moment);
  EXPECT_THROW(tail_moment_identity({}), DomainError);
  EXPECT_THROW(tail_moment_identity({-1.0}), DomainError);
}

TEST(TailMomentIdentity, HalfNormalMatchesUnitSecondMoment) {
  std::mt19937_64 gen(17);
  std::normal_distribution<double> nd;
  std::vector<double> xs(20000);
  for (double& x : xs) x = std::abs(nd(gen));
  const auto id = tail_moment_identity(xs);
  std::vector<double> sq(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) sq[i] = xs[i] * xs[i];
  EXPECT_NEAR(id.tail_integral, 1.0, 3.0 * mean_stderr(sq).se);
}

}  // namespace
}  // namespace seqlab
