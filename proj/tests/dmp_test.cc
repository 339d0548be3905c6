#include <cmath>

#include <gtest/gtest.h>

#include "safedmp/bench.h"
#include "safedmp/dmp.h"
#include "safedmp/generators.h"

namespace safedmp {
namespace {

DmpModel ModelWith(const Eigen::MatrixXd& w, const Vec& x0, const Vec& g, double tau = 1.0,
                   double alpha = kDefaultAlpha) {
  const BasisLayout layout = MakeBasisLayout(static_cast<int>(w.cols()), PhaseDecayFor(alpha));
  return DmpModel(alpha, tau, x0, g, layout.centers, layout.widths, w);
}

DmpModel ZeroModel(const Vec& x0, const Vec& g, double tau = 1.0) {
  return ModelWith(Eigen::MatrixXd::Zero(x0.size(), 25), x0, g, tau);
}

double TrajectoryMae(const TimedTrajectory& a, const TimedTrajectory& b) {
  return Mae(AlignToReference(a, b), b);
}

TEST(DmpModel, GainRatios) {
  const DmpModel m = ZeroModel(Vec::Zero(2), Vec::Ones(2));
  EXPECT_NEAR(m.beta(), 25.0 / 4.0, 1e-12);
  EXPECT_NEAR(m.alpha_z(), 25.0 / 6.0, 1e-12);
  EXPECT_DOUBLE_EQ(CouplingRateFor(25.0), 2.5);
  EXPECT_DOUBLE_EQ(TimingGainFor(25.0), 50.0);
}

TEST(DmpModel, RejectsIncreasingCenters) {
  Vec c(2), h(2);
  c << 0.5, 0.9;
  h << 1.0, 1.0;
  EXPECT_THROW(DmpModel(25, 1, Vec::Zero(1), Vec::Ones(1), c, h, Eigen::MatrixXd::Zero(1, 2)),
               Error);
}

TEST(BasisLayout, CentersAndWidths) {
  const BasisLayout l = MakeBasisLayout(5, 2.0);
  for (int j = 0; j < 5; ++j) EXPECT_DOUBLE_EQ(l.centers(j), std::exp(-2.0 * j / 4.0));
  const double gap = l.centers(1) - l.centers(0);
  EXPECT_DOUBLE_EQ(l.widths(0), 1.0 / (2.0 * gap * gap));
  EXPECT_EQ(l.widths(4), l.widths(3));
}

TEST(BasisActivations, OneAtCenter) {
  const DmpModel m = ZeroModel(Vec::Zero(1), Vec::Ones(1));
  for (int j = 0; j < m.n_basis(); ++j) {
    EXPECT_DOUBLE_EQ(BasisActivations(m, m.centers()(j))(j), 1.0);
  }
}

TEST(BasisActivations, NarrowBasisVanishesOffCenter) {
  Vec c(2), h(2);
  c << 1.0, 0.5;
  h << 1e8, 1e8;
  const DmpModel m(25, 1, Vec::Zero(1), Vec::Ones(1), c, h, Eigen::MatrixXd::Zero(1, 2));
  const Vec psi = BasisActivations(m, 0.75);
  EXPECT_LT(psi.maxCoeff(), 1e-300);
}

TEST(BasisActivations, MatchesScalarEvaluation) {
  const DmpModel m = ZeroModel(Vec::Zero(1), Vec::Ones(1));
  const Vec psi = BasisActivations(m, 0.5);
  EXPECT_GT(psi.sum(), 0.0);
  for (int j = 0; j < m.n_basis(); ++j) {
    const double dz = 0.5 - m.centers()(j);
    EXPECT_NEAR(psi(j), std::exp(-m.widths()(j) * dz * dz), 1e-15);
    EXPECT_GE(psi(j), 0.0);
    EXPECT_LE(psi(j), 1.0);
  }
}

TEST(Forcing, ZeroWeights) {
  const DmpModel m = ZeroModel(Vec::Zero(3), Vec::Ones(3));
  for (double z : {1.0, 0.5, 0.01}) EXPECT_EQ(Forcing(m, z), Vec::Zero(3));
}

TEST(Forcing, ZeroAmplitudeDimension) {
  Vec x0(2), g(2);
  x0 << 0.0, 0.4;
  g << 1.0, 0.4;
  const DmpModel m = ModelWith(Eigen::MatrixXd::Constant(2, 25, 30.0), x0, g);
  for (double z : {1.0, 0.3}) {
    const Vec f = Forcing(m, z);
    EXPECT_EQ(f(1), 0.0);
    EXPECT_NE(f(0), 0.0);
  }
}

TEST(Forcing, VanishesWithPhase) {
  const DmpModel m = ModelWith(Eigen::MatrixXd::Constant(1, 25, 50.0), Vec::Zero(1), Vec::Ones(1));
  EXPECT_LT(Forcing(m, 1e-6).norm(), 1e-3);
  EXPECT_LT(Forcing(m, 1e-6).norm(), Forcing(m, 1e-3).norm());
}

TEST(Forcing, MatchesWeightedAverage) {
  Eigen::MatrixXd w(1, 25);
  for (int j = 0; j < 25; ++j) w(0, j) = std::sin(j);
  const DmpModel m = ModelWith(w, Vec::Constant(1, 0.2), Vec::Constant(1, 0.9));
  const double z = 0.37;
  double num = 0.0, den = 0.0;
  for (int j = 0; j < 25; ++j) {
    const double dz = z - m.centers()(j);
    const double psi = std::exp(-m.widths()(j) * dz * dz);
    num += psi * w(0, j);
    den += psi;
  }
  EXPECT_NEAR(Forcing(m, z)(0), 0.7 * z * num / den, 1e-12);
}

TEST(Forcing, DegeneratePhaseThrows) {
  Vec c(1), h(1);
  c << 1.0;
  h << 1e9;
  const DmpModel m(25, 1, Vec::Zero(1), Vec::Ones(1), c, h, Eigen::MatrixXd::Zero(1, 1));
  try {
    Forcing(m, 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegeneratePhase);
  }
}

DerivedKinematics RestAt(const Vec& g, int n) {
  DerivedKinematics k;
  for (int i = 0; i < n; ++i) {
    k.times.push_back(0.01 * i);
    k.positions.push_back(g);
    k.velocities.push_back(Vec::Zero(g.size()));
    k.accelerations.push_back(Vec::Zero(g.size()));
  }
  return k;
}

TEST(TargetForcing, ZeroAtEquilibrium) {
  const Vec g = Eigen::Vector3d(0.1, 0.2, 0.3);
  for (const Vec& f : TargetForcing(RestAt(g, 10), 25.0, g, g, 1.0)) EXPECT_EQ(f, Vec::Zero(3));
}

// The integrator's position sequence carries an O(dt) jerk residual
// (about dt/2 |da/dt|), so the target forcing of a pure attractor rollout
// vanishes linearly with the step size rather than exactly.
double AttractorResidual(double dt) {
  const DmpModel m = ZeroModel(Vec::Zero(1), Vec::Ones(1));
  const TimedTrajectory roll = Rollout(m, dt, 1.0, 1e-12).trajectory;
  const DerivedKinematics k = FiniteDifferences(roll);
  const std::vector<Vec> f = TargetForcing(k, 25.0, m.g(), m.x0(), 1.0);
  double worst = 0.0;
  for (std::size_t i = 2; i + 2 < f.size(); ++i) worst = std::max(worst, std::abs(f[i](0)));
  return worst;
}

TEST(TargetForcing, PureAttractorResidualIsFirstOrder) {
  const double coarse = AttractorResidual(1e-4);
  const double fine = AttractorResidual(5e-5);
  EXPECT_NEAR(coarse / fine, 2.0, 0.1);
  // |da/dt| at t = 0 is alpha^2 beta = 3906.25
  EXPECT_LT(coarse, 0.5 * 1e-4 * 3906.25 * 1.05);
}

TEST(TargetForcing, RecoversKnownForcing) {
  Eigen::MatrixXd w(1, 25);
  for (int j = 0; j < 25; ++j) w(0, j) = 40.0 * std::cos(0.4 * j);
  const DmpModel m = ModelWith(w, Vec::Zero(1), Vec::Ones(1));
  const double dt = 1e-5;
  const TimedTrajectory roll = Rollout(m, dt, 1.0, 1e-12).trajectory;
  const DerivedKinematics k = FiniteDifferences(roll);
  const std::vector<Vec> f = TargetForcing(k, 25.0, m.g(), m.x0(), 1.0);
  double worst = 0.0;
  for (std::size_t i = 2; i + 2 < f.size(); ++i) {
    const double z = std::exp(-m.alpha_z() * k.times[i]);
    worst = std::max(worst, std::abs(f[i](0) - Forcing(m, z)(0)));
  }
  EXPECT_LT(worst, 0.05);
}

TEST(LearnWeights, MinimumJerkRolloutWithinOnePercent) {
  const TimedTrajectory demo =
      MinimumJerk(Eigen::Vector3d(0.3, -0.2, 0.4), Eigen::Vector3d(0.8, 0.25, 0.2), 1.5, 301);
  const DmpModel m = LearnFromDemo(demo, 25, kDefaultAlpha);
  const TimedTrajectory roll = Rollout(m, 1e-3, 20 * m.tau_nominal()).trajectory;
  EXPECT_LT(TrajectoryMae(roll, demo), 0.01 * BoundingBoxDiagonal(demo));
}

TEST(LearnWeights, RecoversSynthesisingModel) {
  Eigen::MatrixXd w(3, 25);
  Rng rng(4);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 25; ++j) w(i, j) = rng.Uniform(-60.0, 60.0);
  const Vec x0 = Eigen::Vector3d(0, 0, 0);
  const Vec g = Eigen::Vector3d(0.6, -0.5, 0.6);  // ~1 m path
  const DmpModel truth = ModelWith(w, x0, g);
  const TimedTrajectory demo = Rollout(truth, 1e-3, 6.0, 1e-9).trajectory;
  const DmpModel learned = LearnWeights(FiniteDifferences(demo), 25, kDefaultAlpha, 1.0);
  const TimedTrajectory a = Rollout(truth, 1e-3, 3.0).trajectory;
  const TimedTrajectory b = Rollout(learned, 1e-3, 3.0).trajectory;
  EXPECT_LT(TrajectoryMae(b, a), 1e-3);
}

TEST(LearnWeights, ConstantDemoGivesZeroWeights) {
  const Vec p = Eigen::Vector3d(0.1, 0.2, 0.3);
  DerivedKinematics k = RestAt(p, 50);
  const DmpModel m = LearnWeights(k, 25, kDefaultAlpha, 0.49);
  EXPECT_EQ(m.weights(), Eigen::MatrixXd::Zero(3, 25));
  const TimedTrajectory roll = Rollout(m, 0.005, 1.0).trajectory;
  for (const Vec& x : roll.points) EXPECT_EQ(x, p);
}

TEST(LearnWeights, InsufficientData) {
  const TimedTrajectory demo = MinimumJerk(Vec::Zero(2), Vec::Ones(2), 1.0, 10);
  try {
    LearnFromDemo(demo, 25, kDefaultAlpha);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInsufficientData);
  }
}

TEST(PhaseStep, EulerStep) {
  EXPECT_NEAR(PhaseStep(1.0, 1.0, 0.005, 4.0, PhaseIntegration::kEuler), 0.98, 1e-15);
}

TEST(PhaseStep, ZeroStepIsIdentity) {
  EXPECT_EQ(PhaseStep(0.3, 1.0, 0.0, 4.0), 0.3);
  EXPECT_EQ(PhaseStep(0.3, 1.0, 0.0, 4.0, PhaseIntegration::kEuler), 0.3);
}

TEST(PhaseStep, StrictlyDecreasingAndPositive) {
  double z = 1.0;
  for (int i = 0; i < 5000; ++i) {
    const double next = PhaseStep(z, 1.0, 0.005, 25.0 / 6.0);
    ASSERT_GT(next, 0.0);
    ASSERT_LT(next, z);
    z = next;
  }
}

TEST(PhaseStep, EulerErrorShrinksWithStep) {
  auto rel_error = [](double dt) {
    double z = 1.0;
    const int n = static_cast<int>(std::lround(1.0 / dt));
    for (int i = 0; i < n; ++i) z = PhaseStep(z, 1.0, dt, 4.0, PhaseIntegration::kEuler);
    return std::abs(z / std::exp(-4.0) - 1.0);
  };
  EXPECT_NEAR(rel_error(1e-3) / rel_error(2e-3), 0.5, 0.02);
}

TEST(PhaseStep, ExactMatchesClosedFormOverThousandSteps) {
  const double alpha_z = 25.0 / 6.0, dt = 0.005, tau = 1.0;
  double z = 1.0;
  for (int i = 1; i <= 1000; ++i) {
    z = PhaseStep(z, tau, dt, alpha_z);
    const double exact = std::exp(-alpha_z * i * dt / tau);
    ASSERT_LE(std::abs(z - exact) / exact, 2.0 * alpha_z * dt / tau);
  }
}

TEST(PhaseStep, TooLargeStep) {
  try {
    PhaseStep(1.0, 0.1, 0.05, 4.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kStepSize);
  }
}

TEST(TransformationAccel, EquilibriumAndSpring) {
  const Vec g = Eigen::Vector3d(1, 2, 3);
  const DmpModel m = ZeroModel(Vec::Zero(3), g);
  DmpState s = DmpState::Initial(m);
  s.x = g;
  EXPECT_EQ(TransformationAccel(m, s, Vec::Zero(3)), Vec::Zero(3));
  const Vec delta = Eigen::Vector3d(0.1, 0, -0.2);
  s.x = g - delta;
  const Vec a = TransformationAccel(m, s, Vec::Zero(3));
  EXPECT_LT((a - m.alpha() * m.beta() * delta).norm(), 1e-12);
}

TEST(TransformationAccel, DoublingTauQuartersAccel) {
  const DmpModel m = ZeroModel(Vec::Zero(2), Vec::Ones(2));
  DmpState s = DmpState::Initial(m);
  s.x = Eigen::Vector2d(0.3, 0.1);
  s.v = Eigen::Vector2d(0.4, -0.2);
  const Vec f = Eigen::Vector2d(1.5, 2.0);
  const Vec a1 = TransformationAccel(m, s, f);
  s.tau = 2.0;
  s.v /= 2.0;  // keeps tau v fixed
  const Vec a2 = TransformationAccel(m, s, f);
  EXPECT_LT((a2 - a1 / 4.0).norm(), 1e-12);
}

TEST(IntegrateStep, ZeroMotionIsIdentity) {
  const DmpModel m = ZeroModel(Vec::Zero(2), Vec::Ones(2));
  const DmpState s = DmpState::Initial(m);
  const DmpState n = IntegrateStep(s, Vec::Zero(2), 0.01);
  EXPECT_EQ(n.x, s.x);
  EXPECT_EQ(n.v, s.v);
}

TEST(IntegrateStep, ConstantAccelerationIsExact) {
  const DmpModel m = ZeroModel(Vec::Zero(1), Vec::Ones(1));
  DmpState s = DmpState::Initial(m);
  const Vec a = Vec::Constant(1, 3.0);
  const double dt = 0.01;
  for (int k = 1; k <= 100; ++k) {
    s = IntegrateStep(s, a, dt);
    EXPECT_NEAR(s.x(0), 0.5 * 3.0 * (k * dt) * (k * dt), 1e-12);
  }
}

TEST(Rollout, FirstOrderAgainstFineReference) {
  Eigen::MatrixXd w(1, 25);
  for (int j = 0; j < 25; ++j) w(0, j) = 30.0 * std::sin(0.7 * j);
  const DmpModel m = ModelWith(w, Vec::Zero(1), Vec::Ones(1));
  const TimedTrajectory ref = Rollout(m, 1e-4, 1.0, 0.0).trajectory;
  auto deviation = [&](double dt) {
    const TimedTrajectory r = Rollout(m, dt, 1.0, 0.0).trajectory;
    double worst = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
      worst = std::max(worst, std::abs(r.points[i](0) - SampleAt(ref, r.times[i])(0)));
    }
    return worst;
  };
  const double coarse = deviation(0.01);
  const double fine = deviation(0.005);
  EXPECT_NEAR(coarse / fine, 2.0, 0.3);
}

TEST(Rollout, ZeroWeightsCriticallyDamped) {
  const DmpModel m = ZeroModel(Vec::Zero(1), Vec::Ones(1));
  const RolloutResult r = Rollout(m, 1e-3, 10.0, 1e-9);
  const double omega = m.alpha() / 2.0;  // critical damping at tau = 1
  double prev = -1.0;
  for (std::size_t i = 0; i < r.trajectory.size(); ++i) {
    const double x = r.trajectory.points[i](0);
    const double t = r.trajectory.times[i];
    EXPECT_LE(x, 1.0 + 1e-6);
    EXPECT_GE(x, prev);
    prev = x;
    EXPECT_NEAR(x, 1.0 - (1.0 + omega * t) * std::exp(-omega * t), 5e-3);
  }
  EXPECT_TRUE(r.converged);
}

TEST(Rollout, BoundedWeightsConverge) {
  Rng rng(9);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::MatrixXd w(3, 25);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 25; ++j) w(i, j) = rng.Uniform(-100.0, 100.0);
    const Vec g = rng.UnitVector(3);
    const DmpModel m = ModelWith(w, Vec::Zero(3), g);
    const TimedTrajectory r = Rollout(m, 0.005, 10.0, 0.0).trajectory;
    EXPECT_LT((r.points.back() - g).norm(), 1e-3);
  }
}

TEST(AdaptTiming, FixedPoint) {
  const DmpModel m = ZeroModel(Vec::Zero(2), Vec::Ones(2));
  const DmpState s = DmpState::Initial(m);
  const DmpState n = AdaptTiming(s, s.x, s.x, 2.5, 50.0, 1.0, 0.005);
  EXPECT_EQ(n.e_couple, Vec::Zero(2));
  EXPECT_EQ(n.tau, 1.0);
}

TEST(AdaptTiming, TauFromCouplingError) {
  const DmpModel m = ZeroModel(Vec::Zero(3), Vec::Ones(3));
  DmpState s = DmpState::Initial(m);
  s.e_couple = Eigen::Vector3d(0.1, 0, 0);
  // measured - nominal equal to e keeps e where it is
  const DmpState n = AdaptTiming(s, s.e_couple, Vec::Zero(3), 2.5, 50.0, 1.0, 0.005);
  EXPECT_NEAR(n.e_couple.norm(), 0.1, 1e-15);
  EXPECT_NEAR(n.tau, 1.5, 1e-12);
}

TEST(AdaptTiming, DecaysMonotonicallyAfterDeviation) {
  const DmpModel m = ZeroModel(Vec::Zero(3), Vec::Ones(3));
  DmpState s = DmpState::Initial(m);
  for (int i = 0; i < 20; ++i) s = AdaptTiming(s, Eigen::Vector3d(0.05, 0, 0), Vec::Zero(3), 2.5, 50.0, 1.0, 0.005);
  double prev = s.tau;
  EXPECT_GT(prev, 1.0);
  for (int i = 0; i < 2000; ++i) {
    s = AdaptTiming(s, Vec::Zero(3), Vec::Zero(3), 2.5, 50.0, 1.0, 0.005);
    ASSERT_LE(s.tau, prev);
    ASSERT_GE(s.tau, 1.0);
    prev = s.tau;
  }
  EXPECT_LT(s.tau - 1.0, 1e-3);
}

TEST(Retarget, SameEndpointsGiveSameRollout) {
  const TimedTrajectory demo = TwoFrequencySine(2.0, 401);
  const DmpModel m = LearnFromDemo(demo, 25, kDefaultAlpha);
  const DmpModel r = Retarget(m, m.x0(), m.g());
  EXPECT_EQ(Rollout(m, 0.005, 4.0).trajectory.points, Rollout(r, 0.005, 4.0).trajectory.points);
}

TEST(Retarget, DoubledAmplitudeIsAffineImage) {
  Eigen::MatrixXd w(1, 25);
  for (int j = 0; j < 25; ++j) w(0, j) = 20.0 * std::sin(0.5 * j);
  const DmpModel m = ModelWith(w, Vec::Constant(1, 0.1), Vec::Constant(1, 0.6));
  const DmpModel r = Retarget(m, Vec::Constant(1, 0.1), Vec::Constant(1, 1.1));
  const TimedTrajectory a = Rollout(m, 0.005, 3.0, 0.0).trajectory;
  const TimedTrajectory b = Rollout(r, 0.005, 3.0, 0.0).trajectory;
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NEAR(b.points[i](0), 0.1 + 2.0 * (a.points[i](0) - 0.1), 1e-3);
  }
}

TEST(Retarget, ZeroAmplitudeDimensionStaysConstant) {
  const TimedTrajectory demo = TwoFrequencySine(2.0, 401);
  const DmpModel m = LearnFromDemo(demo, 25, kDefaultAlpha);
  Vec g = m.g();
  g(1) = m.x0()(1);
  const DmpModel r = Retarget(m, m.x0(), g);
  for (const Vec& x : Rollout(r, 0.005, 4.0).trajectory.points) EXPECT_EQ(x(1), m.x0()(1));
}

TEST(ModelJson, RoundTripIsExact) {
  const TimedTrajectory demo = TwoFrequencySine(2.0, 401);
  const DmpModel m = LearnFromDemo(demo, 25, kDefaultAlpha);
  const DmpModel back = ModelFromJson(ModelToJson(m));
  EXPECT_EQ(back.x0(), m.x0());
  EXPECT_EQ(back.g(), m.g());
  EXPECT_EQ(back.centers(), m.centers());
  EXPECT_EQ(back.widths(), m.widths());
  EXPECT_EQ(back.weights(), m.weights());
  EXPECT_EQ(back.tau_nominal(), m.tau_nominal());
}

TEST(ModelJson, MalformedDocumentIsParseError) {
  try {
    ModelFromJson("{\"d\": 3}");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParse);
  }
}

}  // namespace
}  // namespace safedmp
