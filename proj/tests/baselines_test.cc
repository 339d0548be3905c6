#include <cmath>

#include <gtest/gtest.h>

#include "safedmp/baselines.h"
#include "safedmp/bench.h"
#include "safedmp/generators.h"

namespace safedmp {
namespace {

Vec V3(double x, double y, double z) { return Eigen::Vector3d(x, y, z); }

DmpModel LineModel(const Vec& x0, const Vec& g) {
  const BasisLayout layout = MakeBasisLayout(25, PhaseDecayFor(kDefaultAlpha));
  return DmpModel(kDefaultAlpha, 1.0, x0, g, layout.centers, layout.widths,
                  Eigen::MatrixXd::Zero(x0.size(), 25));
}

TEST(ApfForce, ZeroOutsideInfluence) {
  const std::vector<Obstacle> obs{Obstacle::Static(V3(0, 0, 0), 0.1)};
  ApfParams p;
  EXPECT_EQ(ApfForce(V3(0.3, 0, 0), obs, 0.0, p), Vec::Zero(3));
  // d0 defaults to r + delta_gamma / 2 = 0.15, measured from the surface
  EXPECT_EQ(ApfForce(V3(0, 0.26, 0), obs, 0.0, p), Vec::Zero(3));
  EXPECT_NE(ApfForce(V3(0, 0.23, 0), obs, 0.0, p), Vec::Zero(3));
}

TEST(ApfForce, HalfInfluenceRadius) {
  const std::vector<Obstacle> obs{Obstacle::Static(V3(0, 0, 0), 0.1)};
  ApfParams p;
  p.eta = 0.05;
  p.d0 = 0.2;
  const double d = 0.1;  // d0 / 2
  const Vec f = ApfForce(V3(0, 0, 0.1 + d), obs, 0.0, p);
  const double expected = 0.05 * (1.0 / d - 1.0 / 0.2) * (1.0 / (d * d));
  EXPECT_NEAR(f(2), expected, 1e-9);
  EXPECT_EQ(f(0), 0.0);
  EXPECT_EQ(f(1), 0.0);
}

TEST(ApfForce, SymmetricPairCancelsLaterally) {
  const std::vector<Obstacle> obs{Obstacle::Static(V3(0.5, 0.12, 0), 0.1),
                                  Obstacle::Static(V3(0.5, -0.12, 0), 0.1)};
  const Vec f = ApfForce(V3(0.5, 0, 0), obs, 0.0, ApfParams{});
  EXPECT_EQ(f(1), 0.0);
  EXPECT_EQ(f.norm(), 0.0);
}

TEST(ApfForce, ClampedPerObstacleAndFloored) {
  const std::vector<Obstacle> obs{Obstacle::Static(V3(0, 0, 0), 0.1)};
  ApfParams p;
  p.max_force = 7.0;
  EXPECT_NEAR(ApfForce(V3(0.1001, 0, 0), obs, 0.0, p).norm(), 7.0, 1e-12);
  EXPECT_NEAR(ApfForce(V3(0.05, 0, 0), obs, 0.0, p).norm(), 7.0, 1e-12);  // inside: floor
  p.max_force.reset();
  EXPECT_TRUE(ApfForce(V3(0.05, 0, 0), obs, 0.0, p).allFinite());
}

TEST(ApfForce, PointsAwayFromEachObstacle) {
  const std::vector<Obstacle> obs{Obstacle::Static(V3(0.2, 0.3, -0.1), 0.1)};
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const Vec x = obs[0].center0 + rng.UnitVector(3) * rng.Uniform(0.1, 0.15);
    const Vec f = ApfForce(x, obs, 0.0, ApfParams{});
    EXPECT_GE(f.dot(x - obs[0].center0), 0.0);
  }
}

TEST(DmpApf, ObstacleFreeMatchesRollout) {
  const DmpModel m = LearnFromDemo(TwoFrequencySine(2.0, 401), 25, kDefaultAlpha);
  EngineConfig cfg;
  const ExecutionLog log = RunDmpApf(m, cfg, {}, ApfParams{});
  const TimedTrajectory nominal = Rollout(m, cfg.dt, 20 * m.tau_nominal()).trajectory;
  ASSERT_EQ(log.records.size() + 1, nominal.size());
  for (std::size_t k = 0; k < log.records.size(); ++k) {
    ASSERT_EQ(log.records[k].x_measured, nominal.points[k]);
    ASSERT_EQ(log.records[k].x_desired, nominal.points[k + 1]);
  }
}

TEST(DmpApf, ZeroGainIsBitIdenticalToRollout) {
  const DmpModel m = LearnFromDemo(TwoFrequencySine(2.0, 401), 25, kDefaultAlpha);
  EngineConfig cfg;
  ApfParams p;
  p.eta = 0.0;
  const std::vector<Obstacle> obs{Obstacle::Static(m.x0() + V3(0.2, 0.1, 0), 0.1)};
  const ExecutionLog log = RunDmpApf(m, cfg, obs, p);
  const TimedTrajectory nominal = Rollout(m, cfg.dt, 20 * m.tau_nominal()).trajectory;
  for (std::size_t k = 0; k < log.records.size(); ++k) {
    ASSERT_EQ(log.records[k].x_measured, nominal.points[k]);
  }
}

TEST(DmpApf, OffPathObstacleGivesDetour) {
  const DmpModel m = LineModel(V3(0, 0, 0), V3(1, 0, 0));
  const std::vector<Obstacle> obs{Obstacle::Static(V3(0.5, 0.12, 0), 0.05)};
  const ExecutionLog log = RunDmpApf(m, EngineConfig{}, obs, ApfParams{});
  ASSERT_TRUE(log.converged);
  double lateral = 0.0;
  for (const StepRecord& r : log.records) lateral = std::max(lateral, -r.x_measured(1));
  EXPECT_GT(lateral, 1e-4);
}

TEST(DmpApf, HeadOnObstacleStallsOrViolates) {
  const DmpModel m = LineModel(V3(0, 0, 0), V3(1, 0, 0));
  const std::vector<Obstacle> obs{Obstacle::Static(V3(0.5, 0, 0), 0.1)};
  const ExecutionLog log = RunDmpApf(m, EngineConfig{}, obs, ApfParams{});
  const bool stalled = StallFlag(log.MeasuredPath(), m.g());
  EXPECT_TRUE(stalled || CollisionCount(log) > 0);
  EXPECT_FALSE(log.converged);
}

TEST(DmpApf, PerturbationDisplacesState) {
  const DmpModel m = LineModel(V3(0, 0, 0), V3(1, 0, 0));
  const Perturbation p{0.2, V3(0, 0.05, 0)};
  const ExecutionLog log = RunDmpApf(m, EngineConfig{}, {}, ApfParams{}, {p});
  const std::size_t k = static_cast<std::size_t>(PerturbationStep(p, 0.005));
  EXPECT_NEAR(log.records[k].x_measured(1), 0.05, 1e-15);
  EXPECT_GT(log.records[k + 1].x_measured(1), 0.04);  // the DMP carries it forward
  EXPECT_TRUE(log.converged);
}

}  // namespace
}  // namespace safedmp
