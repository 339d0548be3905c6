#include <cmath>

#include <gtest/gtest.h>

#include "safedmp/stt.h"

namespace safedmp {
namespace {

TEST(NormalizedError, CenterAndBounds) {
  EXPECT_EQ(NormalizedError(1.0, 0.0, 2.0), 0.0);
  EXPECT_EQ(NormalizedError(2.0, 0.0, 2.0), 1.0);
  EXPECT_EQ(NormalizedError(0.0, 0.0, 2.0), -1.0);
  EXPECT_DOUBLE_EQ(NormalizedError(1.5, 0.0, 2.0), 0.5);
}

TEST(NormalizedError, DegenerateTube) {
  try {
    NormalizedError(0.0, 1.0, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidTube);
  }
  EXPECT_THROW(NormalizedError(0.0, 1.0, 0.5), Error);
}

TEST(ClipError, Limits) {
  EXPECT_EQ(ClipError(0.5, 0.99), 0.5);
  EXPECT_EQ(ClipError(1.7, 0.99), 0.99);
  EXPECT_EQ(ClipError(-3.0, 0.99), -0.99);
}

TEST(LogError, Values) {
  EXPECT_EQ(LogError(0.0), 0.0);
  EXPECT_NEAR(LogError(0.5), std::log(3.0), 1e-15);
  EXPECT_NEAR(LogError(0.99), std::log(199.0), 1e-12);
  try {
    LogError(1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDomain);
  }
}

TEST(GainXi, Values) {
  EXPECT_EQ(GainXi(0.0, 2.0), 2.0);
  EXPECT_NEAR(GainXi(0.5, 2.0), 8.0 / 3.0, 1e-15);
  EXPECT_EQ(GainXi(0.3, 2.0), GainXi(-0.3, 2.0));
  EXPECT_THROW(GainXi(-1.0, 2.0), Error);
  EXPECT_LT(GainXi(0.2, 1.0), GainXi(0.6, 1.0));
}

TEST(SttControl, Values) {
  EXPECT_EQ(SttControl(1.0, 0.0, 2.0, 1.0), 0.0);
  EXPECT_NEAR(SttControl(1.5, 0.0, 2.0, 1.0), -(8.0 / 3.0) * std::log(3.0), 1e-12);
  EXPECT_NEAR(SttControl(1.3, 0.0, 2.0, 1.0), -SttControl(0.7, 0.0, 2.0, 1.0), 1e-15);
}

TEST(SttControl, ClippedOutsideTube) {
  const double bound = SttControlBound(1.0, 2.0);
  EXPECT_DOUBLE_EQ(SttControl(5.0, 0.0, 2.0, 1.0), -bound);
  EXPECT_DOUBLE_EQ(SttControl(-5.0, 0.0, 2.0, 1.0), bound);
}

TEST(SttControl, PointsToCenterAndMonotoneOnGrid) {
  double prev = 0.0;
  for (int i = 1; i <= 1000; ++i) {
    const double e = 0.99 * i / 1000.0;
    const double x = 1.0 + e;  // tube [0, 2]
    const double u = SttControl(x, 0.0, 2.0, 1.0);
    ASSERT_LE(u * (x - 1.0), 0.0);
    ASSERT_GT(std::abs(u), prev);
    ASSERT_LE(std::abs(u), SttControlBound(1.0, 2.0) * (1 + 1e-15));
    prev = std::abs(u);
  }
}

TEST(SttControl, ClosedLoopStaysInside) {
  const double lower = -0.05, upper = 0.05, k = 1e-3, dt = 1e-3;
  for (double x0 : {-0.0499, -0.02, 0.0, 0.03, 0.0499}) {
    double x = x0;
    for (int i = 0; i < 100000; ++i) {
      x += SttControl(x, lower, upper, k) * dt;
      ASSERT_GT(x, lower);
      ASSERT_LT(x, upper);
    }
  }
}

TEST(LogError, InverseRoundTrip) {
  for (int i = -99; i <= 99; ++i) {
    const double e = i / 100.0;
    EXPECT_NEAR(InverseLogError(LogError(e)), e, 1e-12);
  }
}

TEST(TubeBounds, AroundReference) {
  const TubeBounds tube = TubeBounds::AroundReference(
      [](double t) -> Vec { return Eigen::Vector2d(t, -t); }, 0.2);
  Vec lo, hi;
  tube.At(1.0, lo, hi);
  EXPECT_NEAR(lo(0), 0.9, 1e-15);
  EXPECT_NEAR(hi(1), -0.9, 1e-15);
  const Vec u = SttControl(Eigen::Vector2d(1.05, -1.0), tube, 1.0, 1.0);
  EXPECT_LT(u(0), 0.0);
  EXPECT_EQ(u(1), 0.0);
}

TEST(TubeBounds, CollapsedTubeThrows) {
  const TubeBounds tube([](double) -> Vec { return Vec::Zero(1); },
                        [](double t) -> Vec { return Vec::Constant(1, 1.0 - t); });
  Vec lo, hi;
  EXPECT_NO_THROW(tube.At(0.5, lo, hi));
  EXPECT_THROW(tube.At(1.0, lo, hi), Error);
}

}  // namespace
}  // namespace safedmp
