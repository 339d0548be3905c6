#include "safedmp/stt.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace safedmp {

double NormalizedError(double x, double lower, double upper) {
  const double rho_d = upper - lower;
  if (!(rho_d >= kMinTubeGap)) {
    Fail(ErrorCode::kInvalidTube, "tube bounds [" + std::to_string(lower) + ", " +
                                      std::to_string(upper) + "] are degenerate");
  }
  return 2.0 / rho_d * (x - 0.5 * (upper + lower));
}

double LogError(double e) {
  if (!(std::abs(e) < 1.0)) Fail(ErrorCode::kDomain, "log_error needs |e| < 1");
  // 2 atanh(e) == ln((1 + e) / (1 - e)), exactly odd in floating point.
  return 2.0 * std::atanh(e);
}

double InverseLogError(double epsilon) { return std::tanh(0.5 * epsilon); }

double GainXi(double e, double rho_d) {
  if (!(std::abs(e) < 1.0)) Fail(ErrorCode::kDomain, "gain_xi needs |e| < 1");
  if (!(rho_d > 0.0)) Fail(ErrorCode::kDomain, "gain_xi needs rho_d > 0");
  return 4.0 / (rho_d * (1.0 - e * e));
}

TubeEval EvaluateTube(double x, double lower, double upper, double clip_limit) {
  Require(clip_limit > 0.0 && clip_limit < 1.0, ErrorCode::kInvalidInput,
          "clip limit must lie in (0, 1)");
  TubeEval out;
  out.rho_s = upper + lower;
  out.rho_d = upper - lower;
  out.e = ClipError(NormalizedError(x, lower, upper), clip_limit);
  out.epsilon = LogError(out.e);
  out.xi = GainXi(out.e, out.rho_d);
  return out;
}

double SttControl(double x, double lower, double upper, double k, double clip_limit) {
  Require(k > 0.0, ErrorCode::kInvalidInput, "STT gain must be > 0");
  const TubeEval eval = EvaluateTube(x, lower, upper, clip_limit);
  return -k * eval.xi * eval.epsilon;
}

double SttControlBound(double k, double rho_d, double clip_limit) {
  return k * GainXi(clip_limit, rho_d) * LogError(clip_limit);
}

TubeBounds::TubeBounds(BoundFn lower, BoundFn upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {}

TubeBounds TubeBounds::AroundReference(BoundFn center, double delta) {
  Require(delta > kMinTubeGap, ErrorCode::kInvalidTube, "tube width must be positive");
  return TubeBounds([center, delta](double t) -> Vec { return center(t).array() - 0.5 * delta; },
                    [center, delta](double t) -> Vec { return center(t).array() + 0.5 * delta; });
}

void TubeBounds::At(double t, Vec& lower, Vec& upper) const {
  lower = lower_(t);
  upper = upper_(t);
  Require(lower.size() == upper.size(), ErrorCode::kDimensionMismatch,
          "tube lower/upper bounds differ in dimension");
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    if (!(upper(i) - lower(i) >= kMinTubeGap)) {
      Fail(ErrorCode::kInvalidTube, "tube collapses in dimension " + std::to_string(i) +
                                        " at t = " + std::to_string(t));
    }
  }
}

Vec SttControl(const Vec& x, const TubeBounds& bounds, double t, double k, double clip_limit) {
  Vec lower, upper;
  bounds.At(t, lower, upper);
  Require(x.size() == lower.size(), ErrorCode::kDimensionMismatch,
          "state and tube dimensions differ");
  Vec u(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) u(i) = SttControl(x(i), lower(i), upper(i), k, clip_limit);
  return u;
}

}  // namespace safedmp
