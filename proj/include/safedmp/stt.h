#pragma once

#include <algorithm>
#include <functional>

#include "safedmp/common.h"

namespace safedmp {

inline constexpr double kDefaultClipLimit = 0.99;
inline constexpr double kMinTubeGap = 1e-9;

// Quantities of the tube law for one dimension at one instant.
struct TubeEval {
  double rho_s;    // upper + lower
  double rho_d;    // upper - lower
  double e;        // normalized error after clipping, in (-1, 1)
  double epsilon;  // ln((1 + e) / (1 - e))
  double xi;       // 4 / (rho_d (1 - e^2))
};

// e = 2 / (upper - lower) * (x - (upper + lower) / 2). Throws kInvalidTube
// when upper - lower < 1e-9.
double NormalizedError(double x, double lower, double upper);

inline double ClipError(double e, double limit) { return std::clamp(e, -limit, limit); }

// Throws kDomain when |e| >= 1.
double LogError(double e);

// e = (exp(eps) - 1) / (exp(eps) + 1)
double InverseLogError(double epsilon);

// Boundary-diverging gain 4 / (rho_d (1 - e^2)). Throws kDomain when |e| >= 1
// or rho_d <= 0.
double GainXi(double e, double rho_d);

TubeEval EvaluateTube(double x, double lower, double upper, double clip_limit);

// u = -k xi(clip(e)) eps(clip(e)); velocity-level correction.
double SttControl(double x, double lower, double upper, double k,
                  double clip_limit = kDefaultClipLimit);

// Largest |u| the clipped law can produce for a tube of width rho_d.
double SttControlBound(double k, double rho_d, double clip_limit = kDefaultClipLimit);

// Per-dimension time-varying bounds for standalone tube use.
class TubeBounds {
 public:
  using BoundFn = std::function<Vec(double)>;

  TubeBounds(BoundFn lower, BoundFn upper);

  // Fixed-width tube (width = delta) around a moving reference.
  static TubeBounds AroundReference(BoundFn center, double delta);

  // Throws kInvalidTube when any dimension's gap falls below 1e-9.
  void At(double t, Vec& lower, Vec& upper) const;

 private:
  BoundFn lower_;
  BoundFn upper_;
};

Vec SttControl(const Vec& x, const TubeBounds& bounds, double t, double k,
               double clip_limit = kDefaultClipLimit);

}  // namespace safedmp
