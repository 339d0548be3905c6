#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "safedmp/common.h"
#include "safedmp/trajectory.h"

namespace safedmp {

// Deterministic random source. Doubles are built from the raw 64-bit engine
// output so sequences do not depend on the standard library's distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  double Uniform();                     // [0, 1)
  double Uniform(double lo, double hi);  // [lo, hi)
  double Normal();                      // Box-Muller
  Vec UnitVector(int dim);

 private:
  std::uint64_t Next();

  std::uint64_t state_;
};

// Uniformly distributed proper rotation (Shoemake's quaternion method).
Eigen::Matrix3d RandomRotation(Rng& rng);

// Quintic minimum-jerk profile from x0 to g over `duration` seconds.
TimedTrajectory MinimumJerk(const Vec& x0, const Vec& g, double duration, int samples);

// 3D stroke whose lateral shape is a sum of two sines (1 and 3 half-periods)
// on top of a straight displacement, timed with a minimum-jerk profile.
TimedTrajectory TwoFrequencySine(double duration, int samples);

// Planar handwriting-style strokes ending at rest at the origin, in the
// spirit of the LASA dataset. Known shapes: "angle", "sshape", "wshape".
// `noise_std` adds seeded Gaussian sensor noise to every interior sample.
TimedTrajectory LasaStyleStroke(const std::string& shape, double duration, int samples,
                                double noise_std = 0.0, std::uint64_t seed = 0);

std::vector<std::string> LasaStyleShapes();

// Resolves "builtin:<id>" demonstration sources: minjerk, sine2,
// lasa-<shape>. Throws kInvalidInput for unknown ids.
TimedTrajectory BuiltinDemo(const std::string& id, std::uint64_t seed = 0);

bool IsBuiltinSource(const std::string& source);

}  // namespace safedmp
