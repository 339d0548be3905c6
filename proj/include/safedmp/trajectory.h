#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <optional>
#include <vector>

#include "safedmp/common.h"

namespace safedmp {

// Time-stamped sequence of d-dimensional positions. Used for demonstrations,
// nominal rollouts and executed paths alike.
struct TimedTrajectory {
  std::vector<double> times;
  std::vector<Vec> points;

  std::size_t size() const { return times.size(); }
  int dim() const { return points.empty() ? 0 : static_cast<int>(points.front().size()); }
  double start_time() const { return times.front(); }
  double end_time() const { return times.back(); }
  double duration() const { return times.back() - times.front(); }

  // Throws kInvalidInput unless N >= 2, times strictly increase, every point
  // has the same dimension d >= 1 and all values are finite.
  void Validate() const;
};

// Positions with their finite-difference derivatives, sample-aligned.
struct DerivedKinematics {
  std::vector<double> times;
  std::vector<Vec> positions;
  std::vector<Vec> velocities;
  std::vector<Vec> accelerations;

  std::size_t size() const { return times.size(); }
  int dim() const { return positions.empty() ? 0 : static_cast<int>(positions.front().size()); }
};

// True when every sample lies within `tolerance` seconds of the uniform grid
// spanning [times.front(), times.back()].
bool IsUniform(const TimedTrajectory& traj, double tolerance = 1e-9);

// Piecewise-linear resampling onto n uniformly spaced instants. Endpoints are
// preserved exactly; an already-uniform trajectory of length n is returned
// unchanged.
TimedTrajectory Resample(const TimedTrajectory& traj, int n);

// Zero-phase critically damped second-order low-pass (two identical
// first-order bilinear sections, prewarped so the single-pass response is
// -3 dB at `cutoff_hz`), run forward then backward over a constant-extended
// copy of the signal. Requires uniform sampling.
TimedTrajectory LowPass(const TimedTrajectory& traj, double cutoff_hz);

// Appends a constant third coordinate to a planar trajectory.
TimedTrajectory LiftTo3d(const TimedTrajectory& traj, double z_height);

// Applies a proper rotation (orthonormal, det +1, checked to 1e-9).
TimedTrajectory Rotate(const TimedTrajectory& traj, const Eigen::Matrix3d& rotation);

// Central differences in the interior, second-order one-sided differences at
// both ends. Requires uniform sampling and N >= 3.
DerivedKinematics FiniteDifferences(const TimedTrajectory& traj);

// Linear interpolation at time t; clamps to the end samples outside the span.
Vec SampleAt(const TimedTrajectory& traj, double t);

// Samples with start_time() <= t <= t_end (plus the interpolated point at
// t_end when it falls between samples).
TimedTrajectory ClipToTime(const TimedTrajectory& traj, double t_end);

double PathLength(const TimedTrajectory& traj);

// Diagonal of the axis-aligned bounding box of all points.
double BoundingBoxDiagonal(const TimedTrajectory& traj);

struct PreprocessOptions {
  int resample_n = 500;
  double cutoff_hz = 5.0;
  double z_height = 0.25;
  std::optional<Eigen::Matrix3d> rotation;
};

// Demonstration pipeline: lift planar input to 3D, rotate, resample, smooth.
// Three-dimensional input skips the lift.
TimedTrajectory Preprocess(const TimedTrajectory& demo, const PreprocessOptions& options);

}  // namespace safedmp
