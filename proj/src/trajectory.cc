#include "safedmp/trajectory.h"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace safedmp {

void TimedTrajectory::Validate() const {
  Require(times.size() == points.size(), ErrorCode::kInvalidInput,
          "trajectory has " + std::to_string(times.size()) + " times but " +
              std::to_string(points.size()) + " points");
  Require(times.size() >= 2, ErrorCode::kInvalidInput,
          "trajectory needs at least 2 samples, got " + std::to_string(times.size()));
  const auto d = points.front().size();
  Require(d >= 1, ErrorCode::kInvalidInput, "trajectory points must have dimension >= 1");
  for (std::size_t i = 0; i < times.size(); ++i) {
    Require(std::isfinite(times[i]), ErrorCode::kInvalidInput, "non-finite time stamp");
    Require(points[i].size() == d, ErrorCode::kInvalidInput,
            "sample " + std::to_string(i) + " has dimension " +
                std::to_string(points[i].size()) + ", expected " + std::to_string(d));
    Require(points[i].allFinite(), ErrorCode::kInvalidInput,
            "sample " + std::to_string(i) + " has a non-finite coordinate");
    if (i > 0) {
      Require(times[i] > times[i - 1], ErrorCode::kInvalidInput,
              "times must be strictly increasing (sample " + std::to_string(i) + ")");
    }
  }
}

bool IsUniform(const TimedTrajectory& traj, double tolerance) {
  const std::size_t n = traj.size();
  if (n < 2) return false;
  const double t0 = traj.times.front();
  const double span = traj.times.back() - t0;
  for (std::size_t i = 0; i < n; ++i) {
    const double grid = t0 + span * static_cast<double>(i) / static_cast<double>(n - 1);
    if (std::abs(traj.times[i] - grid) > tolerance) return false;
  }
  return true;
}

TimedTrajectory Resample(const TimedTrajectory& traj, int n) {
  Require(traj.size() >= 2, ErrorCode::kInvalidInput, "resample needs at least 2 input samples");
  Require(n >= 2, ErrorCode::kInvalidInput, "resample target count must be >= 2");
  traj.Validate();
  if (static_cast<int>(traj.size()) == n && IsUniform(traj)) return traj;

  const double t0 = traj.start_time();
  const double t1 = traj.end_time();
  TimedTrajectory out;
  out.times.resize(n);
  out.points.resize(n);
  std::size_t seg = 0;
  for (int i = 0; i < n; ++i) {
    const double t = (i == n - 1) ? t1 : t0 + (t1 - t0) * static_cast<double>(i) / (n - 1);
    while (seg + 2 < traj.size() && traj.times[seg + 1] < t) ++seg;
    out.times[i] = t;
    if (i == 0) {
      out.points[i] = traj.points.front();
    } else if (i == n - 1) {
      out.points[i] = traj.points.back();
    } else {
      const double ta = traj.times[seg];
      const double tb = traj.times[seg + 1];
      const double s = (t - ta) / (tb - ta);
      out.points[i] = (1.0 - s) * traj.points[seg] + s * traj.points[seg + 1];
    }
  }
  return out;
}

namespace {

struct FirstOrderSection {
  double b;   // numerator coefficient (both taps)
  double a1;  // denominator coefficient of y[n-1]
};

FirstOrderSection DesignSection(double cutoff_hz, double dt) {
  // Prewarped analog cutoff; each of the two cascaded sections contributes
  // half of the -3 dB at the cutoff.
  const double wc = 2.0 / dt * std::tan(std::numbers::pi * cutoff_hz * dt);
  const double w0 = wc / std::sqrt(std::numbers::sqrt2 - 1.0);
  const double k = w0 * dt / 2.0;
  return {k / (1.0 + k), (k - 1.0) / (1.0 + k)};
}

void FilterInPlace(std::vector<double>& x, const FirstOrderSection& s) {
  double x_prev = x.front();
  double y_prev = x.front();
  for (double& v : x) {
    const double y = s.b * (v + x_prev) - s.a1 * y_prev;
    x_prev = v;
    y_prev = y;
    v = y;
  }
}

}  // namespace

TimedTrajectory LowPass(const TimedTrajectory& traj, double cutoff_hz) {
  traj.Validate();
  Require(IsUniform(traj), ErrorCode::kInvalidInput,
          "low_pass requires uniform sampling; resample first");
  const std::size_t n = traj.size();
  const double dt = traj.duration() / static_cast<double>(n - 1);
  const double nyquist = 0.5 / dt;
  Require(cutoff_hz > 0.0 && cutoff_hz < nyquist, ErrorCode::kInvalidInput,
          "cutoff must lie in (0, " + std::to_string(nyquist) + ") Hz");

  const FirstOrderSection section = DesignSection(cutoff_hz, dt);
  const double w0 = (2.0 / dt) * section.b / (1.0 - section.b);  // inverse of k = w0 dt / 2
  // Constant extension covering six section time constants (>= 3 for the cascade).
  const auto pad = static_cast<std::size_t>(std::max(3.0, std::ceil(6.0 / (w0 * dt))));

  TimedTrajectory out = traj;
  std::vector<double> buf(n + 2 * pad);
  for (int dim = 0; dim < traj.dim(); ++dim) {
    for (std::size_t i = 0; i < pad; ++i) {
      buf[i] = traj.points.front()(dim);
      buf[n + pad + i] = traj.points.back()(dim);
    }
    for (std::size_t i = 0; i < n; ++i) buf[pad + i] = traj.points[i](dim);

    FilterInPlace(buf, section);
    FilterInPlace(buf, section);
    std::reverse(buf.begin(), buf.end());
    FilterInPlace(buf, section);
    FilterInPlace(buf, section);
    std::reverse(buf.begin(), buf.end());

    for (std::size_t i = 0; i < n; ++i) out.points[i](dim) = buf[pad + i];
  }
  return out;
}

TimedTrajectory LiftTo3d(const TimedTrajectory& traj, double z_height) {
  traj.Validate();
  Require(traj.dim() == 2, ErrorCode::kDimensionMismatch,
          "lift_to_3d expects 2D input, got dimension " + std::to_string(traj.dim()));
  TimedTrajectory out;
  out.times = traj.times;
  out.points.reserve(traj.size());
  for (const Vec& p : traj.points) {
    Vec q(3);
    q << p(0), p(1), z_height;
    out.points.push_back(std::move(q));
  }
  return out;
}

TimedTrajectory Rotate(const TimedTrajectory& traj, const Eigen::Matrix3d& rotation) {
  traj.Validate();
  Require(traj.dim() == 3, ErrorCode::kDimensionMismatch, "rotate expects 3D input");
  const double ortho_err = (rotation.transpose() * rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  Require(ortho_err <= 1e-9 && std::abs(rotation.determinant() - 1.0) <= 1e-9,
          ErrorCode::kInvalidInput, "rotation must be orthonormal with determinant +1");
  TimedTrajectory out;
  out.times = traj.times;
  out.points.reserve(traj.size());
  for (const Vec& p : traj.points) out.points.push_back(rotation * p);
  return out;
}

DerivedKinematics FiniteDifferences(const TimedTrajectory& traj) {
  Require(traj.size() >= 3, ErrorCode::kInvalidInput, "finite_differences needs N >= 3");
  traj.Validate();
  Require(IsUniform(traj), ErrorCode::kInvalidInput, "finite_differences requires uniform sampling");

  const std::size_t n = traj.size();
  const double h = traj.duration() / static_cast<double>(n - 1);
  const auto& x = traj.points;

  DerivedKinematics out;
  out.times = traj.times;
  out.positions = traj.points;
  out.velocities.resize(n);
  out.accelerations.resize(n);

  for (std::size_t i = 1; i + 1 < n; ++i) {
    out.velocities[i] = (x[i + 1] - x[i - 1]) / (2.0 * h);
    out.accelerations[i] = (x[i + 1] - 2.0 * x[i] + x[i - 1]) / (h * h);
  }
  out.velocities[0] = (-3.0 * x[0] + 4.0 * x[1] - x[2]) / (2.0 * h);
  out.velocities[n - 1] = (3.0 * x[n - 1] - 4.0 * x[n - 2] + x[n - 3]) / (2.0 * h);
  if (n >= 4) {
    out.accelerations[0] = (2.0 * x[0] - 5.0 * x[1] + 4.0 * x[2] - x[3]) / (h * h);
    out.accelerations[n - 1] = (2.0 * x[n - 1] - 5.0 * x[n - 2] + 4.0 * x[n - 3] - x[n - 4]) / (h * h);
  } else {
    out.accelerations[0] = out.accelerations[1];
    out.accelerations[n - 1] = out.accelerations[1];
  }
  return out;
}

Vec SampleAt(const TimedTrajectory& traj, double t) {
  if (t <= traj.times.front()) return traj.points.front();
  if (t >= traj.times.back()) return traj.points.back();
  const auto it = std::upper_bound(traj.times.begin(), traj.times.end(), t);
  const auto hi = static_cast<std::size_t>(it - traj.times.begin());
  const std::size_t lo = hi - 1;
  const double s = (t - traj.times[lo]) / (traj.times[hi] - traj.times[lo]);
  return (1.0 - s) * traj.points[lo] + s * traj.points[hi];
}

TimedTrajectory ClipToTime(const TimedTrajectory& traj, double t_end) {
  TimedTrajectory out;
  for (std::size_t i = 0; i < traj.size() && traj.times[i] <= t_end; ++i) {
    out.times.push_back(traj.times[i]);
    out.points.push_back(traj.points[i]);
  }
  if (!out.times.empty() && out.times.back() < t_end && traj.end_time() > t_end) {
    out.times.push_back(t_end);
    out.points.push_back(SampleAt(traj, t_end));
  }
  return out;
}

double PathLength(const TimedTrajectory& traj) {
  double length = 0.0;
  for (std::size_t i = 1; i < traj.size(); ++i) length += (traj.points[i] - traj.points[i - 1]).norm();
  return length;
}

double BoundingBoxDiagonal(const TimedTrajectory& traj) {
  Vec lo = traj.points.front();
  Vec hi = traj.points.front();
  for (const Vec& p : traj.points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return (hi - lo).norm();
}

TimedTrajectory Preprocess(const TimedTrajectory& demo, const PreprocessOptions& options) {
  demo.Validate();
  TimedTrajectory out = demo.dim() == 2 ? LiftTo3d(demo, options.z_height) : demo;
  if (options.rotation) out = Rotate(out, *options.rotation);
  out = Resample(out, options.resample_n);
  if (options.cutoff_hz > 0.0) out = LowPass(out, options.cutoff_hz);
  return out;
}

}  // namespace safedmp
