#include "safedmp/generators.h"

#include <Eigen/Geometry>
#include <array>
#include <cmath>
#include <numbers>

namespace safedmp {

Rng::Rng(std::uint64_t seed) : state_(seed) {}

// splitmix64
std::uint64_t Rng::Next() {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double Rng::Uniform() { return static_cast<double>(Next() >> 11) * 0x1.0p-53; }

double Rng::Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

double Rng::Normal() {
  const double u1 = 1.0 - Uniform();  // (0, 1]
  const double u2 = Uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Vec Rng::UnitVector(int dim) {
  Vec v(dim);
  do {
    for (int i = 0; i < dim; ++i) v(i) = Normal();
  } while (v.norm() < 1e-12);
  return v.normalized();
}

Eigen::Matrix3d RandomRotation(Rng& rng) {
  const double u1 = rng.Uniform();
  const double u2 = rng.Uniform();
  const double u3 = rng.Uniform();
  const double a = std::sqrt(1.0 - u1);
  const double b = std::sqrt(u1);
  const double two_pi = 2.0 * std::numbers::pi;
  Eigen::Quaterniond q(b * std::cos(two_pi * u3), a * std::sin(two_pi * u2),
                       a * std::cos(two_pi * u2), b * std::sin(two_pi * u3));
  return q.normalized().toRotationMatrix();
}

namespace {

double MinJerkProfile(double s) { return s * s * s * (10.0 + s * (-15.0 + 6.0 * s)); }

template <typename Shape>
TimedTrajectory Sampled(double duration, int samples, Shape&& shape) {
  Require(samples >= 2 && duration > 0.0, ErrorCode::kInvalidInput,
          "generator needs duration > 0 and at least 2 samples");
  TimedTrajectory out;
  out.times.resize(samples);
  out.points.resize(samples);
  for (int i = 0; i < samples; ++i) {
    const double u = static_cast<double>(i) / (samples - 1);
    out.times[i] = duration * u;
    out.points[i] = shape(MinJerkProfile(u));
  }
  return out;
}

// Bezier curve through `ctrl` evaluated by de Casteljau.
Vec Bezier(const std::vector<Eigen::Vector2d>& ctrl, double s) {
  std::vector<Eigen::Vector2d> pts = ctrl;
  for (std::size_t level = pts.size() - 1; level > 0; --level) {
    for (std::size_t i = 0; i < level; ++i) pts[i] = (1.0 - s) * pts[i] + s * pts[i + 1];
  }
  return pts.front();
}

std::vector<Eigen::Vector2d> ShapeControlPoints(const std::string& shape) {
  using P = Eigen::Vector2d;
  if (shape == "angle") {
    return {P(-0.45, 0.40), P(-0.45, -0.05), P(-0.40, -0.25), P(-0.15, -0.05), P(0.0, 0.0)};
  }
  if (shape == "sshape") {
    return {P(-0.10, 0.45), P(-0.60, 0.40), P(-0.50, 0.05), P(0.25, 0.15), P(0.35, -0.25),
            P(-0.15, -0.20), P(0.0, 0.0)};
  }
  if (shape == "wshape") {
    return {P(-0.50, 0.30), P(-0.45, -0.45), P(-0.25, 0.55), P(-0.15, -0.45), P(0.05, 0.40),
            P(0.0, 0.0)};
  }
  Fail(ErrorCode::kInvalidInput, "unknown LASA-style shape '" + shape + "'");
}

}  // namespace

TimedTrajectory MinimumJerk(const Vec& x0, const Vec& g, double duration, int samples) {
  Require(x0.size() == g.size(), ErrorCode::kDimensionMismatch, "x0 and g differ in dimension");
  return Sampled(duration, samples, [&](double s) -> Vec { return x0 + s * (g - x0); });
}

TimedTrajectory TwoFrequencySine(double duration, int samples) {
  return Sampled(duration, samples, [](double s) -> Vec {
    const double pi = std::numbers::pi;
    Vec p(3);
    p(0) = 0.40 + 0.50 * s;
    p(1) = -0.20 + 0.30 * s + 0.12 * std::sin(pi * s) + 0.05 * std::sin(3.0 * pi * s);
    p(2) = 0.30 - 0.15 * s + 0.06 * std::sin(2.0 * pi * s) - 0.03 * std::sin(6.0 * pi * s);
    return p;
  });
}

std::vector<std::string> LasaStyleShapes() { return {"angle", "sshape", "wshape"}; }

TimedTrajectory LasaStyleStroke(const std::string& shape, double duration, int samples,
                                double noise_std, std::uint64_t seed) {
  const auto ctrl = ShapeControlPoints(shape);
  TimedTrajectory out = Sampled(duration, samples, [&](double s) { return Bezier(ctrl, s); });
  if (noise_std > 0.0) {
    Rng rng(seed);
    for (std::size_t i = 1; i + 1 < out.size(); ++i) {
      for (int d = 0; d < 2; ++d) out.points[i](d) += noise_std * rng.Normal();
    }
  }
  return out;
}

bool IsBuiltinSource(const std::string& source) { return source.rfind("builtin:", 0) == 0; }

TimedTrajectory BuiltinDemo(const std::string& id, std::uint64_t seed) {
  const std::string name = IsBuiltinSource(id) ? id.substr(8) : id;
  if (name == "minjerk") {
    Vec x0(3), g(3);
    x0 << 0.30, -0.20, 0.40;
    g << 0.80, 0.25, 0.20;
    return MinimumJerk(x0, g, 1.5, 301);
  }
  if (name == "sine2") return TwoFrequencySine(2.0, 401);
  if (name.rfind("lasa-", 0) == 0) {
    return LasaStyleStroke(name.substr(5), 2.5, 1000, 1e-3, seed);
  }
  Fail(ErrorCode::kInvalidInput, "unknown built-in demonstration '" + id + "'");
}

}  // namespace safedmp
