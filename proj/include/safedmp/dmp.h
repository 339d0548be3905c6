#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "safedmp/common.h"
#include "safedmp/trajectory.h"

namespace safedmp {

inline constexpr double kDefaultAlpha = 25.0;
inline constexpr int kDefaultBasisCount = 25;
inline constexpr double kDefaultGoalTolerance = 1e-3;
inline constexpr double kDefaultHorizonFactor = 20.0;

// Gain ratios are fixed relative to the spring gain alpha.
constexpr double BetaFor(double alpha) { return alpha / 4.0; }
constexpr double PhaseDecayFor(double alpha) { return alpha / 6.0; }
constexpr double CouplingRateFor(double alpha) { return alpha / 10.0; }
constexpr double TimingGainFor(double alpha) { return 2.0 * alpha; }

// A discrete-time learned movement primitive. Immutable after construction;
// safe to share between threads.
class DmpModel {
 public:
  // Validates every invariant; throws kInvalidInput on violation.
  DmpModel(double alpha, double tau_nominal, Vec x0, Vec g, Vec centers, Vec widths,
           Eigen::MatrixXd weights);

  int dim() const { return static_cast<int>(x0_.size()); }
  int n_basis() const { return static_cast<int>(centers_.size()); }
  double alpha() const { return alpha_; }
  double beta() const { return BetaFor(alpha_); }
  double alpha_z() const { return PhaseDecayFor(alpha_); }
  double tau_nominal() const { return tau_nominal_; }
  const Vec& x0() const { return x0_; }
  const Vec& g() const { return g_; }
  const Vec& centers() const { return centers_; }
  const Vec& widths() const { return widths_; }
  // d x n_basis
  const Eigen::MatrixXd& weights() const { return weights_; }

 private:
  double alpha_;
  double tau_nominal_;
  Vec x0_;
  Vec g_;
  Vec centers_;
  Vec widths_;
  Eigen::MatrixXd weights_;
};

// Centers equally spaced in time, c_j = exp(-alpha_z j / (n - 1)); widths
// h_j = 1 / (2 (c_{j+1} - c_j)^2) with the last width repeated.
struct BasisLayout {
  Vec centers;
  Vec widths;
};
BasisLayout MakeBasisLayout(int n_basis, double alpha_z);

// Mutable integration state; one per executing engine.
struct DmpState {
  Vec x;         // position
  Vec v;         // velocity
  double z;      // phase
  Vec e_couple;  // coupling error
  double tau;    // current time scale

  static DmpState Initial(const DmpModel& model);
};

enum class PhaseIntegration {
  kExact,  // z * exp(-alpha_z dt / tau)
  kEuler,  // z * (1 - alpha_z dt / tau)
};

Vec BasisActivations(const DmpModel& model, double z);

// f_i = (g_i - x0_i) z sum_j(psi_j w_ij) / sum_j(psi_j). Throws
// kDegeneratePhase when the activations sum below 1e-300.
Vec Forcing(const DmpModel& model, double z);

// Allocation-free variant for control loops; `psi` is scratch of size n_basis.
void ForcingInto(const DmpModel& model, double z, Vec& psi, Vec& out);

// Target forcing from demonstrated kinematics:
// tau^2 xdd - alpha (beta (g - x) - tau xd).
std::vector<Vec> TargetForcing(const DerivedKinematics& demo, double alpha, const Vec& g,
                               const Vec& x0, double tau);

// Locally weighted ridge fit per dimension and basis function. x0/g are the
// first/last demonstrated positions; the demonstration phase follows
// z(t) = exp(-alpha_z (t - t0) / tau).
DmpModel LearnWeights(const DerivedKinematics& demo, int n_basis, double alpha, double tau);

// Throws kStepSize when alpha_z dt / tau >= 1 and kInvalidInput for dt < 0 or
// z outside (0, 1].
double PhaseStep(double z, double tau, double dt, double alpha_z,
                 PhaseIntegration method = PhaseIntegration::kExact);

// (alpha (beta (g - x) - tau v) + f_total) / tau^2
Vec TransformationAccel(const DmpModel& model, const DmpState& state, const Vec& f_total);
void TransformationAccelInto(const DmpModel& model, const DmpState& state, const Vec& f_total,
                             Vec& out);

// x += v dt + 0.5 a dt^2, then v += a dt. Phase, coupling error and tau are
// carried over untouched.
DmpState IntegrateStep(const DmpState& state, const Vec& accel, double dt);

// The position half of IntegrateStep; shared so that predicted targets are
// bit-identical to the state the integrator later produces.
inline void AdvancePosition(Vec& x, const Vec& v, const Vec& accel, double dt) {
  x += v * dt + 0.5 * accel * dt * dt;
}

void IntegrateStepInPlace(DmpState& state, const Vec& accel, double dt);

struct RolloutResult {
  TimedTrajectory trajectory;
  bool converged = false;
};

// Obstacle-free integration from (x0, v = 0, z = 1) until ||x - g|| <
// goal_tolerance or `horizon` seconds elapse.
RolloutResult Rollout(const DmpModel& model, double dt, double horizon,
                      double goal_tolerance = kDefaultGoalTolerance,
                      PhaseIntegration method = PhaseIntegration::kExact);

// Euler step of de/dt = alpha_e (x_measured - x_nominal - e) followed by
// tau = tau_nominal + k_c ||e||^2.
DmpState AdaptTiming(const DmpState& state, const Vec& x_measured, const Vec& x_nominal,
                     double alpha_e, double k_c, double tau_nominal, double dt);

DmpModel Retarget(const DmpModel& model, const Vec& new_x0, const Vec& new_g);

// JSON document {d, n_basis, alpha, tau_nominal, x0, g, centers, widths,
// weights (row-major)}.
std::string ModelToJson(const DmpModel& model);
DmpModel ModelFromJson(const std::string& text);

}  // namespace safedmp
