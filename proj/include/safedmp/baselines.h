#pragma once

#include <optional>
#include <span>
#include <vector>

#include "safedmp/common.h"
#include "safedmp/dmp.h"
#include "safedmp/safe_exec.h"

namespace safedmp {

inline constexpr double kDefaultApfGain = 0.05;
inline constexpr double kMinSurfaceDistance = 1e-6;

// Repulsive potential-field coupling for the DMP-APF comparison method.
struct ApfParams {
  double eta = kDefaultApfGain;
  // Influence radius; unset means each obstacle's clearance r + 0.5 delta_gamma.
  std::optional<double> d0;
  // Per-obstacle clamp (m/s^2); unset means 10 alpha beta ||g - x0|| / tau^2.
  std::optional<double> max_force;
  double delta_gamma = kDefaultTubeWidth;

  void Validate() const;
  double InfluenceRadius(const Obstacle& obstacle) const;
};

double DefaultApfForceLimit(const DmpModel& model);

// Sum over active obstacles of eta (1/d - 1/d0) / d^2 along (x - o_c) for
// surface distance d < d0, each term clamped to `max_force` (infinite when
// unset). d is floored at 1e-6.
Vec ApfForce(const Vec& x, std::span<const Obstacle> obstacles, double t,
             const ApfParams& params);

// Open-loop DMP with the potential-field term injected into the
// transformation system. The DMP state is the end-effector.
class DmpApfController {
 public:
  DmpApfController(DmpModel model, EngineConfig config, std::vector<Obstacle> obstacles,
                   ApfParams params);

  void Reset();

  // Shifts the DMP position (impulse perturbation).
  void Displace(const Vec& offset);

  // Advances the primitive by one step from time t; returns the new position.
  const Vec& Compute(double t);

  const DmpState& state() const { return state_; }
  const DmpModel& model() const { return model_; }
  double max_force() const { return *params_.max_force; }

 private:
  DmpModel model_;
  EngineConfig config_;
  std::vector<Obstacle> obstacles_;
  ApfParams params_;

  DmpState state_;
  Vec psi_;
  Vec forcing_;
  Vec accel_;
  Vec repulsion_;
  Vec center_;
};

// Same log layout as the SafeDMP run. Clearance violations are recorded,
// never prevented; u_stt is zero and tau stays nominal.
ExecutionLog RunDmpApf(const DmpModel& model, const EngineConfig& config,
                       const std::vector<Obstacle>& obstacles, const ApfParams& params,
                       const std::vector<Perturbation>& perturbations = {});

}  // namespace safedmp
