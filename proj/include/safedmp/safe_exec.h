#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "safedmp/common.h"
#include "safedmp/dmp.h"
#include "safedmp/stt.h"

namespace safedmp {

inline constexpr double kDefaultDt = 0.005;
inline constexpr double kDefaultTubeWidth = 0.1;
inline constexpr double kDefaultSttGain = 2.5e-4;
// Reported as min_clearance when no obstacle is active.
inline constexpr double kNoObstacleClearance = 1e9;

// Sphere moving with constant velocity (zero for static obstacles), optionally
// present only inside [t_start, t_end].
struct Obstacle {
  Vec center0;
  double radius = 0.0;
  Vec velocity;  // empty or zero: static
  std::optional<std::pair<double, double>> active_window;

  static Obstacle Static(Vec center, double radius);
  static Obstacle Moving(Vec center0, double radius, Vec velocity);

  bool ActiveAt(double t) const;
  void Validate(int dim) const;
};

// center0 + velocity t while active; a vector of +infinity otherwise.
Vec ObstaclePosition(const Obstacle& obstacle, double t);

// Non-allocating form for control loops: null when inactive, the stored
// center for static obstacles, otherwise the position written to `buffer`.
inline const Vec* ObstacleCenterAt(const Obstacle& obstacle, double t, Vec& buffer) {
  if (obstacle.active_window &&
      (t < obstacle.active_window->first || t > obstacle.active_window->second)) {
    return nullptr;
  }
  if (obstacle.velocity.size() == 0 || obstacle.velocity.isZero(0.0)) return &obstacle.center0;
  buffer = obstacle.center0 + obstacle.velocity * t;
  return &buffer;
}

struct SafetyParams {
  double delta_gamma = kDefaultTubeWidth;  // tube width
  double gain = kDefaultSttGain;           // K
  double clip_limit = kDefaultClipLimit;

  double Clearance(double radius) const { return radius + 0.5 * delta_gamma; }
  void Validate() const;
};

// Distance hook for rerouting. The engine only needs the signed distance to
// an obstacle's clearance surface and a projection onto that surface, so
// non-spherical shapes can be plugged in behind this interface.
class ObstacleGeometry {
 public:
  virtual ~ObstacleGeometry() = default;

  // Negative inside the clearance surface.
  virtual double ClearanceDistance(const Vec& x, const Vec& center, const Obstacle& obstacle,
                                   double clearance) const = 0;

  // `fallback_direction` is used when x carries no direction information
  // (e.g. exactly at a sphere center).
  virtual void ProjectToClearance(const Vec& x, const Vec& center, const Obstacle& obstacle,
                                  double clearance, const Vec& fallback_direction,
                                  Vec& out) const = 0;
};

class SphereGeometry final : public ObstacleGeometry {
 public:
  double ClearanceDistance(const Vec& x, const Vec& center, const Obstacle& obstacle,
                           double clearance) const override;
  void ProjectToClearance(const Vec& x, const Vec& center, const Obstacle& obstacle,
                          double clearance, const Vec& fallback_direction,
                          Vec& out) const override;
};

const ObstacleGeometry& DefaultGeometry();

struct RerouteResult {
  Vec position;
  bool feasible = true;
  int passes = 0;  // projections applied
};

// Radial projection of the target onto the clearance sphere (radius + 0.5
// delta_gamma) of the deepest-violated active obstacle, repeated for up to
// d + 1 passes. Infeasible when a violation beyond 1e-9 m remains.
// `fallback_direction` may be empty, in which case +z (the last axis) is used.
RerouteResult Reroute(const Vec& target, std::span<const Obstacle> obstacles, double t,
                      double delta_gamma, const Vec& fallback_direction = Vec(),
                      const ObstacleGeometry& geometry = DefaultGeometry());

struct RerouteScratch {
  Vec center;
  Vec worst_center;
  Vec projected;
};

// Allocation-free form of Reroute operating on `position`; returns feasibility.
bool RerouteInPlace(Vec& position, std::span<const Obstacle> obstacles, double t,
                    double delta_gamma, const Vec& fallback_direction,
                    const ObstacleGeometry& geometry, RerouteScratch& scratch, int* passes);

struct SttModulation {
  Vec u;           // m/s
  Vec correction;  // u dt
};

// Per-dimension tube law on a fixed-width tube centred at `x_safe`:
// e = (x_measured - x_safe) / (0.5 delta_gamma), clipped, then
// u = -K 4 / (delta_gamma (1 - e^2)) ln((1 + e) / (1 - e)).
SttModulation ModulateStt(const Vec& x_measured, const Vec& x_safe, const SafetyParams& params,
                          double dt);

// Impulse added to the measured position for exactly one control step.
struct Perturbation {
  double t_apply = 0.0;
  Vec offset;
};

struct StepRecord {
  double t = 0.0;
  Vec x_nominal;   // primitive position at t
  Vec x_target;    // primitive prediction for t + dt
  Vec x_safe;      // rerouted target
  Vec x_desired;   // command sent to the plant for t + dt
  Vec x_measured;  // measurement at t
  double tau = 0.0;
  double z = 0.0;
  double min_clearance = kNoObstacleClearance;  // to the nearest obstacle surface
  Vec u_stt;
};

enum class RunStatus { kConverged, kNotConverged, kSafetyInfeasible };
const char* RunStatusName(RunStatus status);

struct ExecutionLog {
  std::vector<StepRecord> records;
  RunStatus status = RunStatus::kNotConverged;
  bool converged = false;
  long steps = 0;
  double dt = kDefaultDt;
  double t_final = 0.0;  // time at which the loop stopped
  double wall_time_mean_s = 0.0;
  double wall_time_p99_s = 0.0;
  std::string message;

  TimedTrajectory MeasuredPath() const;
  TimedTrajectory NominalPath() const;
};

struct EngineConfig {
  double dt = kDefaultDt;
  double goal_tolerance = kDefaultGoalTolerance;
  double horizon_factor = kDefaultHorizonFactor;  // max horizon = factor * tau_nominal
  SafetyParams safety;
  // Unset gains follow alpha / 10 and 2 alpha.
  std::optional<double> alpha_e;
  std::optional<double> k_c;
  PhaseIntegration phase = PhaseIntegration::kExact;

  void Validate() const;
};

struct PlantModel {
  enum class Kind { kIdeal, kFirstOrderLag };
  Kind kind = Kind::kIdeal;
  double time_constant = 0.02;  // first-order lag only
};

// Simulated end-effector that receives position commands.
class Plant {
 public:
  Plant(const PlantModel& model, Vec initial_position);
  const Vec& Advance(const Vec& command, double dt);
  const Vec& position() const { return position_; }

 private:
  PlantModel model_;
  Vec position_;
};

// Output of one control iteration.
struct StepOutput {
  double t = 0.0;
  Vec x_nominal;
  Vec x_target;
  Vec x_safe;
  Vec x_desired;
  Vec x_measured;
  Vec u_stt;
  double tau = 0.0;
  double z = 0.0;
};

// The real-time loop: primitive prediction, obstacle rerouting, tube
// modulation and adaptive timing. One instance per executing scenario.
class SafeDmpEngine {
 public:
  SafeDmpEngine(DmpModel model, EngineConfig config, std::vector<Obstacle> obstacles,
                const ObstacleGeometry& geometry = DefaultGeometry());

  // Back to z = 1, x = x0, v = 0, e = 0 with an empty log.
  void Reset();

  // One iteration: returns X_desired and appends a StepRecord. Throws
  // kSafetyInfeasible when rerouting cannot clear overlapping obstacles.
  const Vec& Step(const Vec& x_measured, double t);

  // The control computation of Step without logging.
  const StepOutput& Compute(const Vec& x_measured, double t);

  // Both the primitive state and the measurement are within goal tolerance.
  bool GoalReached(const Vec& x_measured) const;

  // Distance from x to the nearest active obstacle surface at time t.
  double MinClearance(const Vec& x, double t) const;

  const DmpModel& model() const { return model_; }
  const EngineConfig& config() const { return config_; }
  const DmpState& state() const { return state_; }
  const std::vector<Obstacle>& obstacles() const { return obstacles_; }
  const std::vector<StepRecord>& records() const { return records_; }
  std::vector<StepRecord> TakeRecords() { return std::move(records_); }

 private:
  DmpModel model_;
  EngineConfig config_;
  std::vector<Obstacle> obstacles_;
  const ObstacleGeometry* geometry_;
  double alpha_e_;
  double k_c_;

  DmpState state_;
  Vec tube_center_;  // safe reference for the current instant
  std::vector<StepRecord> records_;

  // scratch
  StepOutput out_;
  Vec psi_;
  Vec forcing_;
  Vec accel_;
  RerouteScratch scratch_;
};

// Closed loop against a simulated plant until the goal is reached, the
// horizon (horizon_factor * tau_nominal) elapses, or rerouting fails.
ExecutionLog Run(const DmpModel& model, const EngineConfig& config,
                 const std::vector<Obstacle>& obstacles,
                 const std::vector<Perturbation>& perturbations = {},
                 const PlantModel& plant = PlantModel());

// Index of the control step whose measurement a perturbation displaces.
long PerturbationStep(const Perturbation& p, double dt);

}  // namespace safedmp
