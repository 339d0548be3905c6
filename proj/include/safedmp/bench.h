#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "safedmp/baselines.h"
#include "safedmp/dmp.h"
#include "safedmp/safe_exec.h"
#include "safedmp/scenario.h"
#include "safedmp/trajectory.h"

namespace safedmp {

inline constexpr int kReportSchemaVersion = 1;
inline constexpr double kReconvergeTolerance = 0.005;
inline constexpr int kReconvergeDwell = 10;
inline constexpr double kDefaultPerturbationSize = 0.05;
// Oscillation and stall checks ignore samples this close to the goal.
inline constexpr double kAwayFromGoal = 0.01;

// Both trajectories resampled uniformly to the reference length, then the
// mean over samples and dimensions of |executed - reference|.
double Mae(const TimedTrajectory& executed, const TimedTrajectory& reference);

// `executed` sampled at the reference instants (clamped to its own end), so
// a long convergence tail is not time-warped onto the reference.
TimedTrajectory AlignToReference(const TimedTrajectory& executed,
                                 const TimedTrajectory& reference);

struct ConvergenceTime {
  double seconds = 0.0;  // +infinity when the path never re-converges
  bool converged = true;
};

// First t >= t_apply from which ||x_measured - x_nominal|| < tol holds for
// `dwell` consecutive records, minus t_apply.
ConvergenceTime ConvergenceTimePerturb(const ExecutionLog& log, const Perturbation& perturbation,
                                       double tol = kReconvergeTolerance,
                                       int dwell = kReconvergeDwell);

// Mean over perturbations; not converged if any single one is not.
ConvergenceTime MeanConvergenceTimePerturb(const ExecutionLog& log,
                                           const std::vector<Perturbation>& perturbations,
                                           double tol = kReconvergeTolerance,
                                           int dwell = kReconvergeDwell);

// max(0, (t_goal with obstacles - t_goal nominal) / n_obstacles); 0 when
// there are no obstacles. Throws kUndefinedMetric for non-converged logs.
double ConvergenceTimeOa(const ExecutionLog& with_obstacles, const ExecutionLog& nominal,
                         int n_obstacles);

// More than 5 velocity reversals against the smoothed velocity within any
// 0.5 s window while farther than kAwayFromGoal from the goal.
bool OscillationFlag(const TimedTrajectory& path, const Vec& goal);

// Speed below `speed` for longer than `duration` seconds away from the goal.
bool StallFlag(const TimedTrajectory& path, const Vec& goal, double speed = 1e-4,
               double duration = 1.0);

// Records whose measured position lies inside an obstacle.
int CollisionCount(const ExecutionLog& log);
double MinClearance(const ExecutionLog& log);

// A scenario with its learned model, nominal rollout and the concrete
// obstacle and perturbation lists (random ones generated from the seed).
struct PreparedScenario {
  Scenario scenario;
  TimedTrajectory demo;  // preprocessed, starting at t = 0
  DmpModel model;
  TimedTrajectory nominal;
  std::vector<Obstacle> obstacles;
  std::vector<Perturbation> perturbations;
};

DmpModel LearnFromDemo(const TimedTrajectory& demo, int n_basis, double alpha);
TimedTrajectory LoadDemo(const Scenario& scenario);

// Learns from the scenario's demo unless `model` is given.
PreparedScenario Prepare(const Scenario& scenario, const std::optional<DmpModel>& model = {});

ExecutionLog Execute(const PreparedScenario& prepared, Method method, bool with_obstacles = true,
                     bool with_perturbations = true);

struct TimingResult {
  double mean_s = 0.0;
  double p99_s = 0.0;
  long steps = 0;
};

// Wall-clock time of the control computation alone, over `steps` measured
// iterations after `warmup` discarded ones; episodes restart at the goal.
TimingResult TimingHarness(const PreparedScenario& prepared, Method method, long steps = 10000,
                           long warmup = 100);

struct MetricsReport {
  std::string scenario;
  std::string method;
  std::uint64_t seed = 0;
  std::string status;
  std::optional<double> exec_time_mean_s;
  std::optional<double> exec_time_p99_s;
  std::optional<double> mae_nominal_m;
  std::optional<double> mae_perturbed_m;
  std::optional<double> conv_time_perturb_s;
  bool conv_perturb_failed = false;
  std::optional<double> conv_time_oa_s;
  int collision_count = 0;
  std::optional<double> min_clearance_m;
  bool oscillation_flag = false;
  bool stall_flag = false;
  std::string error;  // set when the cell could not be evaluated
};

struct EvaluateOptions {
  bool timing = false;
  long timing_steps = 10000;
};

// Runs the perturbed, unperturbed and obstacle-free executions the metrics
// need. `main_log` receives the run with obstacles and perturbations.
MetricsReport Evaluate(const PreparedScenario& prepared, Method method,
                       const EvaluateOptions& options = {}, ExecutionLog* main_log = nullptr);

// Every (scenario, method) cell; failures are recorded in the row. Runs on
// up to SAFEDMP_THREADS worker threads; row order is scenario-major.
std::vector<MetricsReport> Compare(const std::vector<Scenario>& scenarios,
                                   const std::vector<Method>& methods,
                                   const EvaluateOptions& options = {});

std::string ReportToJson(const std::vector<MetricsReport>& rows);
std::string ReportToText(const std::vector<MetricsReport>& rows);

}  // namespace safedmp
