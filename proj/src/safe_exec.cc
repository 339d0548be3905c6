#include "safedmp/safe_exec.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

namespace safedmp {

namespace {

constexpr double kProjectionSlack = 1e-12;
constexpr double kFeasibilityTolerance = 1e-9;

Vec LastAxis(int dim) {
  Vec v = Vec::Zero(dim);
  v(dim - 1) = 1.0;
  return v;
}


double Percentile99(std::vector<double> samples) {
  if (samples.empty()) return 0.0;
  std::sort(samples.begin(), samples.end());
  const auto idx = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(samples.size()))) - 1;
  return samples[std::min(idx, samples.size() - 1)];
}

}  // namespace

Obstacle Obstacle::Static(Vec center, double radius) {
  Obstacle o;
  o.velocity = Vec::Zero(center.size());
  o.center0 = std::move(center);
  o.radius = radius;
  return o;
}

Obstacle Obstacle::Moving(Vec center0, double radius, Vec velocity) {
  Obstacle o;
  o.center0 = std::move(center0);
  o.radius = radius;
  o.velocity = std::move(velocity);
  return o;
}

bool Obstacle::ActiveAt(double t) const {
  return !active_window || (t >= active_window->first && t <= active_window->second);
}

void Obstacle::Validate(int dim) const {
  Require(center0.size() == dim, ErrorCode::kDimensionMismatch,
          "obstacle center has dimension " + std::to_string(center0.size()) + ", expected " +
              std::to_string(dim));
  Require(center0.allFinite(), ErrorCode::kInvalidInput, "obstacle center must be finite");
  Require(std::isfinite(radius) && radius > 0.0, ErrorCode::kInvalidInput,
          "obstacle radius must be > 0");
  Require(velocity.size() == 0 || (velocity.size() == dim && velocity.allFinite()),
          ErrorCode::kDimensionMismatch, "obstacle velocity must be empty or match dimension");
  if (active_window) {
    Require(active_window->first < active_window->second, ErrorCode::kInvalidInput,
            "obstacle window needs t_start < t_end");
  }
}

Vec ObstaclePosition(const Obstacle& obstacle, double t) {
  Vec buffer;
  const Vec* c = ObstacleCenterAt(obstacle, t, buffer);
  if (c == nullptr) {
    return Vec::Constant(obstacle.center0.size(), std::numeric_limits<double>::infinity());
  }
  return *c;
}

void SafetyParams::Validate() const {
  Require(delta_gamma > 0.0, ErrorCode::kInvalidInput, "delta_gamma must be > 0");
  Require(gain > 0.0, ErrorCode::kInvalidInput, "STT gain K must be > 0");
  Require(clip_limit > 0.0 && clip_limit < 1.0, ErrorCode::kInvalidInput,
          "clip limit must lie in (0, 1)");
}

double SphereGeometry::ClearanceDistance(const Vec& x, const Vec& center, const Obstacle&,
                                         double clearance) const {
  return (x - center).norm() - clearance;
}

void SphereGeometry::ProjectToClearance(const Vec& x, const Vec& center, const Obstacle&,
                                        double clearance, const Vec& fallback_direction,
                                        Vec& out) const {
  const double dist = (x - center).norm();
  if (dist > 0.0) {
    out = center + (x - center) * (clearance / dist);
    return;
  }
  Vec dir = fallback_direction.size() == x.size() && fallback_direction.norm() > 0.0
                ? Vec(fallback_direction.normalized())
                : LastAxis(static_cast<int>(x.size()));
  out = center + dir * clearance;
}

const ObstacleGeometry& DefaultGeometry() {
  static const SphereGeometry sphere;
  return sphere;
}

// Shared by Reroute and the engine; `scratch` holds three d-vectors so the
// control loop does not allocate.
bool RerouteInPlace(Vec& position, std::span<const Obstacle> obstacles, double t,
                    double delta_gamma, const Vec& fallback_direction,
                    const ObstacleGeometry& geometry, RerouteScratch& scratch, int* passes) {
  const int dim = static_cast<int>(position.size());
  int applied = 0;
  for (int pass = 0; pass <= dim; ++pass) {
    const Obstacle* worst = nullptr;
    double worst_distance = -kProjectionSlack;
    for (const Obstacle& o : obstacles) {
      const Vec* c = ObstacleCenterAt(o, t, scratch.center);
      if (c == nullptr) continue;
      const double sd = geometry.ClearanceDistance(position, *c, o, o.radius + 0.5 * delta_gamma);
      if (sd < worst_distance) {
        worst_distance = sd;
        worst = &o;
        scratch.worst_center = *c;
      }
    }
    if (worst == nullptr) break;
    geometry.ProjectToClearance(position, scratch.worst_center, *worst,
                                worst->radius + 0.5 * delta_gamma, fallback_direction,
                                scratch.projected);
    position = scratch.projected;
    ++applied;
  }
  if (passes != nullptr) *passes = applied;
  if (applied <= dim) return true;  // the last pass found nothing to fix

  for (const Obstacle& o : obstacles) {
    const Vec* c = ObstacleCenterAt(o, t, scratch.center);
    if (c == nullptr) continue;
    if (geometry.ClearanceDistance(position, *c, o, o.radius + 0.5 * delta_gamma) <
        -kFeasibilityTolerance) {
      return false;
    }
  }
  return true;
}

RerouteResult Reroute(const Vec& target, std::span<const Obstacle> obstacles, double t,
                      double delta_gamma, const Vec& fallback_direction,
                      const ObstacleGeometry& geometry) {
  RerouteResult result{target, true, 0};
  RerouteScratch scratch;
  result.feasible = RerouteInPlace(result.position, obstacles, t, delta_gamma, fallback_direction,
                                   geometry, scratch, &result.passes);
  return result;
}

SttModulation ModulateStt(const Vec& x_measured, const Vec& x_safe, const SafetyParams& params,
                          double dt) {
  Require(x_measured.size() == x_safe.size(), ErrorCode::kDimensionMismatch,
          "measured and safe positions differ in dimension");
  params.Validate();
  SttModulation out{Vec(x_measured.size()), Vec(x_measured.size())};
  const double half_width = 0.5 * params.delta_gamma;
  for (Eigen::Index i = 0; i < x_measured.size(); ++i) {
    const double e = ClipError((x_measured(i) - x_safe(i)) / half_width, params.clip_limit);
    out.u(i) = e == 0.0 ? 0.0 : -params.gain * GainXi(e, params.delta_gamma) * LogError(e);
  }
  out.correction = out.u * dt;
  return out;
}

const char* RunStatusName(RunStatus status) {
  switch (status) {
    case RunStatus::kConverged:
      return "converged";
    case RunStatus::kNotConverged:
      return "not-converged";
    case RunStatus::kSafetyInfeasible:
      return "safety-infeasible";
  }
  return "unknown";
}

TimedTrajectory ExecutionLog::MeasuredPath() const {
  TimedTrajectory out;
  out.times.reserve(records.size());
  out.points.reserve(records.size());
  for (const StepRecord& r : records) {
    out.times.push_back(r.t);
    out.points.push_back(r.x_measured);
  }
  return out;
}

TimedTrajectory ExecutionLog::NominalPath() const {
  TimedTrajectory out;
  for (const StepRecord& r : records) {
    out.times.push_back(r.t);
    out.points.push_back(r.x_nominal);
  }
  return out;
}

void EngineConfig::Validate() const {
  Require(dt > 0.0, ErrorCode::kInvalidInput, "dt must be > 0");
  Require(goal_tolerance > 0.0, ErrorCode::kInvalidInput, "goal tolerance must be > 0");
  Require(horizon_factor > 0.0, ErrorCode::kInvalidInput, "horizon factor must be > 0");
  Require(!alpha_e || *alpha_e > 0.0, ErrorCode::kInvalidInput, "alpha_e must be > 0");
  Require(!k_c || *k_c > 0.0, ErrorCode::kInvalidInput, "k_c must be > 0");
  safety.Validate();
}

Plant::Plant(const PlantModel& model, Vec initial_position)
    : model_(model), position_(std::move(initial_position)) {
  Require(model_.kind == PlantModel::Kind::kIdeal || model_.time_constant > 0.0,
          ErrorCode::kInvalidInput, "plant time constant must be > 0");
}

const Vec& Plant::Advance(const Vec& command, double dt) {
  if (model_.kind == PlantModel::Kind::kIdeal) {
    position_ = command;
  } else {
    position_ += (1.0 - std::exp(-dt / model_.time_constant)) * (command - position_);
  }
  return position_;
}

SafeDmpEngine::SafeDmpEngine(DmpModel model, EngineConfig config, std::vector<Obstacle> obstacles,
                             const ObstacleGeometry& geometry)
    : model_(std::move(model)),
      config_(std::move(config)),
      obstacles_(std::move(obstacles)),
      geometry_(&geometry),
      alpha_e_(config_.alpha_e.value_or(CouplingRateFor(model_.alpha()))),
      k_c_(config_.k_c.value_or(TimingGainFor(model_.alpha()))),
      state_(DmpState::Initial(model_)) {
  config_.Validate();
  for (const Obstacle& o : obstacles_) o.Validate(model_.dim());
  Reset();
}

void SafeDmpEngine::Reset() {
  state_ = DmpState::Initial(model_);
  tube_center_ = model_.x0();
  records_.clear();
  const int d = model_.dim();
  psi_.resize(model_.n_basis());
  forcing_.resize(d);
  accel_.resize(d);
  out_.u_stt.resize(d);
}

const StepOutput& SafeDmpEngine::Compute(const Vec& x_measured, double t) {
  Require(x_measured.size() == model_.dim(), ErrorCode::kDimensionMismatch,
          "measured position has the wrong dimension");
  const double dt = config_.dt;
  const SafetyParams& safety = config_.safety;

  out_.t = t;
  out_.x_nominal = state_.x;
  out_.x_measured = x_measured;
  out_.tau = state_.tau;
  out_.z = state_.z;

  // Primitive prediction for t + dt.
  ForcingInto(model_, state_.z, psi_, forcing_);
  TransformationAccelInto(model_, state_, forcing_, accel_);
  out_.x_target = state_.x;
  AdvancePosition(out_.x_target, state_.v, accel_, dt);

  // Obstacle rerouting.
  if (obstacles_.empty()) {
    out_.x_safe = out_.x_target;
  } else {
    // a target exactly at a center is pushed along the primitive's motion
    out_.x_safe = out_.x_target;
    if (!RerouteInPlace(out_.x_safe, obstacles_, t, safety.delta_gamma, state_.v, *geometry_,
                        scratch_, nullptr)) {
      Fail(ErrorCode::kSafetyInfeasible,
           "overlapping clearance spheres leave no safe target at t = " + std::to_string(t));
    }
  }

  // Tube modulation around the safe reference for the current instant.
  const double half_width = 0.5 * safety.delta_gamma;
  for (int i = 0; i < model_.dim(); ++i) {
    const double e = ClipError((x_measured(i) - tube_center_(i)) / half_width, safety.clip_limit);
    out_.u_stt(i) = e == 0.0 ? 0.0 : -safety.gain * GainXi(e, safety.delta_gamma) * LogError(e);
  }
  out_.x_desired = out_.x_safe + out_.u_stt * dt;

  // Coupling error, time scale, phase, then the primitive state.
  state_.e_couple += alpha_e_ * (x_measured - state_.x - state_.e_couple) * dt;
  state_.tau = model_.tau_nominal() + k_c_ * state_.e_couple.squaredNorm();
  state_.z = PhaseStep(state_.z, state_.tau, dt, model_.alpha_z(), config_.phase);
  IntegrateStepInPlace(state_, accel_, dt);

  tube_center_ = out_.x_safe;
  return out_;
}

const Vec& SafeDmpEngine::Step(const Vec& x_measured, double t) {
  const StepOutput& out = Compute(x_measured, t);
  StepRecord rec;
  rec.t = out.t;
  rec.x_nominal = out.x_nominal;
  rec.x_target = out.x_target;
  rec.x_safe = out.x_safe;
  rec.x_desired = out.x_desired;
  rec.x_measured = out.x_measured;
  rec.tau = out.tau;
  rec.z = out.z;
  rec.min_clearance = MinClearance(out.x_measured, out.t);
  rec.u_stt = out.u_stt;
  records_.push_back(std::move(rec));
  return out.x_desired;
}

bool SafeDmpEngine::GoalReached(const Vec& x_measured) const {
  const double tol = config_.goal_tolerance;
  return (state_.x - model_.g()).norm() < tol && (x_measured - model_.g()).norm() < tol;
}

double SafeDmpEngine::MinClearance(const Vec& x, double t) const {
  double best = kNoObstacleClearance;
  Vec buffer;
  for (const Obstacle& o : obstacles_) {
    const Vec* c = ObstacleCenterAt(o, t, buffer);
    if (c == nullptr) continue;
    best = std::min(best, (x - *c).norm() - o.radius);
  }
  return best;
}

long PerturbationStep(const Perturbation& p, double dt) { return std::lround(p.t_apply / dt); }

ExecutionLog Run(const DmpModel& model, const EngineConfig& config,
                 const std::vector<Obstacle>& obstacles,
                 const std::vector<Perturbation>& perturbations, const PlantModel& plant_model) {
  SafeDmpEngine engine(model, config, obstacles);
  Plant plant(plant_model, model.x0());
  for (const Perturbation& p : perturbations) {
    Require(p.offset.size() == model.dim() && p.offset.allFinite() && p.t_apply >= 0.0,
            ErrorCode::kInvalidInput, "perturbation needs t >= 0 and a finite offset of dimension d");
  }

  auto measure = [&](long step) {
    Vec x = plant.position();
    for (const Perturbation& p : perturbations) {
      if (PerturbationStep(p, config.dt) == step) x += p.offset;
    }
    return x;
  };

  ExecutionLog log;
  log.dt = config.dt;
  const auto max_steps =
      static_cast<long>(std::ceil(config.horizon_factor * model.tau_nominal() / config.dt - 1e-9));
  std::vector<double> step_times;
  step_times.reserve(static_cast<std::size_t>(std::min(max_steps, 1L << 20)));

  Vec x_measured = measure(0);
  long step = 0;
  for (;; ++step) {
    const double t = static_cast<double>(step) * config.dt;
    log.t_final = t;
    if (engine.GoalReached(x_measured)) {
      log.status = RunStatus::kConverged;
      break;
    }
    if (step >= max_steps) {
      log.status = RunStatus::kNotConverged;
      log.message = "horizon reached before the goal";
      break;
    }
    const auto start = std::chrono::steady_clock::now();
    try {
      const Vec& command = engine.Step(x_measured, t);
      step_times.push_back(
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
      plant.Advance(command, config.dt);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kSafetyInfeasible) throw;
      log.status = RunStatus::kSafetyInfeasible;
      log.message = e.what();
      break;
    }
    x_measured = measure(step + 1);
  }

  log.records = engine.TakeRecords();
  if (log.records.empty()) {
    // Started at the goal: keep one record of the initial state.
    StepRecord rec;
    rec.t = 0.0;
    rec.x_nominal = rec.x_target = rec.x_safe = rec.x_desired = model.x0();
    rec.x_measured = x_measured;
    rec.tau = model.tau_nominal();
    rec.z = 1.0;
    rec.min_clearance = engine.MinClearance(x_measured, 0.0);
    rec.u_stt = Vec::Zero(model.dim());
    log.records.push_back(std::move(rec));
  }
  log.steps = step;
  log.converged = log.status == RunStatus::kConverged;
  if (!step_times.empty()) {
    double sum = 0.0;
    for (double s : step_times) sum += s;
    log.wall_time_mean_s = sum / static_cast<double>(step_times.size());
    log.wall_time_p99_s = Percentile99(std::move(step_times));
  }
  return log;
}

}  // namespace safedmp
