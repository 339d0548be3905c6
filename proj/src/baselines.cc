#include "safedmp/baselines.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace safedmp {

namespace {

void ApfForceInto(const Vec& x, std::span<const Obstacle> obstacles, double t,
                  const ApfParams& params, Vec& center, Vec& out) {
  out.setZero(x.size());
  const double limit = params.max_force.value_or(std::numeric_limits<double>::infinity());
  for (const Obstacle& o : obstacles) {
    const Vec* c = ObstacleCenterAt(o, t, center);
    if (c == nullptr) continue;
    const double dist = (x - *c).norm();
    const double d0 = params.InfluenceRadius(o);
    const double d_surf = std::max(dist - o.radius, kMinSurfaceDistance);
    if (d_surf >= d0 || dist == 0.0) continue;
    const double magnitude =
        std::min(params.eta * (1.0 / d_surf - 1.0 / d0) / (d_surf * d_surf), limit);
    out += (magnitude / dist) * (x - *c);
  }
}

double Percentile99(std::vector<double> samples) {
  std::sort(samples.begin(), samples.end());
  const auto idx = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(samples.size())));
  return samples[std::min(idx == 0 ? 0 : idx - 1, samples.size() - 1)];
}

}  // namespace

void ApfParams::Validate() const {
  Require(eta >= 0.0 && std::isfinite(eta), ErrorCode::kInvalidInput, "APF eta must be >= 0");
  Require(!d0 || *d0 > 0.0, ErrorCode::kInvalidInput, "APF d0 must be > 0");
  Require(!max_force || *max_force > 0.0, ErrorCode::kInvalidInput, "APF max_force must be > 0");
  Require(delta_gamma > 0.0, ErrorCode::kInvalidInput, "delta_gamma must be > 0");
}

double ApfParams::InfluenceRadius(const Obstacle& obstacle) const {
  return d0.value_or(obstacle.radius + 0.5 * delta_gamma);
}

double DefaultApfForceLimit(const DmpModel& model) {
  const double extent = std::max((model.g() - model.x0()).norm(), 1e-3);
  return 10.0 * model.alpha() * model.beta() * extent /
         (model.tau_nominal() * model.tau_nominal());
}

Vec ApfForce(const Vec& x, std::span<const Obstacle> obstacles, double t,
             const ApfParams& params) {
  params.Validate();
  Vec center, out;
  ApfForceInto(x, obstacles, t, params, center, out);
  return out;
}

DmpApfController::DmpApfController(DmpModel model, EngineConfig config,
                                   std::vector<Obstacle> obstacles, ApfParams params)
    : model_(std::move(model)),
      config_(std::move(config)),
      obstacles_(std::move(obstacles)),
      params_(std::move(params)),
      state_(DmpState::Initial(model_)) {
  config_.Validate();
  params_.Validate();
  for (const Obstacle& o : obstacles_) o.Validate(model_.dim());
  if (!params_.max_force) params_.max_force = DefaultApfForceLimit(model_);
  Reset();
}

void DmpApfController::Reset() {
  state_ = DmpState::Initial(model_);
  psi_.resize(model_.n_basis());
  forcing_.resize(model_.dim());
  accel_.resize(model_.dim());
  repulsion_.setZero(model_.dim());
  center_.resize(model_.dim());
}

void DmpApfController::Displace(const Vec& offset) {
  Require(offset.size() == model_.dim(), ErrorCode::kDimensionMismatch,
          "displacement has the wrong dimension");
  state_.x += offset;
}

const Vec& DmpApfController::Compute(double t) {
  const double dt = config_.dt;
  ForcingInto(model_, state_.z, psi_, forcing_);
  if (!obstacles_.empty() && params_.eta > 0.0) {
    ApfForceInto(state_.x, obstacles_, t, params_, center_, repulsion_);
    forcing_ += (state_.tau * state_.tau) * repulsion_;
  }
  TransformationAccelInto(model_, state_, forcing_, accel_);
  state_.z = PhaseStep(state_.z, state_.tau, dt, model_.alpha_z(), config_.phase);
  IntegrateStepInPlace(state_, accel_, dt);
  return state_.x;
}

ExecutionLog RunDmpApf(const DmpModel& model, const EngineConfig& config,
                       const std::vector<Obstacle>& obstacles, const ApfParams& params,
                       const std::vector<Perturbation>& perturbations) {
  DmpApfController controller(model, config, obstacles, params);
  for (const Perturbation& p : perturbations) {
    Require(p.offset.size() == model.dim() && p.offset.allFinite() && p.t_apply >= 0.0,
            ErrorCode::kInvalidInput, "perturbation needs t >= 0 and a finite offset of dimension d");
  }
  const double horizon = config.horizon_factor * model.tau_nominal();
  const TimedTrajectory nominal =
      Rollout(model, config.dt, horizon, config.goal_tolerance, config.phase).trajectory;
  const auto max_steps = static_cast<long>(std::ceil(horizon / config.dt - 1e-9));

  auto min_clearance = [&](const Vec& x, double t) {
    double best = kNoObstacleClearance;
    for (const Obstacle& o : obstacles) {
      if (!o.ActiveAt(t)) continue;
      best = std::min(best, (x - ObstaclePosition(o, t)).norm() - o.radius);
    }
    return best;
  };

  ExecutionLog log;
  log.dt = config.dt;
  std::vector<double> step_times;
  const Vec zero = Vec::Zero(model.dim());
  long step = 0;
  for (;; ++step) {
    const double t = static_cast<double>(step) * config.dt;
    for (const Perturbation& p : perturbations) {
      if (PerturbationStep(p, config.dt) == step) controller.Displace(p.offset);
    }
    log.t_final = t;
    const DmpState& s = controller.state();
    StepRecord rec;
    rec.t = t;
    rec.x_nominal = nominal.points[std::min<std::size_t>(static_cast<std::size_t>(step),
                                                         nominal.size() - 1)];
    rec.x_measured = s.x;
    rec.tau = s.tau;
    rec.z = s.z;
    rec.min_clearance = min_clearance(s.x, t);
    rec.u_stt = zero;
    if ((s.x - model.g()).norm() < config.goal_tolerance) {
      log.status = RunStatus::kConverged;
      if (log.records.empty()) {
        rec.x_target = rec.x_safe = rec.x_desired = s.x;
        log.records.push_back(std::move(rec));
      }
      break;
    }
    if (step >= max_steps) {
      log.status = RunStatus::kNotConverged;
      log.message = "horizon reached before the goal";
      break;
    }
    const auto start = std::chrono::steady_clock::now();
    const Vec& next = controller.Compute(t);
    step_times.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    rec.x_target = rec.x_safe = rec.x_desired = next;
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
