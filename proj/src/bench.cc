#include "safedmp/bench.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <thread>

#include <json.hpp>

#include "safedmp/generators.h"
#include "safedmp/io.h"

namespace safedmp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Independent streams derived from the scenario seed.
constexpr std::uint64_t kRotationStream = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t kObstacleStream = 0xbf58476d1ce4e5b9ULL;
constexpr std::uint64_t kPerturbationStream = 0x94d049bb133111ebULL;

constexpr double kStartGoalMargin = 0.02;
constexpr int kPlacementAttempts = 500;

double Percentile99(std::vector<double>& samples) {
  std::sort(samples.begin(), samples.end());
  const auto idx = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(samples.size())));
  return samples[std::min(idx == 0 ? 0 : idx - 1, samples.size() - 1)];
}

// Closest approach of two constant-velocity points over [0, horizon].
double MinSeparation(const Vec& p0, const Vec& v0, const Vec& p1, const Vec& v1,
                     double horizon) {
  const Vec dp = p1 - p0;
  const Vec dv = v1 - v0;
  const double vv = dv.squaredNorm();
  const double t = vv > 0.0 ? std::clamp(-dp.dot(dv) / vv, 0.0, horizon) : 0.0;
  return (dp + dv * t).norm();
}

Vec UnitOrthogonal(Rng& rng, const Vec& axis) {
  for (;;) {
    Vec v = rng.UnitVector(static_cast<int>(axis.size()));
    v -= v.dot(axis) * axis;
    if (v.norm() > 1e-3) return v.normalized();
  }
}

std::vector<Obstacle> GenerateObstacles(const RandomObstacleSpec& spec, const PreparedScenario& p,
                                        std::uint64_t seed) {
  Rng rng(seed ^ kObstacleStream);
  const DmpModel& m = p.model;
  const int d = m.dim();
  const double tau = m.tau_nominal();
  const double horizon = p.scenario.engine.horizon_factor * tau;
  const double half_tube = 0.5 * p.scenario.engine.safety.delta_gamma;
  const double h = p.scenario.engine.dt;
  std::vector<Obstacle> placed = p.obstacles;

  for (int i = 0; i < spec.count; ++i) {
    bool ok = false;
    for (int attempt = 0; attempt < kPlacementAttempts && !ok; ++attempt) {
      const double t_cross = tau * rng.Uniform(spec.fraction_min, spec.fraction_max);
      const double r = rng.Uniform(spec.radius_min, spec.radius_max);
      const Vec on_path = SampleAt(p.nominal, t_cross);
      Vec tangent = SampleAt(p.nominal, t_cross + h) - SampleAt(p.nominal, t_cross - h);
      if (tangent.norm() < 1e-12) tangent = Vec::Unit(d, 0);
      tangent.normalize();
      // Offset below r keeps the path through the obstacle.
      const Vec center = on_path + UnitOrthogonal(rng, tangent) * (rng.Uniform(0.0, 0.5) * r);
      Vec velocity = Vec::Zero(d);
      if (spec.speed > 0.0) velocity = UnitOrthogonal(rng, tangent) * spec.speed;
      Obstacle o = Obstacle::Moving(center - velocity * t_cross, r, velocity);
      const double clear = r + half_tube;

      const Vec still = Vec::Zero(d);
      ok = MinSeparation(m.x0(), still, o.center0, velocity, 0.0) > clear + kStartGoalMargin &&
           MinSeparation(m.g(), still, o.center0, velocity, horizon) > clear + kStartGoalMargin;
      for (const Obstacle& other : placed) {
        if (!ok) break;
        const Vec other_v = other.velocity.size() ? other.velocity : Vec::Zero(d);
        ok = MinSeparation(other.center0, other_v, o.center0, velocity, horizon) >
             clear + other.radius + half_tube;
      }
      if (ok) placed.push_back(std::move(o));
    }
    Require(ok, ErrorCode::kInvalidInput,
            "could not place random obstacle " + std::to_string(i) + " with disjoint clearance");
  }
  return placed;
}

}  // namespace

double Mae(const TimedTrajectory& executed, const TimedTrajectory& reference) {
  Require(executed.size() >= 2 && reference.size() >= 2, ErrorCode::kInvalidInput,
          "mae needs at least two samples per trajectory");
  Require(executed.dim() == reference.dim(), ErrorCode::kInvalidInput,
          "mae trajectories differ in dimension");
  const int n = static_cast<int>(reference.size());
  const TimedTrajectory a = Resample(executed, n);
  const TimedTrajectory b = Resample(reference, n);
  double sum = 0.0;
  for (int k = 0; k < n; ++k) sum += (a.points[k] - b.points[k]).cwiseAbs().mean();
  return sum / n;
}

TimedTrajectory AlignToReference(const TimedTrajectory& executed,
                                 const TimedTrajectory& reference) {
  TimedTrajectory out;
  out.times = reference.times;
  out.points.reserve(reference.size());
  for (double t : reference.times) out.points.push_back(SampleAt(executed, t));
  return out;
}

ConvergenceTime ConvergenceTimePerturb(const ExecutionLog& log, const Perturbation& perturbation,
                                       double tol, int dwell) {
  const long start = PerturbationStep(perturbation, log.dt);
  const auto& recs = log.records;
  int streak = 0;
  for (std::size_t k = static_cast<std::size_t>(std::max(start, 0L)); k < recs.size(); ++k) {
    if ((recs[k].x_measured - recs[k].x_nominal).norm() < tol) {
      if (++streak == dwell) {
        return {std::max(0.0, recs[k + 1 - dwell].t - perturbation.t_apply), true};
      }
    } else {
      streak = 0;
    }
  }
  // A streak cut short by reaching the goal still counts.
  if (streak > 0 && log.converged) {
    return {std::max(0.0, recs[recs.size() - streak].t - perturbation.t_apply), true};
  }
  return {kInf, false};
}

ConvergenceTime MeanConvergenceTimePerturb(const ExecutionLog& log,
                                           const std::vector<Perturbation>& perturbations,
                                           double tol, int dwell) {
  Require(!perturbations.empty(), ErrorCode::kUndefinedMetric, "no perturbations to average");
  double sum = 0.0;
  for (const Perturbation& p : perturbations) {
    const ConvergenceTime c = ConvergenceTimePerturb(log, p, tol, dwell);
    if (!c.converged) return c;
    sum += c.seconds;
  }
  return {sum / static_cast<double>(perturbations.size()), true};
}

double ConvergenceTimeOa(const ExecutionLog& with_obstacles, const ExecutionLog& nominal,
                         int n_obstacles) {
  Require(n_obstacles >= 0, ErrorCode::kInvalidInput, "obstacle count must be >= 0");
  if (n_obstacles == 0) return 0.0;
  Require(with_obstacles.converged && nominal.converged, ErrorCode::kUndefinedMetric,
          "obstacle-avoidance convergence time needs converged runs");
  return std::max(0.0, (with_obstacles.t_final - nominal.t_final) / n_obstacles);
}

bool OscillationFlag(const TimedTrajectory& path, const Vec& goal) {
  const std::size_t n = path.size();
  if (n < 3) return false;
  std::vector<Vec> vel(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    vel[k] = (path.points[k + 1] - path.points[k]) / (path.times[k + 1] - path.times[k]);
  }
  const double dt = path.duration() / static_cast<double>(n - 1);
  const auto half = static_cast<std::size_t>(std::max(1.0, std::round(0.025 / dt)));

  std::vector<double> reversals;
  Vec smooth(goal.size());
  for (std::size_t k = 0; k < vel.size(); ++k) {
    if ((path.points[k] - goal).norm() <= kAwayFromGoal || vel[k].norm() < 1e-4) continue;
    const std::size_t lo = k >= half ? k - half : 0;
    const std::size_t hi = std::min(vel.size() - 1, k + half);
    smooth.setZero();
    for (std::size_t j = lo; j <= hi; ++j) smooth += vel[j];
    if (vel[k].dot(smooth) < 0.0) reversals.push_back(path.times[k]);
  }
  for (std::size_t i = 0, j = 0; j < reversals.size(); ++j) {
    while (reversals[j] - reversals[i] > 0.5) ++i;
    if (j - i + 1 > 5) return true;
  }
  return false;
}

bool StallFlag(const TimedTrajectory& path, const Vec& goal, double speed, double duration) {
  double since = -1.0;
  for (std::size_t k = 0; k + 1 < path.size(); ++k) {
    const double v = (path.points[k + 1] - path.points[k]).norm() /
                     (path.times[k + 1] - path.times[k]);
    if (v < speed && (path.points[k] - goal).norm() > kAwayFromGoal) {
      if (since < 0.0) since = path.times[k];
      if (path.times[k + 1] - since > duration) return true;
    } else {
      since = -1.0;
    }
  }
  return false;
}

int CollisionCount(const ExecutionLog& log) {
  return static_cast<int>(std::count_if(log.records.begin(), log.records.end(),
                                        [](const StepRecord& r) { return r.min_clearance < 0.0; }));
}

double MinClearance(const ExecutionLog& log) {
  double best = kNoObstacleClearance;
  for (const StepRecord& r : log.records) best = std::min(best, r.min_clearance);
  return best;
}

DmpModel LearnFromDemo(const TimedTrajectory& demo, int n_basis, double alpha) {
  return LearnWeights(FiniteDifferences(demo), n_basis, alpha, demo.duration());
}

TimedTrajectory LoadDemo(const Scenario& s) {
  TimedTrajectory raw;
  if (IsBuiltinSource(s.demo_source)) {
    raw = BuiltinDemo(s.demo_source, s.seed);
  } else {
    std::filesystem::path path(s.demo_source);
    if (path.is_relative() && !s.base_dir.empty()) path = std::filesystem::path(s.base_dir) / path;
    raw = ReadDemoCsv(path.string());
  }
  PreprocessOptions options = s.preprocess;
  if (s.rotation == RotationMode::kRandom) {
    Rng rng(s.seed ^ kRotationStream);
    options.rotation = RandomRotation(rng);
  } else if (s.rotation == RotationMode::kNone) {
    options.rotation.reset();
  }
  TimedTrajectory demo = Preprocess(raw, options);
  const double t0 = demo.start_time();
  for (double& t : demo.times) t -= t0;
  return demo;
}

PreparedScenario Prepare(const Scenario& scenario, const std::optional<DmpModel>& model) {
  scenario.Validate();
  TimedTrajectory demo;
  try {
    demo = LoadDemo(scenario);
  } catch (const Error&) {
    if (!model) throw;  // a given model does not need its demonstration
  }
  DmpModel learned = model ? *model : LearnFromDemo(demo, scenario.n_basis, scenario.alpha);
  const EngineConfig& e = scenario.engine;
  TimedTrajectory nominal =
      Rollout(learned, e.dt, e.horizon_factor * learned.tau_nominal(), e.goal_tolerance, e.phase)
          .trajectory;
  PreparedScenario p{scenario, std::move(demo), std::move(learned), std::move(nominal), {}, {}};
  p.scenario.apf.delta_gamma = e.safety.delta_gamma;
  const int d = p.model.dim();
  for (const Obstacle& o : scenario.obstacles) {
    o.Validate(d);
    p.obstacles.push_back(o);
  }
  if (scenario.random_obstacles) {
    p.obstacles = GenerateObstacles(*scenario.random_obstacles, p, scenario.seed);
  }
  for (const Perturbation& q : scenario.perturbations) {
    Require(q.offset.size() == d, ErrorCode::kDimensionMismatch,
            "perturbation offset has the wrong dimension");
    p.perturbations.push_back(q);
  }
  if (scenario.default_perturbations) {
    Rng rng(scenario.seed ^ kPerturbationStream);
    const double tau = p.model.tau_nominal();
    for (double fraction : {0.25, 0.6}) {
      p.perturbations.push_back({fraction * tau, rng.UnitVector(d) * kDefaultPerturbationSize});
    }
  }
  return p;
}

ExecutionLog Execute(const PreparedScenario& p, Method method, bool with_obstacles,
                     bool with_perturbations) {
  static const std::vector<Obstacle> kNone;
  static const std::vector<Perturbation> kNoPerturbations;
  const auto& obstacles = with_obstacles ? p.obstacles : kNone;
  const auto& perturbations = with_perturbations ? p.perturbations : kNoPerturbations;
  if (method == Method::kSafeDmp) {
    return Run(p.model, p.scenario.engine, obstacles, perturbations, p.scenario.plant);
  }
  return RunDmpApf(p.model, p.scenario.engine, obstacles, p.scenario.apf, perturbations);
}

TimingResult TimingHarness(const PreparedScenario& p, Method method, long steps, long warmup) {
  Require(steps >= 1 && warmup >= 0, ErrorCode::kInvalidInput, "timing needs steps >= 1");
  using Clock = std::chrono::steady_clock;
  const EngineConfig& cfg = p.scenario.engine;
  const auto episode_steps =
      static_cast<long>(std::ceil(cfg.horizon_factor * p.model.tau_nominal() / cfg.dt));
  std::vector<double> samples;
  samples.reserve(static_cast<std::size_t>(steps));
  const long total = steps + warmup;

  if (method == Method::kSafeDmp) {
    SafeDmpEngine engine(p.model, cfg, p.obstacles);
    Vec x = p.model.x0();
    long k = 0;
    for (long i = 0; i < total; ++i, ++k) {
      if (k >= episode_steps || engine.GoalReached(x)) {
        engine.Reset();
        x = p.model.x0();
        k = 0;
      }
      const double t = static_cast<double>(k) * cfg.dt;
      const auto start = Clock::now();
      const StepOutput& out = engine.Compute(x, t);
      const auto stop = Clock::now();
      x = out.x_desired;
      if (i >= warmup) samples.push_back(std::chrono::duration<double>(stop - start).count());
    }
  } else {
    DmpApfController controller(p.model, cfg, p.obstacles, p.scenario.apf);
    long k = 0;
    for (long i = 0; i < total; ++i, ++k) {
      if (k >= episode_steps ||
          (controller.state().x - p.model.g()).norm() < cfg.goal_tolerance) {
        controller.Reset();
        k = 0;
      }
      const double t = static_cast<double>(k) * cfg.dt;
      const auto start = Clock::now();
      controller.Compute(t);
      const auto stop = Clock::now();
      if (i >= warmup) samples.push_back(std::chrono::duration<double>(stop - start).count());
    }
  }
  TimingResult r;
  r.steps = steps;
  double sum = 0.0;
  for (double s : samples) sum += s;
  r.mean_s = sum / static_cast<double>(samples.size());
  r.p99_s = Percentile99(samples);
  return r;
}

MetricsReport Evaluate(const PreparedScenario& p, Method method, const EvaluateOptions& options,
                       ExecutionLog* main_log) {
  MetricsReport m;
  m.scenario = p.scenario.name;
  m.method = MethodName(method);
  m.seed = p.scenario.seed;
  const bool perturbed = !p.perturbations.empty();
  const bool has_obstacles = !p.obstacles.empty();

  ExecutionLog main = Execute(p, method, true, true);
  ExecutionLog unperturbed = perturbed ? Execute(p, method, true, false) : main;
  m.status = RunStatusName(main.status);

  if (p.demo.size() >= 2) {
    m.mae_nominal_m = Mae(AlignToReference(unperturbed.MeasuredPath(), p.demo), p.demo);
    if (perturbed) m.mae_perturbed_m = Mae(AlignToReference(main.MeasuredPath(), p.demo), p.demo);
  }
  if (perturbed) {
    const ConvergenceTime c = MeanConvergenceTimePerturb(main, p.perturbations);
    m.conv_perturb_failed = !c.converged;
    if (c.converged) m.conv_time_perturb_s = c.seconds;
  }

  m.collision_count = CollisionCount(main) + (perturbed ? CollisionCount(unperturbed) : 0);
  if (has_obstacles) {
    m.min_clearance_m = std::min(MinClearance(main), MinClearance(unperturbed));
    const ExecutionLog free = Execute(p, method, false, false);
    if (unperturbed.converged && free.converged && CollisionCount(unperturbed) == 0) {
      m.conv_time_oa_s =
          ConvergenceTimeOa(unperturbed, free, static_cast<int>(p.obstacles.size()));
    }
  } else {
    m.conv_time_oa_s = 0.0;
  }

  const TimedTrajectory path = main.MeasuredPath();
  m.oscillation_flag = OscillationFlag(path, p.model.g());
  m.stall_flag = StallFlag(path, p.model.g());

  if (options.timing) {
    const TimingResult t = TimingHarness(p, method, options.timing_steps);
    m.exec_time_mean_s = t.mean_s;
    m.exec_time_p99_s = t.p99_s;
  }
  if (main_log != nullptr) *main_log = std::move(main);
  return m;
}

std::vector<MetricsReport> Compare(const std::vector<Scenario>& scenarios,
                                   const std::vector<Method>& methods,
                                   const EvaluateOptions& options) {
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SAFEDMP_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap >= 1) threads = std::min<unsigned>(threads, static_cast<unsigned>(cap));
  }
  // Timing cells run alone so they do not compete for cores.
  if (options.timing) threads = 1;

  auto parallel_for = [threads](std::size_t n, auto&& body) {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next++; i < n; i = next++) body(i);
    };
    const unsigned count = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    if (count <= 1) {
      worker();
      return;
    }
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < count; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  };

  std::vector<std::optional<PreparedScenario>> prepared(scenarios.size());
  std::vector<std::string> prepare_error(scenarios.size());
  parallel_for(scenarios.size(), [&](std::size_t i) {
    try {
      prepared[i] = Prepare(scenarios[i]);
    } catch (const std::exception& e) {
      prepare_error[i] = e.what();
    }
  });

  std::vector<MetricsReport> rows(scenarios.size() * methods.size());
  parallel_for(rows.size(), [&](std::size_t cell) {
    const std::size_t s = cell / methods.size();
    const Method method = methods[cell % methods.size()];
    MetricsReport& row = rows[cell];
    if (!prepared[s]) {
      row.scenario = scenarios[s].name;
      row.method = MethodName(method);
      row.seed = scenarios[s].seed;
      row.status = "error";
      row.error = prepare_error[s];
      return;
    }
    try {
      row = Evaluate(*prepared[s], method, options);
    } catch (const std::exception& e) {
      row = MetricsReport{};
      row.scenario = scenarios[s].name;
      row.method = MethodName(method);
      row.seed = scenarios[s].seed;
      row.status = "error";
      row.error = e.what();
    }
  });
  return rows;
}

std::string ReportToJson(const std::vector<MetricsReport>& rows) {
  using nlohmann::ordered_json;
  auto opt = [](const std::optional<double>& v) -> ordered_json {
    return v ? ordered_json(*v) : ordered_json(nullptr);
  };
  ordered_json doc;
  doc["schema_version"] = kReportSchemaVersion;
  ordered_json list = ordered_json::array();
  for (const MetricsReport& r : rows) {
    ordered_json j;
    j["scenario"] = r.scenario;
    j["method"] = r.method;
    j["seed"] = r.seed;
    j["status"] = r.status;
    j["exec_time_mean_s"] = opt(r.exec_time_mean_s);
    j["exec_time_p99_s"] = opt(r.exec_time_p99_s);
    j["mae_nominal_m"] = opt(r.mae_nominal_m);
    j["mae_perturbed_m"] = opt(r.mae_perturbed_m);
    j["conv_time_perturb_s"] = opt(r.conv_time_perturb_s);
    j["conv_perturb_failed"] = r.conv_perturb_failed;
    j["conv_time_oa_s"] = opt(r.conv_time_oa_s);
    j["collision_count"] = r.collision_count;
    j["min_clearance_m"] = opt(r.min_clearance_m);
    j["oscillation_flag"] = r.oscillation_flag;
    j["stall_flag"] = r.stall_flag;
    if (!r.error.empty()) j["error"] = r.error;
    list.push_back(std::move(j));
  }
  doc["rows"] = std::move(list);
  return doc.dump(2) + "\n";
}

std::string ReportToText(const std::vector<MetricsReport>& rows) {
  const std::vector<std::string> header = {
      "scenario", "method",  "status",     "exec_mean", "exec_p99", "mae_nom",   "mae_pert",
      "conv_pert", "conv_oa", "collisions", "min_clear", "oscill",   "stall"};
  auto num = [](const std::optional<double>& v) -> std::string {
    if (!v) return "-";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3e", *v);
    return buf;
  };
  std::vector<std::vector<std::string>> table{header};
  for (const MetricsReport& r : rows) {
    table.push_back({r.scenario, r.method, r.status, num(r.exec_time_mean_s),
                     num(r.exec_time_p99_s), num(r.mae_nominal_m), num(r.mae_perturbed_m),
                     r.conv_perturb_failed ? "inf" : num(r.conv_time_perturb_s),
                     num(r.conv_time_oa_s), std::to_string(r.collision_count),
                     num(r.min_clearance_m), r.oscillation_flag ? "yes" : "no",
                     r.stall_flag ? "yes" : "no"});
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : table) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  for (const auto& row : table) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      out += row[c];
      if (c + 1 < row.size()) out += std::string(width[c] - row[c].size() + 2, ' ');
    }
    out += '\n';
  }
  return out;
}

}  // namespace safedmp
