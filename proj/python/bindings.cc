// Python bindings: learning, rollout, tube law, rerouting and scenario runs.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "safedmp/baselines.h"
#include "safedmp/bench.h"
#include "safedmp/dmp.h"
#include "safedmp/generators.h"
#include "safedmp/io.h"
#include "safedmp/safe_exec.h"
#include "safedmp/scenario.h"
#include "safedmp/stt.h"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace safedmp;

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

TimedTrajectory ToTrajectory(const Eigen::VectorXd& times, const RowMatrix& points) {
  Require(times.size() == points.rows(), ErrorCode::kDimensionMismatch,
          "times and points need the same number of rows");
  TimedTrajectory traj;
  traj.times.assign(times.data(), times.data() + times.size());
  for (Eigen::Index i = 0; i < points.rows(); ++i) traj.points.push_back(points.row(i).transpose());
  traj.Validate();
  return traj;
}

RowMatrix Stack(const std::vector<Vec>& rows, int dim) {
  RowMatrix out(static_cast<Eigen::Index>(rows.size()), dim);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    // x_target and u_stt are empty in logs read back from CSV
    if (rows[i].size() == dim) {
      out.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    } else {
      out.row(static_cast<Eigen::Index>(i)).setZero();
    }
  }
  return out;
}

py::dict LogToDict(const ExecutionLog& log, int dim) {
  std::vector<double> t, tau, z, clearance;
  std::vector<Vec> xn, xs, xd, xm;
  for (const StepRecord& r : log.records) {
    t.push_back(r.t);
    tau.push_back(r.tau);
    z.push_back(r.z);
    clearance.push_back(r.min_clearance);
    xn.push_back(r.x_nominal);
    xs.push_back(r.x_safe);
    xd.push_back(r.x_desired);
    xm.push_back(r.x_measured);
  }
  return py::dict("t"_a = t, "x_nominal"_a = Stack(xn, dim), "x_safe"_a = Stack(xs, dim),
                  "x_desired"_a = Stack(xd, dim), "x_measured"_a = Stack(xm, dim), "tau"_a = tau,
                  "z"_a = z, "min_clearance"_a = clearance,
                  "status"_a = RunStatusName(log.status), "converged"_a = log.converged,
                  "t_final"_a = log.t_final, "message"_a = log.message);
}

Obstacle MakeObstacle(const Vec& center, double radius, const std::optional<Vec>& velocity,
                      const std::optional<std::pair<double, double>>& window) {
  Obstacle o = velocity ? Obstacle::Moving(center, radius, *velocity) : Obstacle::Static(center, radius);
  o.active_window = window;
  o.Validate(static_cast<int>(center.size()));
  return o;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Safe execution of learned dynamic movement primitives";

  static py::exception<Error> error(m, "SafeDmpError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      // args = (message, code name)
      PyErr_SetObject(error.ptr(), py::make_tuple(e.what(), ErrorCodeName(e.code())).ptr());
    }
  });

  py::class_<DmpModel>(m, "DmpModel")
      .def_property_readonly("dim", &DmpModel::dim)
      .def_property_readonly("n_basis", &DmpModel::n_basis)
      .def_property_readonly("alpha", &DmpModel::alpha)
      .def_property_readonly("tau_nominal", &DmpModel::tau_nominal)
      .def_property_readonly("x0", &DmpModel::x0)
      .def_property_readonly("g", &DmpModel::g)
      .def_property_readonly("weights", &DmpModel::weights)
      .def("to_json", [](const DmpModel& model) { return ModelToJson(model); })
      .def_static("from_json", &ModelFromJson, "text"_a)
      .def("forcing", [](const DmpModel& model, double z) { return Forcing(model, z); }, "z"_a)
      .def("__repr__", [](const DmpModel& model) {
        return "<DmpModel dim=" + std::to_string(model.dim()) +
               " n_basis=" + std::to_string(model.n_basis()) +
               " tau=" + FormatDouble(model.tau_nominal()) + ">";
      });

  py::class_<Obstacle>(m, "Obstacle")
      .def(py::init(&MakeObstacle), "center"_a, "radius"_a, "velocity"_a = py::none(),
           "window"_a = py::none())
      .def_readonly("center0", &Obstacle::center0)
      .def_readonly("radius", &Obstacle::radius)
      .def_readonly("velocity", &Obstacle::velocity)
      .def("position", &ObstaclePosition, "t"_a);

  m.def(
      "learn",
      [](const Eigen::VectorXd& times, const RowMatrix& points, int n_basis, double alpha) {
        return LearnFromDemo(ToTrajectory(times, points), n_basis, alpha);
      },
      "times"_a, "points"_a, "n_basis"_a = kDefaultBasisCount, "alpha"_a = kDefaultAlpha,
      "Fit a primitive to a uniformly sampled demonstration (rows of points).");

  m.def(
      "rollout",
      [](const DmpModel& model, double dt, std::optional<double> horizon, double tolerance) {
        const RolloutResult r =
            Rollout(model, dt, horizon.value_or(kDefaultHorizonFactor * model.tau_nominal()),
                    tolerance);
        const Eigen::Map<const Eigen::VectorXd> t(r.trajectory.times.data(),
                                                  static_cast<Eigen::Index>(r.trajectory.size()));
        return py::make_tuple(Eigen::VectorXd(t), Stack(r.trajectory.points, model.dim()),
                              r.converged);
      },
      "model"_a, "dt"_a = kDefaultDt, "horizon"_a = py::none(),
      "tolerance"_a = kDefaultGoalTolerance, "Open-loop integration: (times, points, converged).");

  m.def(
      "builtin_demo",
      [](const std::string& id, std::uint64_t seed) {
        const TimedTrajectory d = BuiltinDemo(id, seed);
        const Eigen::Map<const Eigen::VectorXd> t(d.times.data(), static_cast<Eigen::Index>(d.size()));
        return py::make_tuple(Eigen::VectorXd(t), Stack(d.points, d.dim()));
      },
      "id"_a, "seed"_a = 0);

  m.def("stt_control", py::overload_cast<double, double, double, double, double>(&SttControl),
        "x"_a, "lower"_a, "upper"_a, "k"_a = kDefaultSttGain, "clip_limit"_a = kDefaultClipLimit);
  m.def("log_error", &LogError, "e"_a);
  m.def("inverse_log_error", &InverseLogError, "epsilon"_a);

  m.def(
      "reroute",
      [](const Vec& target, const std::vector<Obstacle>& obstacles, double t, double delta_gamma) {
        const RerouteResult r = Reroute(target, obstacles, t, delta_gamma);
        return py::make_tuple(r.position, r.feasible, r.passes);
      },
      "target"_a, "obstacles"_a, "t"_a = 0.0, "delta_gamma"_a = kDefaultTubeWidth,
      "Project a target out of clearance spheres: (position, feasible, passes).");

  m.def(
      "run",
      [](const DmpModel& model, const std::vector<Obstacle>& obstacles,
         const std::vector<std::pair<double, Vec>>& perturbations, double dt,
         const std::string& method) {
        EngineConfig config;
        config.dt = dt;
        std::vector<Perturbation> impulses;
        for (const auto& [t, offset] : perturbations) impulses.push_back({t, offset});
        const Method which = ParseMethod(method);
        ExecutionLog log;
        {
          py::gil_scoped_release release;
          log = which == Method::kSafeDmp
                    ? Run(model, config, obstacles, impulses)
                    : RunDmpApf(model, config, obstacles, ApfParams{}, impulses);
        }
        return LogToDict(log, model.dim());
      },
      "model"_a, "obstacles"_a = std::vector<Obstacle>{},
      "perturbations"_a = std::vector<std::pair<double, Vec>>{}, "dt"_a = kDefaultDt,
      "method"_a = "safedmp", "Closed-loop execution against an ideal plant; returns the log.");

  m.def(
      "run_scenario",
      [](const std::string& path, std::optional<std::string> method) {
        Scenario s = ReadScenario(path);
        if (method) s.method = ParseMethod(*method);
        const PreparedScenario p = Prepare(s);
        ExecutionLog log;
        const MetricsReport report = Evaluate(p, s.method, {}, &log);
        return py::make_tuple(ReportToJson({report}), LogToDict(log, p.model.dim()));
      },
      "path"_a, "method"_a = py::none(),
      "Evaluate one scenario file: (metrics JSON, log of the main run).");

  m.def(
      "bench",
      [](const std::vector<std::string>& paths) {
        std::vector<Scenario> scenarios;
        for (const std::string& path : paths) scenarios.push_back(ReadScenario(path));
        std::string report;
        {
          py::gil_scoped_release release;
          report = ReportToJson(Compare(scenarios, {Method::kSafeDmp, Method::kDmpApf}));
        }
        return report;
      },
      "paths"_a, "Compare both methods over scenario files; returns the report JSON.");
}
