// safedmp: learn primitives, execute scenarios and benchmark methods.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "safedmp/bench.h"
#include "safedmp/dmp.h"
#include "safedmp/generators.h"
#include "safedmp/io.h"
#include "safedmp/scenario.h"

namespace fs = std::filesystem;
using namespace safedmp;

namespace {

enum ExitCode { kOk = 0, kFault = 1, kInputError = 2, kInfeasible = 3, kNotConverged = 4 };

void EnsureParent(const std::string& file) {
  const fs::path parent = fs::path(file).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> dt;
  std::optional<int> n_basis;
  std::optional<std::string> method;
  std::optional<std::string> demo;

  void Apply(Scenario& s) const {
    if (seed) s.seed = *seed;
    if (dt) s.engine.dt = *dt;
    if (n_basis) s.n_basis = *n_basis;
    if (method) s.method = ParseMethod(*method);
    if (demo) {
      s.demo_source = *demo;
      s.base_dir.clear();
    }
    s.Validate();
  }
};

void AddOverrides(CLI::App* cmd, Overrides& o, bool with_method) {
  cmd->add_option("--seed", o.seed, "Seed for every random choice");
  cmd->add_option("--dt", o.dt, "Control period in seconds")->check(CLI::PositiveNumber);
  cmd->add_option("--n-basis", o.n_basis, "Number of basis functions")->check(CLI::Range(2, 1000));
  if (with_method) {
    cmd->add_option("--method", o.method, "safedmp or dmp-apf")
        ->check(CLI::IsMember({"safedmp", "dmp-apf"}));
  }
}

int Learn(const std::string& demo, const std::optional<std::string>& scenario_path,
          const Overrides& o, const std::string& out) {
  Scenario s = scenario_path ? ReadScenario(*scenario_path) : Scenario{};
  Overrides with_demo = o;
  with_demo.demo = demo;
  with_demo.Apply(s);

  const TimedTrajectory traj = LoadDemo(s);
  const DmpModel model = LearnFromDemo(traj, s.n_basis, s.alpha);
  EnsureParent(out);
  WriteTextFile(out, ModelToJson(model));

  const EngineConfig& e = s.engine;
  const RolloutResult rollout = Rollout(model, e.dt, e.horizon_factor * model.tau_nominal(),
                                        e.goal_tolerance, e.phase);
  const double mae = Mae(AlignToReference(rollout.trajectory, traj), traj);
  const double diag = BoundingBoxDiagonal(traj);
  std::printf("model: %s (d=%d, n_basis=%d, tau=%.6g s)\n", out.c_str(), model.dim(),
              model.n_basis(), model.tau_nominal());
  std::printf("rollout mae: %.6e m (%.4f%% of %.4g m extent)\n", mae, 100.0 * mae / diag, diag);
  if (!rollout.converged) {
    std::fprintf(stderr, "warning: rollout did not reach the goal within the horizon\n");
  }
  return kOk;
}

int RunScenario(const std::string& scenario_path, const std::optional<std::string>& model_path,
                const Overrides& o, const std::string& prefix, bool timing) {
  Scenario s = ReadScenario(scenario_path);
  o.Apply(s);
  std::optional<DmpModel> model;
  if (model_path) model = ModelFromJson(ReadTextFile(*model_path));

  const PreparedScenario prepared = Prepare(s, model);
  EvaluateOptions options;
  options.timing = timing;
  ExecutionLog log;
  const MetricsReport report = Evaluate(prepared, s.method, options, &log);

  EnsureParent(prefix + ".log.csv");
  WriteTextFile(prefix + ".log.csv", FormatLogCsv(log.records));
  WriteTextFile(prefix + ".metrics.json", ReportToJson({report}));
  std::cout << ReportToText({report});

  switch (log.status) {
    case RunStatus::kConverged:
      return kOk;
    case RunStatus::kSafetyInfeasible:
      std::fprintf(stderr, "error: %s\n", log.message.c_str());
      return kInfeasible;
    case RunStatus::kNotConverged:
      std::fprintf(stderr, "error: %s\n", log.message.c_str());
      return kNotConverged;
  }
  return kFault;
}

int Bench(const std::string& dir, const Overrides& o, const std::string& out, bool timing) {
  if (!fs::is_directory(dir)) Fail(ErrorCode::kInvalidInput, "'" + dir + "' is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  std::vector<Scenario> scenarios;
  for (const fs::path& f : files) {
    Scenario s = ReadScenario(f.string());
    if (s.name.empty()) s.name = f.stem().string();
    o.Apply(s);
    scenarios.push_back(std::move(s));
  }
  EvaluateOptions options;
  options.timing = timing;
  const std::vector<MetricsReport> rows =
      Compare(scenarios, {Method::kSafeDmp, Method::kDmpApf}, options);
  EnsureParent(out);
  WriteTextFile(out, ReportToJson(rows));
  const std::string text = ReportToText(rows);
  WriteTextFile(fs::path(out).replace_extension(".txt").string(), text);
  std::cout << text;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Safe execution of learned movement primitives"};
  app.require_subcommand(1);

  Overrides learn_o, run_o, bench_o;
  std::string demo, out, scenario, model_path;
  bool timing = false;

  auto* learn = app.add_subcommand("learn", "Learn a primitive from a demonstration");
  learn->add_option("--demo", demo, "Demonstration CSV or builtin:<id>")->required();
  learn->add_option("--out", out, "Model JSON to write")->required();
  learn->add_option("--scenario", scenario, "Scenario file supplying preprocessing options");
  AddOverrides(learn, learn_o, false);

  auto* run = app.add_subcommand("run", "Execute one scenario");
  run->add_option("--scenario", scenario, "Scenario JSON")->required();
  run->add_option("--model", model_path, "Model JSON (learned from the scenario demo if absent)");
  run->add_option("--demo", run_o.demo, "Override the scenario demonstration");
  run->add_option("--out", out, "Output prefix for .log.csv and .metrics.json")->required();
  run->add_flag("--timing", timing, "Measure per-step computation time");
  AddOverrides(run, run_o, true);

  auto* bench = app.add_subcommand("bench", "Compare both methods over a scenario directory");
  bench->add_option("--scenario", scenario, "Directory of scenario JSON files")->required();
  bench->add_option("--out", out, "Report JSON to write (text table next to it)")->required();
  bench->add_flag("--timing", timing, "Measure per-step computation time");
  AddOverrides(bench, bench_o, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (learn->parsed()) {
      return Learn(demo, scenario.empty() ? std::nullopt : std::optional(scenario), learn_o, out);
    }
    if (run->parsed()) {
      return RunScenario(scenario, model_path.empty() ? std::nullopt : std::optional(model_path),
                         run_o, out, timing);
    }
    return Bench(scenario, bench_o, out, timing);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.code() == ErrorCode::kSafetyInfeasible ? kInfeasible : kInputError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "fatal: %s\n", e.what());
    return kFault;
  }
}
