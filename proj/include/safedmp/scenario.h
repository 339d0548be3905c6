#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "safedmp/baselines.h"
#include "safedmp/safe_exec.h"
#include "safedmp/trajectory.h"

namespace safedmp {

inline constexpr int kScenarioSchemaVersion = 1;

enum class Method { kSafeDmp, kDmpApf };
const char* MethodName(Method method);
Method ParseMethod(const std::string& name);  // "safedmp" | "dmp-apf"

// Seeded obstacles placed across the nominal path.
struct RandomObstacleSpec {
  int count = 1;
  double radius_min = 0.03;
  double radius_max = 0.06;
  // Zero gives static obstacles; otherwise each crosses the path at this
  // speed (m/s), perpendicular to the local direction of motion.
  double speed = 0.0;
  // Crossing point, as a fraction of tau_nominal along the nominal rollout.
  double fraction_min = 0.3;
  double fraction_max = 0.7;
};

enum class RotationMode { kNone, kRandom, kMatrix };

struct Scenario {
  std::string name;
  std::uint64_t seed = 0;
  Method method = Method::kSafeDmp;

  std::string demo_source = "builtin:minjerk";
  std::string base_dir;  // resolves relative demo paths; not serialised
  PreprocessOptions preprocess;
  RotationMode rotation = RotationMode::kNone;

  double alpha = kDefaultAlpha;
  int n_basis = kDefaultBasisCount;

  EngineConfig engine;
  PlantModel plant;
  ApfParams apf;  // apf.delta_gamma follows engine.safety.delta_gamma

  std::vector<Obstacle> obstacles;
  std::optional<RandomObstacleSpec> random_obstacles;
  std::vector<Perturbation> perturbations;
  bool default_perturbations = false;

  void Validate() const;
};

// JSON scenario document. Missing keys keep the defaults above; unknown keys
// and wrong types throw kParse, semantic problems kInvalidInput.
Scenario ParseScenario(const std::string& text, const std::string& base_dir = "");
Scenario ReadScenario(const std::string& path);
std::string ScenarioToJson(const Scenario& scenario);

}  // namespace safedmp
