#include "safedmp/scenario.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <initializer_list>

#include <json.hpp>

#include "safedmp/io.h"

namespace safedmp {

namespace {

using nlohmann::json;
using ordered = nlohmann::ordered_json;

void CheckObject(const json& j, const std::string& where,
                 std::initializer_list<const char*> allowed) {
  Require(j.is_object(), ErrorCode::kParse, where + " must be an object");
  for (const auto& item : j.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* k) { return item.key() == k; });
    if (!known) Fail(ErrorCode::kParse, "unknown key '" + item.key() + "' in " + where);
  }
}

double Number(const json& j, const std::string& where) {
  Require(j.is_number(), ErrorCode::kParse, where + " must be a number");
  return j.get<double>();
}

int Integer(const json& j, const std::string& where) {
  Require(j.is_number_integer(), ErrorCode::kParse, where + " must be an integer");
  return j.get<int>();
}

Vec Vector(const json& j, const std::string& where) {
  Require(j.is_array() && !j.empty(), ErrorCode::kParse, where + " must be a non-empty array");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = Number(j[i], where + "[" + std::to_string(i) + "]");
  }
  return v;
}

std::pair<double, double> Range(const json& j, const std::string& where) {
  Require(j.is_array() && j.size() == 2, ErrorCode::kParse, where + " must be [lo, hi]");
  return {Number(j[0], where), Number(j[1], where)};
}

template <typename F>
void IfPresent(const json& j, const char* key, F&& f) {
  if (auto it = j.find(key); it != j.end()) f(*it);
}

ordered ToJson(const Vec& v) { return ordered(std::vector<double>(v.data(), v.data() + v.size())); }

void ParseDemo(const json& j, Scenario& s) {
  CheckObject(j, "demo", {"source", "resample_n", "cutoff_hz", "z_height", "rotate"});
  IfPresent(j, "source", [&](const json& v) {
    Require(v.is_string(), ErrorCode::kParse, "demo.source must be a string");
    s.demo_source = v.get<std::string>();
  });
  IfPresent(j, "resample_n", [&](const json& v) { s.preprocess.resample_n = Integer(v, "demo.resample_n"); });
  IfPresent(j, "cutoff_hz", [&](const json& v) { s.preprocess.cutoff_hz = Number(v, "demo.cutoff_hz"); });
  IfPresent(j, "z_height", [&](const json& v) { s.preprocess.z_height = Number(v, "demo.z_height"); });
  IfPresent(j, "rotate", [&](const json& v) {
    if (v.is_string()) {
      const auto mode = v.get<std::string>();
      if (mode == "none") {
        s.rotation = RotationMode::kNone;
      } else if (mode == "random") {
        s.rotation = RotationMode::kRandom;
      } else {
        Fail(ErrorCode::kParse, "demo.rotate must be \"none\", \"random\" or a 3x3 matrix");
      }
      return;
    }
    Require(v.is_array() && v.size() == 3, ErrorCode::kParse, "demo.rotate matrix must be 3x3");
    Eigen::Matrix3d r;
    for (int i = 0; i < 3; ++i) {
      const Vec row = Vector(v[i], "demo.rotate");
      Require(row.size() == 3, ErrorCode::kParse, "demo.rotate matrix must be 3x3");
      r.row(i) = row.transpose();
    }
    s.rotation = RotationMode::kMatrix;
    s.preprocess.rotation = r;
  });
}

void ParseEngine(const json& j, Scenario& s) {
  CheckObject(j, "engine", {"dt", "eps_thresh", "horizon_factor", "delta_gamma", "K",
                            "clip_limit", "phase", "alpha_e", "k_c"});
  EngineConfig& e = s.engine;
  IfPresent(j, "dt", [&](const json& v) { e.dt = Number(v, "engine.dt"); });
  IfPresent(j, "eps_thresh", [&](const json& v) { e.goal_tolerance = Number(v, "engine.eps_thresh"); });
  IfPresent(j, "horizon_factor", [&](const json& v) { e.horizon_factor = Number(v, "engine.horizon_factor"); });
  IfPresent(j, "delta_gamma", [&](const json& v) { e.safety.delta_gamma = Number(v, "engine.delta_gamma"); });
  IfPresent(j, "K", [&](const json& v) { e.safety.gain = Number(v, "engine.K"); });
  IfPresent(j, "clip_limit", [&](const json& v) { e.safety.clip_limit = Number(v, "engine.clip_limit"); });
  IfPresent(j, "alpha_e", [&](const json& v) { e.alpha_e = Number(v, "engine.alpha_e"); });
  IfPresent(j, "k_c", [&](const json& v) { e.k_c = Number(v, "engine.k_c"); });
  IfPresent(j, "phase", [&](const json& v) {
    Require(v.is_string(), ErrorCode::kParse, "engine.phase must be a string");
    const auto name = v.get<std::string>();
    if (name == "exact") {
      e.phase = PhaseIntegration::kExact;
    } else if (name == "euler") {
      e.phase = PhaseIntegration::kEuler;
    } else {
      Fail(ErrorCode::kParse, "engine.phase must be \"exact\" or \"euler\"");
    }
  });
}

Obstacle ParseObstacle(const json& j, const std::string& where) {
  CheckObject(j, where, {"center", "radius", "velocity", "window"});
  Require(j.contains("center") && j.contains("radius"), ErrorCode::kParse,
          where + " needs center and radius");
  Obstacle o;
  o.center0 = Vector(j["center"], where + ".center");
  o.radius = Number(j["radius"], where + ".radius");
  o.velocity = Vec::Zero(o.center0.size());
  IfPresent(j, "velocity", [&](const json& v) { o.velocity = Vector(v, where + ".velocity"); });
  IfPresent(j, "window", [&](const json& v) { o.active_window = Range(v, where + ".window"); });
  return o;
}

}  // namespace

const char* MethodName(Method method) {
  return method == Method::kSafeDmp ? "safedmp" : "dmp-apf";
}

Method ParseMethod(const std::string& name) {
  if (name == "safedmp") return Method::kSafeDmp;
  if (name == "dmp-apf") return Method::kDmpApf;
  Fail(ErrorCode::kInvalidInput, "unknown method '" + name + "' (safedmp, dmp-apf)");
}

void Scenario::Validate() const {
  Require(!demo_source.empty(), ErrorCode::kInvalidInput, "demo source is empty");
  Require(preprocess.resample_n >= 3, ErrorCode::kInvalidInput, "resample_n must be >= 3");
  Require(std::isfinite(preprocess.cutoff_hz), ErrorCode::kInvalidInput, "cutoff_hz must be finite");
  Require(alpha > 0.0, ErrorCode::kInvalidInput, "alpha must be > 0");
  Require(n_basis >= 2, ErrorCode::kInvalidInput, "n_basis must be >= 2");
  engine.Validate();
  apf.Validate();
  Require(plant.kind == PlantModel::Kind::kIdeal || plant.time_constant > 0.0,
          ErrorCode::kInvalidInput, "plant time constant must be > 0");
  if (random_obstacles) {
    const RandomObstacleSpec& r = *random_obstacles;
    Require(r.count >= 0, ErrorCode::kInvalidInput, "random obstacle count must be >= 0");
    Require(r.radius_min > 0.0 && r.radius_min <= r.radius_max, ErrorCode::kInvalidInput,
            "random obstacle radius range must satisfy 0 < lo <= hi");
    Require(r.speed >= 0.0, ErrorCode::kInvalidInput, "random obstacle speed must be >= 0");
    Require(r.fraction_min >= 0.0 && r.fraction_min <= r.fraction_max && r.fraction_max <= 1.0,
            ErrorCode::kInvalidInput, "path fraction range must lie in [0, 1]");
  }
  for (const Perturbation& p : perturbations) {
    Require(p.t_apply >= 0.0 && p.offset.allFinite(), ErrorCode::kInvalidInput,
            "perturbations need t >= 0 and a finite offset");
  }
}

Scenario ParseScenario(const std::string& text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    Fail(ErrorCode::kParse, std::string("scenario is not valid JSON: ") + e.what());
  }
  CheckObject(j, "scenario",
              {"schema_version", "name", "seed", "method", "demo", "dmp", "engine", "plant", "apf",
               "obstacles", "random_obstacles", "perturbations", "default_perturbations"});
  Scenario s;
  s.base_dir = base_dir;
  IfPresent(j, "schema_version", [&](const json& v) {
    Require(Integer(v, "schema_version") == kScenarioSchemaVersion, ErrorCode::kParse,
            "unsupported scenario schema_version");
  });
  IfPresent(j, "name", [&](const json& v) {
    Require(v.is_string(), ErrorCode::kParse, "name must be a string");
    s.name = v.get<std::string>();
  });
  IfPresent(j, "seed", [&](const json& v) {
    Require(v.is_number_unsigned(), ErrorCode::kParse, "seed must be a non-negative integer");
    s.seed = v.get<std::uint64_t>();
  });
  IfPresent(j, "method", [&](const json& v) {
    Require(v.is_string(), ErrorCode::kParse, "method must be a string");
    try {
      s.method = ParseMethod(v.get<std::string>());
    } catch (const Error& e) {
      Fail(ErrorCode::kParse, e.what());
    }
  });
  IfPresent(j, "demo", [&](const json& v) { ParseDemo(v, s); });
  IfPresent(j, "dmp", [&](const json& v) {
    CheckObject(v, "dmp", {"alpha", "n_basis"});
    IfPresent(v, "alpha", [&](const json& x) { s.alpha = Number(x, "dmp.alpha"); });
    IfPresent(v, "n_basis", [&](const json& x) { s.n_basis = Integer(x, "dmp.n_basis"); });
  });
  IfPresent(j, "engine", [&](const json& v) { ParseEngine(v, s); });
  IfPresent(j, "plant", [&](const json& v) {
    CheckObject(v, "plant", {"kind", "time_constant"});
    IfPresent(v, "kind", [&](const json& x) {
      const std::string kind = x.is_string() ? x.get<std::string>() : "";
      if (kind == "ideal") {
        s.plant.kind = PlantModel::Kind::kIdeal;
      } else if (kind == "lag") {
        s.plant.kind = PlantModel::Kind::kFirstOrderLag;
      } else {
        Fail(ErrorCode::kParse, "plant.kind must be \"ideal\" or \"lag\"");
      }
    });
    IfPresent(v, "time_constant",
              [&](const json& x) { s.plant.time_constant = Number(x, "plant.time_constant"); });
  });
  IfPresent(j, "apf", [&](const json& v) {
    CheckObject(v, "apf", {"eta", "d0", "max_force"});
    IfPresent(v, "eta", [&](const json& x) { s.apf.eta = Number(x, "apf.eta"); });
    IfPresent(v, "d0", [&](const json& x) { s.apf.d0 = Number(x, "apf.d0"); });
    IfPresent(v, "max_force", [&](const json& x) { s.apf.max_force = Number(x, "apf.max_force"); });
  });
  IfPresent(j, "obstacles", [&](const json& v) {
    Require(v.is_array(), ErrorCode::kParse, "obstacles must be an array");
    for (std::size_t i = 0; i < v.size(); ++i) {
      s.obstacles.push_back(ParseObstacle(v[i], "obstacles[" + std::to_string(i) + "]"));
    }
  });
  IfPresent(j, "random_obstacles", [&](const json& v) {
    CheckObject(v, "random_obstacles", {"count", "radius", "speed", "path_fraction"});
    RandomObstacleSpec r;
    IfPresent(v, "count", [&](const json& x) { r.count = Integer(x, "random_obstacles.count"); });
    IfPresent(v, "radius", [&](const json& x) {
      std::tie(r.radius_min, r.radius_max) = Range(x, "random_obstacles.radius");
    });
    IfPresent(v, "speed", [&](const json& x) { r.speed = Number(x, "random_obstacles.speed"); });
    IfPresent(v, "path_fraction", [&](const json& x) {
      std::tie(r.fraction_min, r.fraction_max) = Range(x, "random_obstacles.path_fraction");
    });
    s.random_obstacles = r;
  });
  IfPresent(j, "perturbations", [&](const json& v) {
    Require(v.is_array(), ErrorCode::kParse, "perturbations must be an array");
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string where = "perturbations[" + std::to_string(i) + "]";
      CheckObject(v[i], where, {"t", "offset"});
      Require(v[i].contains("t") && v[i].contains("offset"), ErrorCode::kParse,
              where + " needs t and offset");
      s.perturbations.push_back({Number(v[i]["t"], where + ".t"), Vector(v[i]["offset"], where + ".offset")});
    }
  });
  IfPresent(j, "default_perturbations", [&](const json& v) {
    Require(v.is_boolean(), ErrorCode::kParse, "default_perturbations must be a boolean");
    s.default_perturbations = v.get<bool>();
  });
  s.apf.delta_gamma = s.engine.safety.delta_gamma;
  s.Validate();
  return s;
}

Scenario ReadScenario(const std::string& path) {
  const std::string text = ReadTextFile(path);
  return ParseScenario(text, std::filesystem::path(path).parent_path().string());
}

std::string ScenarioToJson(const Scenario& s) {
  ordered j;
  j["schema_version"] = kScenarioSchemaVersion;
  j["name"] = s.name;
  j["seed"] = s.seed;
  j["method"] = MethodName(s.method);
  ordered demo;
  demo["source"] = s.demo_source;
  demo["resample_n"] = s.preprocess.resample_n;
  demo["cutoff_hz"] = s.preprocess.cutoff_hz;
  demo["z_height"] = s.preprocess.z_height;
  if (s.rotation == RotationMode::kMatrix && s.preprocess.rotation) {
    ordered rows = ordered::array();
    for (int i = 0; i < 3; ++i) rows.push_back(ToJson(s.preprocess.rotation->row(i).transpose()));
    demo["rotate"] = rows;
  } else {
    demo["rotate"] = s.rotation == RotationMode::kRandom ? "random" : "none";
  }
  j["demo"] = demo;
  j["dmp"] = {{"alpha", s.alpha}, {"n_basis", s.n_basis}};
  ordered engine;
  engine["dt"] = s.engine.dt;
  engine["eps_thresh"] = s.engine.goal_tolerance;
  engine["horizon_factor"] = s.engine.horizon_factor;
  engine["delta_gamma"] = s.engine.safety.delta_gamma;
  engine["K"] = s.engine.safety.gain;
  engine["clip_limit"] = s.engine.safety.clip_limit;
  engine["phase"] = s.engine.phase == PhaseIntegration::kExact ? "exact" : "euler";
  if (s.engine.alpha_e) engine["alpha_e"] = *s.engine.alpha_e;
  if (s.engine.k_c) engine["k_c"] = *s.engine.k_c;
  j["engine"] = engine;
  j["plant"] = {{"kind", s.plant.kind == PlantModel::Kind::kIdeal ? "ideal" : "lag"},
                {"time_constant", s.plant.time_constant}};
  ordered apf;
  apf["eta"] = s.apf.eta;
  if (s.apf.d0) apf["d0"] = *s.apf.d0;
  if (s.apf.max_force) apf["max_force"] = *s.apf.max_force;
  j["apf"] = apf;
  ordered obstacles = ordered::array();
  for (const Obstacle& o : s.obstacles) {
    ordered item;
    item["center"] = ToJson(o.center0);
    item["radius"] = o.radius;
    if (o.velocity.size() > 0) item["velocity"] = ToJson(o.velocity);
    if (o.active_window) item["window"] = {o.active_window->first, o.active_window->second};
    obstacles.push_back(item);
  }
  j["obstacles"] = obstacles;
  if (s.random_obstacles) {
    const RandomObstacleSpec& r = *s.random_obstacles;
    j["random_obstacles"] = {{"count", r.count},
                             {"radius", {r.radius_min, r.radius_max}},
                             {"speed", r.speed},
                             {"path_fraction", {r.fraction_min, r.fraction_max}}};
  }
  ordered perturbations = ordered::array();
  for (const Perturbation& p : s.perturbations) {
    perturbations.push_back({{"t", p.t_apply}, {"offset", ToJson(p.offset)}});
  }
  j["perturbations"] = perturbations;
  j["default_perturbations"] = s.default_perturbations;
  return j.dump(2) + "\n";
}

}  // namespace safedmp
