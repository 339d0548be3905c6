#include "safedmp/dmp.h"

#include <cmath>
#include <json.hpp>
#include <string>
#include <utility>

namespace safedmp {

DmpModel::DmpModel(double alpha, double tau_nominal, Vec x0, Vec g, Vec centers, Vec widths,
                   Eigen::MatrixXd weights)
    : alpha_(alpha),
      tau_nominal_(tau_nominal),
      x0_(std::move(x0)),
      g_(std::move(g)),
      centers_(std::move(centers)),
      widths_(std::move(widths)),
      weights_(std::move(weights)) {
  Require(std::isfinite(alpha_) && alpha_ > 0.0, ErrorCode::kInvalidInput, "alpha must be > 0");
  Require(std::isfinite(tau_nominal_) && tau_nominal_ > 0.0, ErrorCode::kInvalidInput,
          "tau_nominal must be > 0");
  Require(x0_.size() >= 1 && x0_.size() == g_.size(), ErrorCode::kDimensionMismatch,
          "x0 and g must share a dimension >= 1");
  Require(x0_.allFinite() && g_.allFinite(), ErrorCode::kInvalidInput, "x0/g must be finite");
  Require(centers_.size() >= 1 && centers_.size() == widths_.size(), ErrorCode::kInvalidInput,
          "centers and widths must have the same non-zero length");
  for (Eigen::Index j = 0; j < centers_.size(); ++j) {
    Require(centers_(j) > 0.0 && centers_(j) <= 1.0, ErrorCode::kInvalidInput,
            "basis centers must lie in (0, 1]");
    Require(widths_(j) > 0.0 && std::isfinite(widths_(j)), ErrorCode::kInvalidInput,
            "basis widths must be positive");
    if (j > 0) {
      Require(centers_(j) < centers_(j - 1), ErrorCode::kInvalidInput,
              "basis centers must be strictly decreasing");
    }
  }
  Require(weights_.rows() == x0_.size() && weights_.cols() == centers_.size(),
          ErrorCode::kDimensionMismatch, "weights must be d x n_basis");
  Require(weights_.allFinite(), ErrorCode::kInvalidInput, "weights must be finite");
}

BasisLayout MakeBasisLayout(int n_basis, double alpha_z) {
  Require(n_basis >= 2, ErrorCode::kInvalidInput, "need at least 2 basis functions");
  BasisLayout layout{Vec(n_basis), Vec(n_basis)};
  for (int j = 0; j < n_basis; ++j) {
    layout.centers(j) = std::exp(-alpha_z * static_cast<double>(j) / (n_basis - 1));
  }
  for (int j = 0; j + 1 < n_basis; ++j) {
    const double gap = layout.centers(j + 1) - layout.centers(j);
    layout.widths(j) = 1.0 / (2.0 * gap * gap);
  }
  layout.widths(n_basis - 1) = layout.widths(n_basis - 2);
  return layout;
}

DmpState DmpState::Initial(const DmpModel& model) {
  return DmpState{model.x0(), Vec::Zero(model.dim()), 1.0, Vec::Zero(model.dim()),
                  model.tau_nominal()};
}

namespace {

// exp(-q) is exactly zero in double precision beyond this; skipping those
// calls also avoids the slow subnormal path of vectorised exp.
constexpr double kExpUnderflow = 745.2;

void ActivationsInto(const Vec& c, const Vec& h, double z, Vec& psi) {
  psi.resize(c.size());
  for (Eigen::Index j = 0; j < c.size(); ++j) {
    const double q = h(j) * (z - c(j)) * (z - c(j));
    psi(j) = q > kExpUnderflow ? 0.0 : std::exp(-q);
  }
}

}  // namespace

Vec BasisActivations(const DmpModel& model, double z) {
  Vec psi;
  ActivationsInto(model.centers(), model.widths(), z, psi);
  return psi;
}

void ForcingInto(const DmpModel& model, double z, Vec& psi, Vec& out) {
  ActivationsInto(model.centers(), model.widths(), z, psi);
  const double total = psi.sum();
  if (!(total >= 1e-300)) {
    Fail(ErrorCode::kDegeneratePhase,
         "basis activations vanish at phase " + std::to_string(z));
  }
  out.noalias() = model.weights() * psi;
  out.array() *= (model.g() - model.x0()).array() * (z / total);
}

Vec Forcing(const DmpModel& model, double z) {
  Vec psi(model.n_basis());
  Vec out(model.dim());
  ForcingInto(model, z, psi, out);
  return out;
}

std::vector<Vec> TargetForcing(const DerivedKinematics& demo, double alpha, const Vec& g,
                               const Vec& x0, double tau) {
  Require(demo.positions.size() == demo.size() && demo.velocities.size() == demo.size() &&
              demo.accelerations.size() == demo.size(),
          ErrorCode::kInvalidInput, "kinematics sequences are not aligned");
  Require(g.size() == demo.dim() && x0.size() == demo.dim(), ErrorCode::kDimensionMismatch,
          "g/x0 dimension does not match the demonstration");
  const double beta = BetaFor(alpha);
  std::vector<Vec> out;
  out.reserve(demo.size());
  for (std::size_t k = 0; k < demo.size(); ++k) {
    out.push_back(tau * tau * demo.accelerations[k] -
                  alpha * (beta * (g - demo.positions[k]) - tau * demo.velocities[k]));
  }
  return out;
}

DmpModel LearnWeights(const DerivedKinematics& demo, int n_basis, double alpha, double tau) {
  Require(tau > 0.0, ErrorCode::kInvalidInput, "tau must be > 0");
  Require(alpha > 0.0, ErrorCode::kInvalidInput, "alpha must be > 0");
  Require(n_basis >= 2, ErrorCode::kInvalidInput, "need at least 2 basis functions");
  Require(static_cast<int>(demo.size()) >= n_basis && demo.size() >= 3,
          ErrorCode::kInsufficientData,
          "demonstration has " + std::to_string(demo.size()) + " samples, need at least " +
              std::to_string(std::max(n_basis, 3)));

  const int d = demo.dim();
  const std::size_t n = demo.size();
  const Vec x0 = demo.positions.front();
  const Vec g = demo.positions.back();
  const double alpha_z = PhaseDecayFor(alpha);
  const BasisLayout layout = MakeBasisLayout(n_basis, alpha_z);
  const std::vector<Vec> f_target = TargetForcing(demo, alpha, g, x0, tau);

  Eigen::MatrixXd psi(n, n_basis);
  Vec phase(n);
  Vec row;
  for (std::size_t k = 0; k < n; ++k) {
    phase(k) = std::exp(-alpha_z * (demo.times[k] - demo.times.front()) / tau);
    ActivationsInto(layout.centers, layout.widths, phase(k), row);
    psi.row(k) = row.transpose();
  }

  Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(d, n_basis);
  for (int i = 0; i < d; ++i) {
    const double amplitude = g(i) - x0(i);
    if (std::abs(amplitude) < 1e-9) continue;
    const Vec zeta = phase * amplitude;
    Vec f(n);
    for (std::size_t k = 0; k < n; ++k) f(k) = f_target[k](i);
    const double ridge = 1e-12 * zeta.array().square().maxCoeff();
    for (int j = 0; j < n_basis; ++j) {
      const double num = (psi.col(j).array() * zeta.array() * f.array()).sum();
      const double den = (psi.col(j).array() * zeta.array().square()).sum() + ridge;
      weights(i, j) = num / den;
    }
  }
  return DmpModel(alpha, tau, x0, g, layout.centers, layout.widths, std::move(weights));
}

double PhaseStep(double z, double tau, double dt, double alpha_z, PhaseIntegration method) {
  Require(z > 0.0 && z <= 1.0, ErrorCode::kInvalidInput, "phase must lie in (0, 1]");
  Require(dt >= 0.0 && tau > 0.0, ErrorCode::kInvalidInput, "need dt >= 0 and tau > 0");
  const double rate = alpha_z * dt / tau;
  if (rate >= 1.0) {
    Fail(ErrorCode::kStepSize, "alpha_z dt / tau = " + std::to_string(rate) + " >= 1");
  }
  if (method == PhaseIntegration::kEuler) return z * (1.0 - rate);
  return z * std::exp(-rate);
}

void TransformationAccelInto(const DmpModel& model, const DmpState& state, const Vec& f_total,
                             Vec& out) {
  const double tau = state.tau;
  out = (model.alpha() * (model.beta() * (model.g() - state.x) - tau * state.v) + f_total) /
        (tau * tau);
}

Vec TransformationAccel(const DmpModel& model, const DmpState& state, const Vec& f_total) {
  Vec out(model.dim());
  TransformationAccelInto(model, state, f_total, out);
  return out;
}

void IntegrateStepInPlace(DmpState& state, const Vec& accel, double dt) {
  AdvancePosition(state.x, state.v, accel, dt);
  state.v += accel * dt;
}

DmpState IntegrateStep(const DmpState& state, const Vec& accel, double dt) {
  DmpState next = state;
  IntegrateStepInPlace(next, accel, dt);
  return next;
}

RolloutResult Rollout(const DmpModel& model, double dt, double horizon, double goal_tolerance,
                      PhaseIntegration method) {
  Require(dt > 0.0, ErrorCode::kInvalidInput, "dt must be > 0");
  Require(horizon >= 0.0, ErrorCode::kInvalidInput, "horizon must be >= 0");
  const auto max_steps = static_cast<long>(std::ceil(horizon / dt - 1e-9));

  RolloutResult result;
  DmpState state = DmpState::Initial(model);
  Vec psi(model.n_basis());
  Vec forcing(model.dim());
  Vec accel(model.dim());
  result.trajectory.times.push_back(0.0);
  result.trajectory.points.push_back(state.x);
  long step = 0;
  while ((state.x - model.g()).norm() >= goal_tolerance && step < max_steps) {
    ForcingInto(model, state.z, psi, forcing);
    TransformationAccelInto(model, state, forcing, accel);
    state.z = PhaseStep(state.z, state.tau, dt, model.alpha_z(), method);
    IntegrateStepInPlace(state, accel, dt);
    ++step;
    result.trajectory.times.push_back(static_cast<double>(step) * dt);
    result.trajectory.points.push_back(state.x);
  }
  result.converged = (state.x - model.g()).norm() < goal_tolerance;
  return result;
}

DmpState AdaptTiming(const DmpState& state, const Vec& x_measured, const Vec& x_nominal,
                     double alpha_e, double k_c, double tau_nominal, double dt) {
  Require(dt > 0.0 && alpha_e > 0.0 && k_c > 0.0 && tau_nominal > 0.0, ErrorCode::kInvalidInput,
          "adapt_timing needs positive dt, gains and tau_nominal");
  DmpState next = state;
  next.e_couple += alpha_e * (x_measured - x_nominal - state.e_couple) * dt;
  next.tau = tau_nominal + k_c * next.e_couple.squaredNorm();
  return next;
}

DmpModel Retarget(const DmpModel& model, const Vec& new_x0, const Vec& new_g) {
  Require(new_x0.size() == model.dim() && new_g.size() == model.dim(),
          ErrorCode::kDimensionMismatch, "retarget endpoints must match the model dimension");
  return DmpModel(model.alpha(), model.tau_nominal(), new_x0, new_g, model.centers(),
                  model.widths(), model.weights());
}

namespace {

nlohmann::json ToArray(const Vec& v) {
  return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

Vec FromArray(const nlohmann::json& j, const char* field) {
  Require(j.is_array(), ErrorCode::kParse, std::string("model field '") + field + "' must be an array");
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vec>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace

std::string ModelToJson(const DmpModel& model) {
  nlohmann::ordered_json doc;
  doc["d"] = model.dim();
  doc["n_basis"] = model.n_basis();
  doc["alpha"] = model.alpha();
  doc["tau_nominal"] = model.tau_nominal();
  doc["x0"] = ToArray(model.x0());
  doc["g"] = ToArray(model.g());
  doc["centers"] = ToArray(model.centers());
  doc["widths"] = ToArray(model.widths());
  std::vector<double> weights;
  weights.reserve(model.weights().size());
  for (int i = 0; i < model.dim(); ++i) {
    for (int j = 0; j < model.n_basis(); ++j) weights.push_back(model.weights()(i, j));
  }
  doc["weights"] = weights;
  return doc.dump(2) + "\n";
}

DmpModel ModelFromJson(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kParse, std::string("model JSON: ") + e.what());
  }
  try {
    const int d = doc.at("d").get<int>();
    const int n_basis = doc.at("n_basis").get<int>();
    const auto flat = doc.at("weights").get<std::vector<double>>();
    Require(static_cast<long>(flat.size()) == static_cast<long>(d) * n_basis, ErrorCode::kParse,
            "model weights must hold d * n_basis values");
    Eigen::MatrixXd weights(d, n_basis);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < n_basis; ++j) weights(i, j) = flat[static_cast<std::size_t>(i * n_basis + j)];
    }
    DmpModel model(doc.at("alpha").get<double>(), doc.at("tau_nominal").get<double>(),
                   FromArray(doc.at("x0"), "x0"), FromArray(doc.at("g"), "g"),
                   FromArray(doc.at("centers"), "centers"), FromArray(doc.at("widths"), "widths"),
                   std::move(weights));
    Require(model.dim() == d && model.n_basis() == n_basis, ErrorCode::kParse,
            "model d/n_basis disagree with array sizes");
    return model;
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kParse, std::string("model JSON: ") + e.what());
  }
}

}  // namespace safedmp
