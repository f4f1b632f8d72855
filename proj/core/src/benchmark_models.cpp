#include "dmpf/benchmark_models.hpp"

#include <cmath>
#include <limits>

#include "dmpf/errors.hpp"

namespace dmpf {

namespace {

Matrix scaled_identity(Index n, double variance) { return Matrix::Identity(n, n) * variance; }

std::size_t as_steps(double v, const std::string& key) {
  if (!(v >= 1.0) || std::floor(v) != v) {
    throw ConfigError(key + " must be a positive integer");
  }
  return static_cast<std::size_t>(v);
}

/// Binds override keys to parameter fields; unknown keys are rejected.
class OverrideTable {
 public:
  void bind(const std::string& key, double& field) { doubles_.emplace(key, &field); }
  void bind_steps(std::size_t& field) { steps_ = &field; }

  void apply(const std::string& model, const ParameterMap& overrides) {
    for (const auto& [key, value] : overrides) {
      if (key == "steps" && steps_ != nullptr) {
        *steps_ = as_steps(value, key);
        continue;
      }
      const auto it = doubles_.find(key);
      if (it == doubles_.end()) {
        throw ConfigError("unknown parameter '" + key + "' for model " + model);
      }
      if (!std::isfinite(value)) {
        throw ConfigError("parameter '" + key + "' must be finite");
      }
      *it->second = value;
    }
  }

 private:
  std::map<std::string, double*> doubles_;
  std::size_t* steps_ = nullptr;
};

void require_positive(double v, const char* key) {
  if (!(v > 0.0)) {
    throw ConfigError(std::string(key) + " must be positive");
  }
}

void require_nonnegative(double v, const char* key) {
  if (!(v >= 0.0)) {
    throw ConfigError(std::string(key) + " must be nonnegative");
  }
}

}  // namespace

// ---------------------------------------------------------------------------

double bernoulli_mean(double x, double dt) {
  const double radicand = x * x + (1.0 - x * x) * std::exp(-2.0 * dt);
  if (!(radicand > 0.0)) {
    throw NumericalDomain("Bernoulli closed form: radicand " + std::to_string(radicand));
  }
  return x / std::sqrt(radicand);
}

BernoulliModel::BernoulliModel(const BernoulliParams& params)
    : StateSpaceModel(GaussianDist(Vector::Constant(1, params.mu0), scaled_identity(1, params.sigma0 * params.sigma0)),
                      GaussianDist::isotropic(1, params.sigma_process), Matrix::Identity(1, 1),
                      GaussianDist::isotropic(1, params.sigma_obs), params.steps),
      params_(params) {}

Vector BernoulliModel::transition_mean(std::size_t /*step*/, const Eigen::Ref<const Vector>& prev) const {
  const double x = prev[0];
  const double radicand = x * x + (1.0 - x * x) * std::exp(-2.0 * params_.dt);
  if (!(radicand > 0.0)) {
    return Vector::Constant(1, std::numeric_limits<double>::quiet_NaN());
  }
  return Vector::Constant(1, x / std::sqrt(radicand));
}

ParameterMap BernoulliModel::parameters() const {
  return {{"mu0", params_.mu0},
          {"sigma0", params_.sigma0},
          {"dt", params_.dt},
          {"sigma_process", params_.sigma_process},
          {"sigma_obs", params_.sigma_obs},
          {"steps", static_cast<double>(params_.steps)}};
}

// ---------------------------------------------------------------------------

Vector lorenz_mean(const Eigen::Ref<const Vector>& u, const Lorenz63Params& p) {
  const double x = u[0];
  const double y = u[1];
  const double z = u[2];
  Vector next(3);
  next[0] = x + p.sigma * (y - x) * p.dt;
  next[1] = y + (x * (p.rho - z) - y) * p.dt;
  next[2] = z + (x * y - p.beta * z) * p.dt;
  return next;
}

Lorenz63Model::Lorenz63Model(const Lorenz63Params& params)
    : StateSpaceModel(GaussianDist((Vector(3) << params.x0, params.y0, params.z0).finished(),
                                   scaled_identity(3, params.prior_std * params.prior_std)),
                      GaussianDist::isotropic(3, params.sigma_process), Matrix::Identity(3, 3),
                      GaussianDist::isotropic(3, params.sigma_obs), params.steps),
      params_(params) {}

Vector Lorenz63Model::transition_mean(std::size_t /*step*/, const Eigen::Ref<const Vector>& prev) const {
  return lorenz_mean(prev, params_);
}

ParameterMap Lorenz63Model::parameters() const {
  return {{"sigma", params_.sigma},
          {"rho", params_.rho},
          {"beta", params_.beta},
          {"dt", params_.dt},
          {"sigma_process", params_.sigma_process},
          {"sigma_obs", params_.sigma_obs},
          {"prior_std", params_.prior_std},
          {"x0", params_.x0},
          {"y0", params_.y0},
          {"z0", params_.z0},
          {"steps", static_cast<double>(params_.steps)}};
}

// ---------------------------------------------------------------------------

Vector robot_rates(double t, const Eigen::Ref<const Vector>& u, const RobotParams& p) {
  const double v = p.v_amplitude * std::abs(std::sin(t)) + p.v_offset;
  const double omega = p.omega_amplitude * std::cos(t);
  Vector rates(4);
  rates[0] = v * std::cos(u[2]);
  rates[1] = v * std::sin(u[2]);
  rates[2] = v / p.length * std::tan(u[3]);
  rates[3] = omega;
  return rates;
}

Vector robot_rk4_step(double t, const Eigen::Ref<const Vector>& u, double h, const RobotParams& p) {
  const Vector k1 = robot_rates(t, u, p);
  const Vector k2 = robot_rates(t + 0.5 * h, u + 0.5 * h * k1, p);
  const Vector k3 = robot_rates(t + 0.5 * h, u + 0.5 * h * k2, p);
  const Vector k4 = robot_rates(t + h, u + h * k3, p);
  return u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Vector robot_mean(double t, const Eigen::Ref<const Vector>& u, const RobotParams& p) {
  return robot_rk4_step(t, u, p.dt, p);
}

CarRobotModel::CarRobotModel(const RobotParams& params)
    : StateSpaceModel(GaussianDist(Vector::Zero(4), scaled_identity(4, params.prior_var)),
                      GaussianDist::isotropic(4, params.sigma_process),
                      (Matrix(3, 4) << 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0).finished(),
                      GaussianDist::isotropic(3, params.sigma_obs), params.steps),
      params_(params) {
  require_positive(params_.length, "L");
}

Vector CarRobotModel::transition_mean(std::size_t step, const Eigen::Ref<const Vector>& prev) const {
  return robot_mean(time_of(step - 1), prev, params_);
}

ParameterMap CarRobotModel::parameters() const {
  return {{"L", params_.length},
          {"dt", params_.dt},
          {"sigma_process", params_.sigma_process},
          {"sigma_obs", params_.sigma_obs},
          {"prior_var", params_.prior_var},
          {"v_amplitude", params_.v_amplitude},
          {"v_offset", params_.v_offset},
          {"omega_amplitude", params_.omega_amplitude},
          {"steps", static_cast<double>(params_.steps)}};
}

// ---------------------------------------------------------------------------

const std::vector<std::string>& model_ids() {
  static const std::vector<std::string> ids{"bernoulli", "lorenz63", "robot"};
  return ids;
}

std::unique_ptr<StateSpaceModel> make_model(std::string_view id, const ParameterMap& overrides) {
  OverrideTable table;
  if (id == "bernoulli") {
    BernoulliParams p;
    table.bind("mu0", p.mu0);
    table.bind("sigma0", p.sigma0);
    table.bind("dt", p.dt);
    table.bind("sigma_process", p.sigma_process);
    table.bind("sigma_obs", p.sigma_obs);
    table.bind_steps(p.steps);
    table.apply("bernoulli", overrides);
    require_nonnegative(p.sigma0, "sigma0");
    require_nonnegative(p.sigma_process, "sigma_process");
    require_nonnegative(p.sigma_obs, "sigma_obs");
    return std::make_unique<BernoulliModel>(p);
  }
  if (id == "lorenz63") {
    Lorenz63Params p;
    table.bind("sigma", p.sigma);
    table.bind("rho", p.rho);
    table.bind("beta", p.beta);
    table.bind("dt", p.dt);
    table.bind("sigma_process", p.sigma_process);
    table.bind("sigma_obs", p.sigma_obs);
    table.bind("prior_std", p.prior_std);
    table.bind("x0", p.x0);
    table.bind("y0", p.y0);
    table.bind("z0", p.z0);
    table.bind_steps(p.steps);
    table.apply("lorenz63", overrides);
    require_nonnegative(p.sigma_process, "sigma_process");
    require_nonnegative(p.sigma_obs, "sigma_obs");
    require_nonnegative(p.prior_std, "prior_std");
    return std::make_unique<Lorenz63Model>(p);
  }
  if (id == "robot") {
    RobotParams p;
    table.bind("L", p.length);
    table.bind("dt", p.dt);
    table.bind("sigma_process", p.sigma_process);
    table.bind("sigma_obs", p.sigma_obs);
    table.bind("prior_var", p.prior_var);
    table.bind("v_amplitude", p.v_amplitude);
    table.bind("v_offset", p.v_offset);
    table.bind("omega_amplitude", p.omega_amplitude);
    table.bind_steps(p.steps);
    table.apply("robot", overrides);
    require_nonnegative(p.sigma_process, "sigma_process");
    require_nonnegative(p.sigma_obs, "sigma_obs");
    require_nonnegative(p.prior_var, "prior_var");
    return std::make_unique<CarRobotModel>(p);
  }
  throw ConfigError("unknown model '" + std::string(id) + "'");
}

}  // namespace dmpf
