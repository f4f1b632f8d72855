#ifndef DMPF_BENCHMARK_MODELS_HPP
#define DMPF_BENCHMARK_MODELS_HPP

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "dmpf/model.hpp"

namespace dmpf {

// ---------------------------------------------------------------------------
// Bernoulli equation dx/dt = x - x^3, stepped with its closed-form solution.

struct BernoulliParams {
  double mu0 = -0.1;
  double sigma0 = 0.2;
  double dt = 0.3;
  double sigma_process = 0.01;
  double sigma_obs = 0.8;
  std::size_t steps = 40;
};

/// x (x^2 + (1 - x^2) e^{-2 dt})^{-1/2}; throws NumericalDomain when the radicand is <= 0.
double bernoulli_mean(double x, double dt);

class BernoulliModel final : public StateSpaceModel {
 public:
  explicit BernoulliModel(const BernoulliParams& params = {});

  [[nodiscard]] std::string name() const override { return "bernoulli"; }
  /// Returns NaN instead of throwing outside the domain of the closed form.
  [[nodiscard]] Vector transition_mean(std::size_t step, const Eigen::Ref<const Vector>& prev) const override;
  [[nodiscard]] ParameterMap parameters() const override;
  [[nodiscard]] double time_of(std::size_t step) const override { return params_.dt * static_cast<double>(step); }

  [[nodiscard]] const BernoulliParams& params() const { return params_; }

 private:
  BernoulliParams params_;
};

// ---------------------------------------------------------------------------
// Lorenz 63, explicit Euler discretization with additive noise.

struct Lorenz63Params {
  double sigma = 10.0;
  double rho = 28.0;
  double beta = 8.0 / 3.0;
  double dt = 0.03;
  double sigma_process = 0.5;
  double sigma_obs = 1.0;
  double prior_std = 0.5;
  double x0 = 1.51;
  double y0 = -1.53;
  double z0 = 25.46;
  std::size_t steps = 150;
};

/// One explicit Euler step of the Lorenz 63 vector field.
Vector lorenz_mean(const Eigen::Ref<const Vector>& u, const Lorenz63Params& params);

class Lorenz63Model final : public StateSpaceModel {
 public:
  explicit Lorenz63Model(const Lorenz63Params& params = {});

  [[nodiscard]] std::string name() const override { return "lorenz63"; }
  [[nodiscard]] Vector transition_mean(std::size_t step, const Eigen::Ref<const Vector>& prev) const override;
  [[nodiscard]] ParameterMap parameters() const override;
  [[nodiscard]] double time_of(std::size_t step) const override { return params_.dt * static_cast<double>(step); }

  [[nodiscard]] const Lorenz63Params& params() const { return params_; }

 private:
  Lorenz63Params params_;
};

// ---------------------------------------------------------------------------
// Car-like robot: state (x, y, theta, phi), pose (x, y, theta) observed.
//
//   x' = v cos(theta), y' = v sin(theta), theta' = v tan(phi) / L, phi' = omega
//   v(t) = v_amplitude |sin t| + v_offset,  omega(t) = omega_amplitude cos t
//
// Angles are kept unwrapped.

struct RobotParams {
  double length = 0.1;
  double dt = 0.05;
  double sigma_process = 0.3;
  double sigma_obs = 0.3;
  double prior_var = 0.25;
  double v_amplitude = 0.7;
  double v_offset = 0.1;
  double omega_amplitude = 0.08;
  std::size_t steps = 100;
};

/// Time derivative of the robot state at time t.
Vector robot_rates(double t, const Eigen::Ref<const Vector>& u, const RobotParams& params);

/// Classical RK4 step of size h from (t, u).
Vector robot_rk4_step(double t, const Eigen::Ref<const Vector>& u, double h, const RobotParams& params);

/// RK4 over [t, t + params.dt] in a single step.
Vector robot_mean(double t, const Eigen::Ref<const Vector>& u, const RobotParams& params);

class CarRobotModel final : public StateSpaceModel {
 public:
  explicit CarRobotModel(const RobotParams& params = {});

  [[nodiscard]] std::string name() const override { return "robot"; }
  [[nodiscard]] Vector transition_mean(std::size_t step, const Eigen::Ref<const Vector>& prev) const override;
  [[nodiscard]] ParameterMap parameters() const override;
  [[nodiscard]] double time_of(std::size_t step) const override { return params_.dt * static_cast<double>(step); }

  [[nodiscard]] const RobotParams& params() const { return params_; }

 private:
  RobotParams params_;
};

// ---------------------------------------------------------------------------

/// Model ids accepted by make_model.
const std::vector<std::string>& model_ids();

/**
 * Builds a benchmark model with parameter overrides (keys as reported by parameters()).
 * Throws ConfigError on an unknown id or parameter name.
 */
std::unique_ptr<StateSpaceModel> make_model(std::string_view id, const ParameterMap& overrides = {});

}  // namespace dmpf

#endif  // DMPF_BENCHMARK_MODELS_HPP
