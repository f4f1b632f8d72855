#ifndef DMPF_MODEL_HPP
#define DMPF_MODEL_HPP

#include <cstddef>
#include <map>
#include <string>

#include "dmpf/gaussian.hpp"
#include "dmpf/linalg.hpp"

namespace dmpf {

class RngStream;

/// Named scalar parameters of a model, echoed into run metadata.
using ParameterMap = std::map<std::string, double>;

/**
 * Discrete-time state-space model with additive Gaussian noise:
 *
 *   u_0 ~ prior,  u_t = transition_mean(t, u_{t-1}) + eps_t,  eps_t ~ N(0, Q_t),
 *   y_t = H_t u_t + eta_t,  eta_t ~ N(0, R_t).
 *
 * Steps are numbered 0..steps(); step 0 carries the prior draw and the first observation.
 */
class StateSpaceModel {
 public:
  StateSpaceModel(GaussianDist prior, GaussianDist process_noise, Matrix obs_operator, GaussianDist obs_noise,
                  std::size_t steps);
  virtual ~StateSpaceModel() = default;

  StateSpaceModel(const StateSpaceModel&) = default;
  StateSpaceModel& operator=(const StateSpaceModel&) = delete;

  [[nodiscard]] virtual std::string name() const = 0;

  /**
   * Deterministic part of the transition into `step` (>= 1) from `prev`.
   * Entries may be non-finite where the map is undefined; filters give such particles zero weight.
   */
  [[nodiscard]] virtual Vector transition_mean(std::size_t step, const Eigen::Ref<const Vector>& prev) const = 0;

  [[nodiscard]] virtual ParameterMap parameters() const = 0;

  [[nodiscard]] virtual const GaussianDist& process_noise(std::size_t /*step*/) const { return process_noise_; }
  [[nodiscard]] virtual const Matrix& obs_operator(std::size_t /*step*/) const { return obs_operator_; }
  [[nodiscard]] virtual const GaussianDist& obs_noise(std::size_t /*step*/) const { return obs_noise_; }

  /// Physical time of a step index.
  [[nodiscard]] virtual double time_of(std::size_t step) const { return static_cast<double>(step); }

  [[nodiscard]] const GaussianDist& prior() const { return prior_; }
  [[nodiscard]] Index state_dim() const { return prior_.dim(); }
  [[nodiscard]] Index obs_dim() const { return obs_operator_.rows(); }
  /// Number of transitions in a default run; trajectories hold steps() + 1 states.
  [[nodiscard]] std::size_t steps() const { return steps_; }

  /// log N(y; H u, R) for each row of `particles`.
  [[nodiscard]] Vector obs_loglik(std::size_t step, const Eigen::Ref<const Vector>& y, const PointSet& particles) const;
  [[nodiscard]] double obs_loglik_at(std::size_t step, const Eigen::Ref<const Vector>& y,
                                     const Eigen::Ref<const Vector>& u) const;

  /// log f_t(next | prev) = log N(next; transition_mean(step, prev), Q_t).
  [[nodiscard]] double transition_logpdf(std::size_t step, const Eigen::Ref<const Vector>& prev,
                                         const Eigen::Ref<const Vector>& next) const;

  [[nodiscard]] Vector sample_transition(std::size_t step, const Eigen::Ref<const Vector>& prev, RngStream& rng) const;
  [[nodiscard]] Vector sample_observation(std::size_t step, const Eigen::Ref<const Vector>& u, RngStream& rng) const;

 private:
  GaussianDist prior_;
  GaussianDist process_noise_;
  Matrix obs_operator_;
  GaussianDist obs_noise_;
  std::size_t steps_;
};

/// u_t = A u_{t-1} + eps_t; the model with an exact Kalman-filter posterior.
class LinearGaussianModel final : public StateSpaceModel {
 public:
  LinearGaussianModel(Matrix transition, const Matrix& process_cov, Matrix obs_operator, const Matrix& obs_cov,
                      GaussianDist prior, std::size_t steps);

  [[nodiscard]] std::string name() const override { return "linear_gaussian"; }
  [[nodiscard]] Vector transition_mean(std::size_t step, const Eigen::Ref<const Vector>& prev) const override;
  [[nodiscard]] ParameterMap parameters() const override;

  [[nodiscard]] const Matrix& transition() const { return transition_; }

 private:
  Matrix transition_;
};

}  // namespace dmpf

#endif  // DMPF_MODEL_HPP
