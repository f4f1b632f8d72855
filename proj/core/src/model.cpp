#include "dmpf/model.hpp"

#include <cmath>
#include <limits>

#include "dmpf/errors.hpp"
#include "dmpf/rng.hpp"

namespace dmpf {

StateSpaceModel::StateSpaceModel(GaussianDist prior, GaussianDist process_noise, Matrix obs_operator,
                                 GaussianDist obs_noise, std::size_t steps)
    : prior_(std::move(prior)),
      process_noise_(std::move(process_noise)),
      obs_operator_(std::move(obs_operator)),
      obs_noise_(std::move(obs_noise)),
      steps_(steps) {
  if (process_noise_.dim() != prior_.dim()) {
    throw ShapeMismatch("process noise dimension differs from state dimension");
  }
  if (obs_operator_.cols() != prior_.dim() || obs_operator_.rows() != obs_noise_.dim()) {
    throw ShapeMismatch("observation operator must be n_v x n_u");
  }
}

Vector StateSpaceModel::obs_loglik(std::size_t step, const Eigen::Ref<const Vector>& y,
                                   const PointSet& particles) const {
  const GaussianDist& noise = obs_noise(step);
  const Matrix& h = obs_operator(step);
  // Residuals as columns, whitened in one triangular solve.
  Matrix residuals = (-(h * particles.transpose())).colwise() + y;
  noise.chol().triangularView<Eigen::Lower>().solveInPlace(residuals);
  Vector out = -0.5 * residuals.colwise().squaredNorm().transpose();
  out.array() -= noise.log_normalizer();
  for (Index m = 0; m < out.size(); ++m) {
    if (!std::isfinite(out[m])) {
      out[m] = -std::numeric_limits<double>::infinity();
    }
  }
  return out;
}

double StateSpaceModel::obs_loglik_at(std::size_t step, const Eigen::Ref<const Vector>& y,
                                      const Eigen::Ref<const Vector>& u) const {
  const double ll = obs_noise(step).logpdf(y - obs_operator(step) * u);
  return std::isfinite(ll) ? ll : -std::numeric_limits<double>::infinity();
}

double StateSpaceModel::transition_logpdf(std::size_t step, const Eigen::Ref<const Vector>& prev,
                                          const Eigen::Ref<const Vector>& next) const {
  const Vector mean = transition_mean(step, prev);
  if (!mean.allFinite()) {
    return -std::numeric_limits<double>::infinity();
  }
  return process_noise(step).logpdf(next - mean);
}

Vector StateSpaceModel::sample_transition(std::size_t step, const Eigen::Ref<const Vector>& prev,
                                          RngStream& rng) const {
  return transition_mean(step, prev) + process_noise(step).sample(rng);
}

Vector StateSpaceModel::sample_observation(std::size_t step, const Eigen::Ref<const Vector>& u,
                                           RngStream& rng) const {
  return obs_operator(step) * u + obs_noise(step).sample(rng);
}

LinearGaussianModel::LinearGaussianModel(Matrix transition, const Matrix& process_cov, Matrix obs_operator,
                                         const Matrix& obs_cov, GaussianDist prior, std::size_t steps)
    : StateSpaceModel(std::move(prior), GaussianDist(Vector::Zero(process_cov.rows()), process_cov),
                      std::move(obs_operator), GaussianDist(Vector::Zero(obs_cov.rows()), obs_cov), steps),
      transition_(std::move(transition)) {
  if (transition_.rows() != state_dim() || transition_.cols() != state_dim()) {
    throw ShapeMismatch("transition matrix must be n_u x n_u");
  }
}

Vector LinearGaussianModel::transition_mean(std::size_t /*step*/, const Eigen::Ref<const Vector>& prev) const {
  return transition_ * prev;
}

ParameterMap LinearGaussianModel::parameters() const {
  ParameterMap p;
  p["n_u"] = static_cast<double>(state_dim());
  p["n_v"] = static_cast<double>(obs_dim());
  p["steps"] = static_cast<double>(steps());
  return p;
}

}  // namespace dmpf
