#include "dmpf/enkf.hpp"

#include <chrono>
#include <string>

#include "dmpf/errors.hpp"
#include "dmpf/rng.hpp"

namespace dmpf {

Matrix kalman_gain(const Matrix& forecast_cov, const Matrix& obs_operator, const Matrix& obs_cov) {
  const Matrix hs = obs_operator * forecast_cov;
  const Matrix innovation_cov = hs * obs_operator.transpose() + obs_cov;
  const Matrix l = cholesky(innovation_cov);
  // (H S H^T + R) X = H S, and K = X^T since S is symmetric.
  Matrix x = l.triangularView<Eigen::Lower>().solve(hs);
  l.triangularView<Eigen::Lower>().transpose().solveInPlace(x);
  return x.transpose();
}

PointSet enkf_forecast(const StateSpaceModel& model, const PointSet& ensemble, std::size_t step, RngStream& rng) {
  const GaussianDist& noise = model.process_noise(step);
  PointSet forecast(ensemble.rows(), ensemble.cols());
  for (Index m = 0; m < ensemble.rows(); ++m) {
    const Vector mean = model.transition_mean(step, ensemble.row(m).transpose());
    if (!mean.allFinite()) {
      throw NumericalDomain("EnKF member left the transition domain at step " + std::to_string(step));
    }
    forecast.row(m) = (mean + noise.sample(rng)).transpose();
  }
  return forecast;
}

PointSet enkf_analysis(const StateSpaceModel& model, const PointSet& forecast, std::size_t step,
                       const Eigen::Ref<const Vector>& y, RngStream& rng) {
  const Matrix& h = model.obs_operator(step);
  const GaussianDist& noise = model.obs_noise(step);
  const auto [mean, cov] = unweighted_moments(forecast);
  const Matrix gain = kalman_gain(cov, h, noise.cov());
  PointSet updated(forecast.rows(), forecast.cols());
  for (Index m = 0; m < forecast.rows(); ++m) {
    const Vector u = forecast.row(m).transpose();
    const Vector innovation = y - h * u - noise.sample(rng);
    updated.row(m) = (u + gain * innovation).transpose();
  }
  return updated;
}

PointSet enkf_init(const StateSpaceModel& model, const Eigen::Ref<const Vector>& y0, Index members, RngStream& rng) {
  if (members < 2) {
    throw SingleParticle("EnKF needs at least two members");
  }
  return enkf_analysis(model, model.prior().sample(rng, members), 0, y0, rng);
}

PointSet enkf_step(const StateSpaceModel& model, const PointSet& ensemble, std::size_t step,
                   const Eigen::Ref<const Vector>& y, RngStream& rng) {
  if (ensemble.rows() < 2) {
    throw SingleParticle("EnKF needs at least two members");
  }
  return enkf_analysis(model, enkf_forecast(model, ensemble, step, rng), step, y, rng);
}

FilterStepRecord summarize_ensemble(std::size_t t, const PointSet& ensemble) {
  const auto [mean, cov] = unweighted_moments(ensemble);
  FilterStepRecord rec;
  rec.t = t;
  rec.mean = mean;
  rec.variance = cov.diagonal();
  rec.ess = static_cast<double>(ensemble.rows());
  return rec;
}

FilterRunResult run_enkf(const StateSpaceModel& model, const Trajectory& traj, Index members, std::uint64_t seed) {
  using Clock = std::chrono::steady_clock;
  FilterRunResult result;
  result.filter = "enkf";
  result.model = model.name();
  result.particles = members;
  result.seed = seed;
  RngStream rng(seed);
  try {
    PointSet ensemble;
    for (std::size_t t = 0; t < traj.size(); ++t) {
      const auto start = Clock::now();
      ensemble = t == 0 ? enkf_init(model, traj.observation(0), members, rng)
                        : enkf_step(model, ensemble, t, traj.observation(t), rng);
      FilterStepRecord rec = summarize_ensemble(t, ensemble);
      rec.wallclock_seconds = std::chrono::duration<double>(Clock::now() - start).count();
      result.steps.push_back(std::move(rec));
    }
  } catch (const Error& e) {
    result.failed = true;
    result.failure = e.what();
  }
  return result;
}

}  // namespace dmpf
