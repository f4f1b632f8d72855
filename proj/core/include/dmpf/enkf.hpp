#ifndef DMPF_ENKF_HPP
#define DMPF_ENKF_HPP

#include <cstddef>
#include <cstdint>

#include "dmpf/filter_result.hpp"
#include "dmpf/model.hpp"
#include "dmpf/trajectory.hpp"

namespace dmpf {

class RngStream;

/// K = S H^T (H S H^T + R)^{-1}, computed by a Cholesky solve rather than an inverse.
Matrix kalman_gain(const Matrix& forecast_cov, const Matrix& obs_operator, const Matrix& obs_cov);

/// Prediction: each member through the transition plus process noise. Throws NumericalDomain.
PointSet enkf_forecast(const StateSpaceModel& model, const PointSet& ensemble, std::size_t step, RngStream& rng);

/**
 * Perturbed-observation update u_m + K (y - H u_m - eta_m), eta_m ~ N(0, R), with K built
 * from the sample covariance of the forecast ensemble.
 */
PointSet enkf_analysis(const StateSpaceModel& model, const PointSet& forecast, std::size_t step,
                       const Eigen::Ref<const Vector>& y, RngStream& rng);

/// M prior draws updated with y_0.
PointSet enkf_init(const StateSpaceModel& model, const Eigen::Ref<const Vector>& y0, Index members, RngStream& rng);

PointSet enkf_step(const StateSpaceModel& model, const PointSet& ensemble, std::size_t step,
                   const Eigen::Ref<const Vector>& y, RngStream& rng);

/// Ensemble mean and sample variance (1/(M-1)); ESS is reported as M.
FilterStepRecord summarize_ensemble(std::size_t t, const PointSet& ensemble);

FilterRunResult run_enkf(const StateSpaceModel& model, const Trajectory& traj, Index members, std::uint64_t seed);

}  // namespace dmpf

#endif  // DMPF_ENKF_HPP
