#include "dmpf/defensive_mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "dmpf/errors.hpp"
#include "dmpf/particle_set.hpp"
#include "dmpf/rng.hpp"

namespace dmpf {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTieTolerance = 1e-12;
constexpr double kCollapseScale = 1e-12;

Vector log_q_values(const GaussianDist& q, const PointSet& points) {
  Vector out(points.rows());
  for (Index i = 0; i < points.rows(); ++i) {
    out[i] = q.logpdf(points.row(i).transpose());
  }
  return out;
}

}  // namespace

GaussianDist build_enkf_proposal(const PointSet& posterior_ensemble, const Eigen::Ref<const Vector>& y,
                                 const PredictiveDensity& predictive, const StateSpaceModel& model, std::size_t step,
                                 RngStream& rng) {
  const auto [mean, cov] = unweighted_moments(posterior_ensemble);
  // Identical members leave only rounding noise in the sample covariance.
  const double floor = kCollapseScale * std::max(1.0, mean.cwiseAbs().maxCoeff());
  if (!(cov.diagonal().maxCoeff() > floor * floor)) {
    throw NotPositiveDefinite("EnKF ensemble collapsed to a point");
  }
  const GaussianDist fitted(mean, cov);
  if (fitted.is_point_mass()) {
    throw NotPositiveDefinite("EnKF ensemble collapsed to a point");
  }
  ParticleSet draws;
  draws.particles = fitted.sample(rng, posterior_ensemble.rows());
  draws.log_weights = model.obs_loglik(step, y, draws.particles) + predictive.logpdf(draws.particles) -
                      log_q_values(fitted, draws.particles);
  normalize_in_place(draws);
  const Vector w = draws.weights();
  const auto [refit_mean, refit_cov] =
      weighted_moments(draws.particles, std::span<const double>(w.data(), static_cast<std::size_t>(w.size())));
  GaussianDist refit(refit_mean, refit_cov);
  if (refit.is_point_mass()) {
    throw NotPositiveDefinite("reweighted EnKF proposal collapsed to a point");
  }
  return refit;
}

Index enkf_share(double a, Index particles) {
  const auto share = static_cast<Index>(std::llround(a * static_cast<double>(particles)));
  return std::clamp<Index>(share, 0, particles);
}

MixtureSample sample_mixture(const MixtureProposal& proposal, Index particles, RngStream& rng) {
  if (particles < 2) {
    throw SingleParticle("mixture sampling needs at least two particles");
  }
  if (proposal.predictive == nullptr) {
    throw ShapeMismatch("mixture proposal has no predictive component");
  }
  const Index from_enkf = enkf_share(proposal.a, particles);
  if (from_enkf > 0 && !proposal.q_enkf) {
    throw ShapeMismatch("mixture proposal with a > 0 needs an EnKF component");
  }
  MixtureSample out;
  const PointSet pf_part = proposal.predictive->sample(particles - from_enkf, rng);
  out.particles.resize(particles, pf_part.cols());
  if (from_enkf > 0) {
    out.particles.topRows(from_enkf) = proposal.q_enkf->sample(rng, from_enkf);
  }
  out.particles.bottomRows(particles - from_enkf) = pf_part;
  out.labels.assign(static_cast<std::size_t>(from_enkf), Component::enkf);
  out.labels.resize(static_cast<std::size_t>(particles), Component::pf);
  return out;
}

double log_balance_weight(double log_likelihood, double log_predictive, double log_q_enkf, double a) {
  if (log_likelihood == kNegInf || log_predictive == kNegInf) {
    return kNegInf;
  }
  if (a <= 0.0) {
    return log_likelihood;
  }
  if (a >= 1.0) {
    return log_likelihood + log_predictive - log_q_enkf;
  }
  // log(a e^{lq} + (1-a) e^{lp}) factored around the larger term; equal densities give exactly lp.
  double log_mixture = 0.0;
  if (log_q_enkf >= log_predictive) {
    log_mixture = log_q_enkf + std::log1p((1.0 - a) * std::expm1(log_predictive - log_q_enkf));
  } else {
    log_mixture = log_predictive + std::log1p(a * std::expm1(log_q_enkf - log_predictive));
  }
  return log_likelihood + log_predictive - log_mixture;
}

Vector WeightBreakdown::log_weights(double a) const {
  Vector out(size());
  for (Index i = 0; i < size(); ++i) {
    out[i] = log_balance_weight(log_likelihood[i], log_predictive[i], log_q_enkf[i], a);
  }
  return out;
}

Vector WeightBreakdown::log_enkf_weights() const { return log_weights(1.0); }

WeightBreakdown balance_weights(const PointSet& particles, const MixtureProposal& proposal,
                                const Eigen::Ref<const Vector>& y, const StateSpaceModel& model) {
  if (!particles.allFinite()) {
    throw NumericalDomain("balance weights need finite particles");
  }
  WeightBreakdown b;
  b.log_likelihood = model.obs_loglik(proposal.t, y, particles);
  b.log_predictive = proposal.predictive->logpdf(particles);
  b.log_q_enkf = proposal.q_enkf ? log_q_values(*proposal.q_enkf, particles)
                                 : Vector::Constant(particles.rows(), kNegInf);
  return b;
}

double weight_objective(const WeightBreakdown& breakdown, double a, double a0) {
  const Vector log_w0 = breakdown.log_weights(a0);
  const double lse = log_sum_exp(log_w0);
  if (!std::isfinite(lse)) {
    return kInf;
  }
  // Both weight functions share one normalizer: the sample mean of w(., a0) estimates the
  // evidence, which does not depend on a.
  const double shift = lse - std::log(static_cast<double>(log_w0.size()));
  const Vector w0 = (log_w0.array() - shift).exp().matrix();
  const Vector w = (breakdown.log_weights(a).array() - shift).exp().matrix();
  const double j = ((w.array() - 1.0).square() * w0.array()).mean();
  return std::isfinite(j) ? j : kInf;
}

WeightOptimization optimize_a(const WeightBreakdown& breakdown, double a0, int grid_points) {
  if (grid_points < 2) {
    throw ShapeMismatch("weight grid needs at least two points");
  }
  std::vector<double> objective(static_cast<std::size_t>(grid_points));
  double lowest = kInf;
  for (int i = 0; i < grid_points; ++i) {
    const double a = static_cast<double>(i) / static_cast<double>(grid_points - 1);
    objective[static_cast<std::size_t>(i)] = weight_objective(breakdown, a, a0);
    lowest = std::min(lowest, objective[static_cast<std::size_t>(i)]);
  }
  WeightOptimization best;
  best.objective_zero = objective.front();
  best.objective_one = objective.back();
  if (!std::isfinite(lowest)) {
    best.a = a0;
    best.objective_a = weight_objective(breakdown, a0, a0);
    return best;
  }
  // A flat objective differs across the grid only by rounding; such near-ties go to the smallest a.
  const double tie = kTieTolerance * std::max(1.0, std::abs(lowest));
  for (int i = 0; i < grid_points; ++i) {
    if (objective[static_cast<std::size_t>(i)] <= lowest + tie) {
      best.a = static_cast<double>(i) / static_cast<double>(grid_points - 1);
      best.objective_a = objective[static_cast<std::size_t>(i)];
      break;
    }
  }
  return best;
}

}  // namespace dmpf
