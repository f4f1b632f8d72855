#ifndef DMPF_DEFENSIVE_MIXTURE_HPP
#define DMPF_DEFENSIVE_MIXTURE_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "dmpf/gaussian.hpp"
#include "dmpf/model.hpp"
#include "dmpf/predictive_density.hpp"

namespace dmpf {

class RngStream;

/**
 * Gaussian importance distribution refit from an EnKF posterior ensemble:
 *  1. q' = N(sample mean, sample covariance) of the ensemble;
 *  2. M draws from q' weighted by p(y|u) p(u|y_{0:t-1}) / q'(u), self-normalized;
 *  3. q_EnKF = N(weighted mean, weighted covariance) of those draws.
 * Throws NotPositiveDefinite for a collapsed ensemble and AllWeightsZero from step 2.
 */
GaussianDist build_enkf_proposal(const PointSet& posterior_ensemble, const Eigen::Ref<const Vector>& y,
                                 const PredictiveDensity& predictive, const StateSpaceModel& model, std::size_t step,
                                 RngStream& rng);

/// q(u | a) = a q_EnKF(u) + (1 - a) q_PF(u), with q_PF the predictive density.
struct MixtureProposal {
  double a = 0.5;
  /// Absent only when a == 0.
  std::optional<GaussianDist> q_enkf;
  const PredictiveDensity* predictive = nullptr;
  std::size_t t = 0;
};

enum class Component : std::uint8_t { enkf, pf };

struct MixtureSample {
  PointSet particles;
  /// Diagnostics only; the balance heuristic never looks at labels.
  std::vector<Component> labels;
};

/// round(a M) clamped to [0, M]: the number of draws taken from q_EnKF.
Index enkf_share(double a, Index particles);

/// Deterministic mixture: enkf_share(a, M) draws from q_EnKF, the rest from q_PF.
MixtureSample sample_mixture(const MixtureProposal& proposal, Index particles, RngStream& rng);

/// log of p(y|u) p(u|y_{0:t-1}) / (a q_EnKF(u) + (1-a) p(u|y_{0:t-1})), normalizer dropped.
double log_balance_weight(double log_likelihood, double log_predictive, double log_q_enkf, double a);

/// Per-particle densities cached so the weight can be re-evaluated for any a without model calls.
struct WeightBreakdown {
  Vector log_likelihood;
  Vector log_predictive;
  Vector log_q_enkf;

  [[nodiscard]] Index size() const { return log_likelihood.size(); }
  [[nodiscard]] Vector log_weights(double a) const;
  /// Unnormalized log w_EnKF = log p(y|u) + log p(u|y_{0:t-1}) - log q_EnKF(u).
  [[nodiscard]] Vector log_enkf_weights() const;
  /// Unnormalized log w_PF = log p(y|u).
  [[nodiscard]] const Vector& log_pf_weights() const { return log_likelihood; }
};

WeightBreakdown balance_weights(const PointSet& particles, const MixtureProposal& proposal,
                                const Eigen::Ref<const Vector>& y, const StateSpaceModel& model);

/**
 * Importance-sampled weight-variance objective for samples drawn under a0:
 *
 *   J(a) = (1/M) sum_m (w(u_m, a) - 1)^2 w(u_m, a0),
 *
 * with both weights divided by the sample mean of w(., a0), so that w(., a0) has unit mean
 * and w(., a) is measured against the same evidence estimate. +inf when J is undefined.
 */
double weight_objective(const WeightBreakdown& breakdown, double a, double a0);

struct WeightOptimization {
  double a = 0.5;
  double objective_a = 0.0;
  double objective_zero = 0.0;
  double objective_one = 0.0;
};

/**
 * Grid argmin of weight_objective over a in {0, 1/(n-1), ..., 1}. Ties (within a relative 1e-12) resolve to the
 * smallest a; if J is non-finite on the whole grid the result is a0.
 */
WeightOptimization optimize_a(const WeightBreakdown& breakdown, double a0 = 0.5, int grid_points = 101);

}  // namespace dmpf

#endif  // DMPF_DEFENSIVE_MIXTURE_HPP
