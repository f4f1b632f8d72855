#ifndef DMPF_PARTICLE_SET_HPP
#define DMPF_PARTICLE_SET_HPP

#include <span>
#include <vector>

#include "dmpf/linalg.hpp"

namespace dmpf {

class RngStream;

/**
 * M weighted particles as rows of an M x n_u point set, with weights kept in log space.
 * After normalize(), exp(log_weights) sums to one.
 */
struct ParticleSet {
  PointSet particles;
  Vector log_weights;
  bool normalized = false;

  /// Equally weighted set over the given points.
  static ParticleSet uniform(PointSet points);

  [[nodiscard]] Index size() const { return particles.rows(); }
  [[nodiscard]] Index dim() const { return particles.cols(); }
  /// Linear-space weights; only meaningful once normalized.
  [[nodiscard]] Vector weights() const { return log_weights.array().exp().matrix(); }
};

/// log(sum_i exp(x_i)), -inf for an empty or all -inf input.
double log_sum_exp(const Eigen::Ref<const Vector>& x);

/// log(exp(a) + exp(b)).
double log_add_exp(double a, double b);

/// Shifts log-weights so the weights sum to one. Throws AllWeightsZero if every weight is zero.
void normalize_in_place(ParticleSet& ps);
ParticleSet normalize(ParticleSet ps);

/// Effective sample size 1 / sum W^2 of a normalized set.
double ess(const ParticleSet& ps);

/**
 * Systematic selection of `count` indices from normalized weights with a single uniform
 * offset: index m is chosen floor(count W_m) or ceil(count W_m) times.
 */
std::vector<Index> systematic_indices(std::span<const double> weights, Index count, RngStream& rng);

/// M equally weighted particles by systematic resampling.
ParticleSet systematic_resample(const ParticleSet& ps, RngStream& rng);

Vector weighted_mean(const ParticleSet& ps);

/// Per-coordinate weighted variance (diagonal of the weighted covariance).
Vector weighted_variance(const ParticleSet& ps);

}  // namespace dmpf

#endif  // DMPF_PARTICLE_SET_HPP
