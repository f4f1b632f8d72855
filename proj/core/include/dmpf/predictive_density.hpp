#ifndef DMPF_PREDICTIVE_DENSITY_HPP
#define DMPF_PREDICTIVE_DENSITY_HPP

#include <cstddef>
#include <optional>
#include <vector>

#include "dmpf/gaussian.hpp"
#include "dmpf/model.hpp"
#include "dmpf/particle_set.hpp"

namespace dmpf {

class RngStream;

/**
 * One-step predictive density of the marginal filter,
 *
 *   p(u_t | y_{0:t-1}) ~= sum_m W_{t-1}^m N(u_t; f(u_{t-1}^m), Q_t),
 *
 * or the prior itself at t = 0. It is also the PF component q_PF of the defensive mixture.
 *
 * Ancestors with identical transition means (duplicates left by resampling) are merged.
 * Component means are stored whitened by Q^{-1/2} and sorted on their first coordinate.
 * Evaluation points are processed in blocks that share a window of components along that
 * coordinate; components outside the window have log-terms more than 40 + log(K) below a
 * lower bound of the sum, so skipping them changes it by a relative amount below e^{-40}.
 */
class PredictiveDensity {
 public:
  static PredictiveDensity from_ancestors(const StateSpaceModel& model, const ParticleSet& ancestors,
                                          std::size_t step);
  static PredictiveDensity from_prior(const GaussianDist& prior);

  [[nodiscard]] double logpdf_at(const Eigen::Ref<const Vector>& u) const;
  /// Row-wise logpdf; the M-point evaluation is the O(M K) kernel of the filter.
  [[nodiscard]] Vector logpdf(const PointSet& points) const;

  /// Draws: ancestor indices by systematic selection on the mixture weights, then transition noise.
  [[nodiscard]] PointSet sample(Index count, RngStream& rng) const;

  [[nodiscard]] bool is_prior() const { return prior_.has_value(); }
  /// Number of distinct mixture components (0 for the prior form).
  [[nodiscard]] Index components() const { return static_cast<Index>(log_weights_.size()); }

 private:
  PredictiveDensity() = default;

  // Evaluates the points z.col(c), c in `columns`, writing out[c].
  void kernel(const Matrix& z, const std::vector<Index>& columns, Vector& out) const;

  std::optional<GaussianDist> prior_;
  std::optional<GaussianDist> noise_;
  PointSet means_;
  PointSet whitened_;
  std::vector<double> lead_;
  std::vector<double> log_weights_;
  double max_log_weight_ = 0.0;
  double prune_margin_ = 0.0;
};

/// log p(u | ancestors) for a single point, built from scratch.
double predictive_logpdf(const Eigen::Ref<const Vector>& u, const ParticleSet& ancestors,
                         const StateSpaceModel& model, std::size_t step);

}  // namespace dmpf

#endif  // DMPF_PREDICTIVE_DENSITY_HPP
