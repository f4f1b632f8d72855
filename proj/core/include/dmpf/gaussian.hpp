#ifndef DMPF_GAUSSIAN_HPP
#define DMPF_GAUSSIAN_HPP

#include "dmpf/linalg.hpp"

namespace dmpf {

class RngStream;

/**
 * Multivariate normal N(mean, cov) with its Cholesky factor cached at construction.
 *
 * An exactly-zero covariance is accepted as a point mass: sampling returns the mean and
 * density evaluation throws NotPositiveDefinite. Any other covariance must factorize
 * under the jitter policy of cholesky().
 */
class GaussianDist {
 public:
  GaussianDist(Vector mean, const Matrix& cov);

  /// Zero-mean distribution with diagonal covariance std^2 * I.
  static GaussianDist isotropic(Index dim, double std_dev);

  [[nodiscard]] Index dim() const { return mean_.size(); }
  [[nodiscard]] const Vector& mean() const { return mean_; }
  [[nodiscard]] const Matrix& cov() const { return cov_; }
  [[nodiscard]] const Matrix& chol() const { return chol_; }
  [[nodiscard]] bool is_point_mass() const { return point_mass_; }

  /// mean + L z with z ~ N(0, I).
  [[nodiscard]] Vector sample(RngStream& rng) const;

  /// Draws n samples as rows of a point set.
  [[nodiscard]] PointSet sample(RngStream& rng, Index n) const;

  [[nodiscard]] double logpdf(const Eigen::Ref<const Vector>& x) const;

  /// Applies L^{-1}; the squared norm of whiten(x - mean) is the Mahalanobis distance.
  [[nodiscard]] Vector whiten(const Eigen::Ref<const Vector>& x) const;

  /// log det(cov) / 2 + n log(2 pi) / 2, the additive constant of logpdf.
  [[nodiscard]] double log_normalizer() const;

 private:
  Vector mean_;
  Matrix cov_;
  Matrix chol_;
  bool point_mass_ = false;
  double log_normalizer_ = 0.0;
};

/// log N(x; mean, cov) through the cached factor of d.
double gaussian_logpdf(const GaussianDist& d, const Eigen::Ref<const Vector>& x);

Vector gaussian_sample(const GaussianDist& d, RngStream& rng);

}  // namespace dmpf

#endif  // DMPF_GAUSSIAN_HPP
