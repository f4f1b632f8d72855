#include "dmpf/gaussian.hpp"

#include <cmath>
#include <numbers>

#include "dmpf/errors.hpp"
#include "dmpf/rng.hpp"

namespace dmpf {

GaussianDist::GaussianDist(Vector mean, const Matrix& cov) : mean_(std::move(mean)), cov_(symmetrize(cov)) {
  if (cov_.rows() != mean_.size() || cov_.cols() != mean_.size()) {
    throw ShapeMismatch("GaussianDist: covariance does not match mean dimension");
  }
  if (!mean_.allFinite()) {
    throw NotPositiveDefinite("GaussianDist: non-finite mean");
  }
  if (mean_.size() > 0 && cov_.isZero(0.0)) {
    point_mass_ = true;
    chol_ = Matrix::Zero(mean_.size(), mean_.size());
    return;
  }
  chol_ = cholesky(cov_);
  log_normalizer_ = chol_.diagonal().array().log().sum() +
                    0.5 * static_cast<double>(mean_.size()) * std::log(2.0 * std::numbers::pi);
}

GaussianDist GaussianDist::isotropic(Index dim, double std_dev) {
  return GaussianDist(Vector::Zero(dim), Matrix::Identity(dim, dim) * (std_dev * std_dev));
}

Vector GaussianDist::sample(RngStream& rng) const {
  if (point_mass_) {
    return mean_;
  }
  const Vector z = rng.standard_normal(dim());
  return mean_ + chol_.triangularView<Eigen::Lower>() * z;
}

PointSet GaussianDist::sample(RngStream& rng, Index n) const {
  PointSet out(n, dim());
  for (Index i = 0; i < n; ++i) {
    out.row(i) = sample(rng).transpose();
  }
  return out;
}

Vector GaussianDist::whiten(const Eigen::Ref<const Vector>& x) const {
  if (point_mass_) {
    throw NotPositiveDefinite("whiten on a point mass");
  }
  return chol_.triangularView<Eigen::Lower>().solve(x);
}

double GaussianDist::logpdf(const Eigen::Ref<const Vector>& x) const {
  if (x.size() != dim()) {
    throw ShapeMismatch("logpdf: point dimension differs from distribution");
  }
  if (point_mass_) {
    throw NotPositiveDefinite("density of a point mass");
  }
  const Vector z = chol_.triangularView<Eigen::Lower>().solve(x - mean_);
  return -0.5 * z.squaredNorm() - log_normalizer_;
}

double GaussianDist::log_normalizer() const {
  if (point_mass_) {
    throw NotPositiveDefinite("normalizer of a point mass");
  }
  return log_normalizer_;
}

double gaussian_logpdf(const GaussianDist& d, const Eigen::Ref<const Vector>& x) { return d.logpdf(x); }

Vector gaussian_sample(const GaussianDist& d, RngStream& rng) { return d.sample(rng); }

}  // namespace dmpf
