#include "dmpf/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Cholesky>

#include "dmpf/errors.hpp"

namespace dmpf {

Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

double cholesky_jitter(const Matrix& cov) {
  const double max_diag = cov.size() == 0 ? 0.0 : cov.diagonal().maxCoeff();
  return 1e-9 * std::max(max_diag, 1.0);
}

Matrix cholesky(const Matrix& cov) {
  if (cov.rows() != cov.cols()) {
    throw ShapeMismatch("cholesky of a " + std::to_string(cov.rows()) + "x" +
                        std::to_string(cov.cols()) + " matrix");
  }
  if (!all_finite(cov)) {
    throw NotPositiveDefinite("covariance has non-finite entries");
  }
  const Matrix sym = symmetrize(cov);
  Eigen::LLT<Matrix> llt(sym);
  if (llt.info() == Eigen::Success) {
    return llt.matrixL();
  }
  Matrix jittered = sym;
  jittered.diagonal().array() += cholesky_jitter(sym);
  llt.compute(jittered);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("factorization failed after jitter");
  }
  return llt.matrixL();
}

std::pair<Vector, Matrix> weighted_moments(const PointSet& points, std::span<const double> weights) {
  const Index m = points.rows();
  if (m == 0) {
    throw EmptyEnsemble("weighted_moments");
  }
  if (static_cast<Index>(weights.size()) != m) {
    throw ShapeMismatch("weighted_moments: " + std::to_string(weights.size()) + " weights for " +
                        std::to_string(m) + " points");
  }
  const Eigen::Map<const Vector> w(weights.data(), m);
  Vector mean = points.transpose() * w;
  const PointSet centered = points.rowwise() - mean.transpose();
  Matrix cov = centered.transpose() * w.asDiagonal() * centered;
  return {std::move(mean), symmetrize(cov)};
}

std::pair<Vector, Matrix> unweighted_moments(const PointSet& points) {
  const Index m = points.rows();
  if (m == 0) {
    throw EmptyEnsemble("unweighted_moments");
  }
  if (m == 1) {
    throw SingleParticle("unweighted_moments needs at least two points");
  }
  Vector mean = points.colwise().mean().transpose();
  const PointSet centered = points.rowwise() - mean.transpose();
  Matrix cov = (centered.transpose() * centered) / static_cast<double>(m - 1);
  return {std::move(mean), symmetrize(cov)};
}

bool all_finite(const Eigen::Ref<const Matrix>& m) { return m.allFinite(); }

}  // namespace dmpf
