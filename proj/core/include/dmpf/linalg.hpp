#ifndef DMPF_LINALG_HPP
#define DMPF_LINALG_HPP

#include <span>
#include <utility>

#include <Eigen/Core>

/**
 * \file
 * \brief Dense vector/matrix aliases and the moment estimators shared by all filters.
 *
 * Point sets (particles, ensembles) are stored as row-major M x n matrices so that each
 * point is a contiguous row.
 */

namespace dmpf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using PointSet = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;

/// Returns (A + A^T) / 2.
Matrix symmetrize(const Matrix& a);

/// Jitter added on the single retry of a failed factorization: 1e-9 * max(max diag, 1).
double cholesky_jitter(const Matrix& cov);

/**
 * Lower-triangular L with L L^T = cov.
 *
 * The input is symmetrized first. If the factorization fails it is retried once with
 * cholesky_jitter(cov) added to the diagonal; NotPositiveDefinite is thrown if that
 * also fails.
 */
Matrix cholesky(const Matrix& cov);

/// Mean and population covariance sum_m W_m (u_m - mu)(u_m - mu)^T; weights must sum to 1.
std::pair<Vector, Matrix> weighted_moments(const PointSet& points, std::span<const double> weights);

/// Sample mean and covariance with 1/(M-1) normalization.
std::pair<Vector, Matrix> unweighted_moments(const PointSet& points);

/// True when every entry is finite.
bool all_finite(const Eigen::Ref<const Matrix>& m);

}  // namespace dmpf

#endif  // DMPF_LINALG_HPP
