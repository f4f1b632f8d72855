#include "dmpf/predictive_density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dmpf/errors.hpp"
#include "dmpf/rng.hpp"

namespace dmpf {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kPruneLogRatio = 40.0;
constexpr Index kBlock = 128;
constexpr Index kChunk = 512;
// exp(x) is finite for x below about 709.
constexpr double kMaxShiftGap = 600.0;
}  // namespace

PredictiveDensity PredictiveDensity::from_prior(const GaussianDist& prior) {
  PredictiveDensity d;
  d.prior_ = prior;
  return d;
}

PredictiveDensity PredictiveDensity::from_ancestors(const StateSpaceModel& model, const ParticleSet& ancestors,
                                                    std::size_t step) {
  if (!ancestors.normalized) {
    throw AllWeightsZero("predictive density needs normalized ancestors");
  }
  const GaussianDist& noise = model.process_noise(step);
  if (noise.is_point_mass()) {
    throw NotPositiveDefinite("predictive density needs a nondegenerate process noise");
  }
  const Index m = ancestors.size();
  const Index n = ancestors.dim();

  PointSet means(m, n);
  std::vector<double> log_w;
  std::vector<Index> valid;
  for (Index i = 0; i < m; ++i) {
    if (ancestors.log_weights[i] == kNegInf) {
      continue;
    }
    const Vector mean = model.transition_mean(step, ancestors.particles.row(i).transpose());
    if (!mean.allFinite()) {
      continue;
    }
    means.row(static_cast<Index>(valid.size())) = mean.transpose();
    log_w.push_back(ancestors.log_weights[i]);
    valid.push_back(i);
  }
  const auto k = static_cast<Index>(valid.size());
  if (k == 0) {
    throw AllWeightsZero("no ancestor has a defined transition");
  }
  means.conservativeResize(k, n);

  Matrix whitened_cols = means.transpose();
  noise.chol().triangularView<Eigen::Lower>().solveInPlace(whitened_cols);
  const PointSet whitened = whitened_cols.transpose();

  std::vector<Index> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    for (Index j = 0; j < n; ++j) {
      if (whitened(a, j) != whitened(b, j)) {
        return whitened(a, j) < whitened(b, j);
      }
    }
    return a < b;
  });

  PredictiveDensity d;
  d.noise_ = noise;
  d.means_.resize(k, n);
  d.whitened_.resize(k, n);
  Index out = -1;
  for (const Index idx : order) {
    const double lw = log_w[static_cast<std::size_t>(idx)];
    if (out >= 0 && d.whitened_.row(out) == whitened.row(idx)) {
      d.log_weights_.back() = log_add_exp(d.log_weights_.back(), lw);
      continue;
    }
    ++out;
    d.means_.row(out) = means.row(idx);
    d.whitened_.row(out) = whitened.row(idx);
    d.log_weights_.push_back(lw);
  }
  const Index unique = out + 1;
  d.means_.conservativeResize(unique, n);
  d.whitened_.conservativeResize(unique, n);

  // Dropped ancestors take their mass with them; renormalize over the rest.
  const Eigen::Map<const Vector> lw_view(d.log_weights_.data(), unique);
  const double total = log_sum_exp(lw_view);
  for (double& lw : d.log_weights_) {
    lw -= total;
  }
  d.lead_.resize(static_cast<std::size_t>(unique));
  for (Index i = 0; i < unique; ++i) {
    d.lead_[static_cast<std::size_t>(i)] = d.whitened_(i, 0);
  }
  d.max_log_weight_ = *std::max_element(d.log_weights_.begin(), d.log_weights_.end());
  d.prune_margin_ = kPruneLogRatio + std::log(static_cast<double>(unique));
  return d;
}

void PredictiveDensity::kernel(const Matrix& z, const std::vector<Index>& columns, Vector& out) const {
  const Index n = whitened_.cols();
  const auto k = static_cast<Index>(lead_.size());
  const auto b = static_cast<Index>(columns.size());

  // A cheap lower bound on each point's log-sum: its nearest components along the lead axis.
  Vector bound = Vector::Constant(b, kNegInf);
  double lead_lo = std::numeric_limits<double>::infinity();
  double lead_hi = -std::numeric_limits<double>::infinity();
  Vector center = Vector::Zero(n);
  for (Index i = 0; i < b; ++i) {
    const Index col = columns[static_cast<std::size_t>(i)];
    const double lead = z(0, col);
    lead_lo = std::min(lead_lo, lead);
    lead_hi = std::max(lead_hi, lead);
    center += z.col(col);
    const auto pos = static_cast<Index>(std::lower_bound(lead_.begin(), lead_.end(), lead) - lead_.begin());
    for (const Index j : {pos - 1, pos}) {
      if (j >= 0 && j < k) {
        const double d2 = (whitened_.row(j).transpose() - z.col(col)).squaredNorm();
        bound[i] = std::max(bound[i], log_weights_[static_cast<std::size_t>(j)] - 0.5 * d2);
      }
    }
  }
  center /= static_cast<double>(b);
  const double floor_bound = bound.minCoeff();

  // Components farther than `reach` along the lead axis contribute below e^{-margin} each.
  const double reach2 = 2.0 * (max_log_weight_ - floor_bound + prune_margin_);
  Index first = 0;
  Index last = k;
  if (std::isfinite(reach2)) {
    const double reach = std::sqrt(std::max(reach2, 0.0));
    first = static_cast<Index>(std::lower_bound(lead_.begin(), lead_.end(), lead_lo - reach) - lead_.begin());
    last = static_cast<Index>(std::upper_bound(lead_.begin(), lead_.end(), lead_hi + reach) - lead_.begin());
  }

  // With z and m centered, -|z-m|^2/2 = z.m - |m|^2/2 - |z|^2/2, so one chunk is a small GEMM.
  Matrix zc(b, n);
  for (Index i = 0; i < b; ++i) {
    zc.row(i) = (z.col(columns[static_cast<std::size_t>(i)]) - center).transpose();
  }
  const Vector half_norm = 0.5 * zc.rowwise().squaredNorm();

  // Every term lies in [-inf, max_log_weight]; when the bound is close enough to that ceiling
  // it serves as the exp shift and no running maximum is needed.
  const bool fixed_shift = std::isfinite(floor_bound) && max_log_weight_ - floor_bound < kMaxShiftGap;
  Vector shift = fixed_shift ? Vector(bound + half_norm) : Vector::Constant(b, kNegInf);
  Vector sum = Vector::Zero(b);
  Matrix mc_t(n, kChunk);
  Matrix terms(b, kChunk);
  Eigen::RowVectorXd offset(kChunk);
  for (Index s = first; s < last; s += kChunk) {
    const Index len = std::min(kChunk, last - s);
    for (Index j = 0; j < len; ++j) {
      mc_t.col(j) = whitened_.row(s + j).transpose() - center;
      offset[j] = log_weights_[static_cast<std::size_t>(s + j)] - 0.5 * mc_t.col(j).squaredNorm();
    }
    auto t = terms.leftCols(len);
    t.noalias() = zc * mc_t.leftCols(len);
    t.rowwise() += offset.head(len);
    if (!fixed_shift) {
      const Vector chunk_max = t.rowwise().maxCoeff();
      for (Index i = 0; i < b; ++i) {
        const double m = std::max(shift[i], chunk_max[i]);
        sum[i] *= std::exp(shift[i] - m);
        shift[i] = m;
      }
    }
    // In-place steps: the fused broadcast-exp-reduce expression vectorizes poorly in Eigen.
    t.colwise() -= shift;
    t = t.array().exp();
    sum += t.rowwise().sum();
  }
  for (Index i = 0; i < b; ++i) {
    out[columns[static_cast<std::size_t>(i)]] = shift[i] + std::log(sum[i]) - half_norm[i] - noise_->log_normalizer();
  }
}

double PredictiveDensity::logpdf_at(const Eigen::Ref<const Vector>& u) const {
  if (prior_) {
    return prior_->logpdf(u);
  }
  if (u.size() != whitened_.cols()) {
    throw ShapeMismatch("predictive logpdf: point dimension differs from state dimension");
  }
  Matrix z = u;
  noise_->chol().triangularView<Eigen::Lower>().solveInPlace(z);
  Vector out(1);
  kernel(z, {0}, out);
  return out[0];
}

Vector PredictiveDensity::logpdf(const PointSet& points) const {
  Vector out(points.rows());
  if (prior_) {
    for (Index i = 0; i < points.rows(); ++i) {
      out[i] = prior_->logpdf(points.row(i).transpose());
    }
    return out;
  }
  if (points.cols() != whitened_.cols()) {
    throw ShapeMismatch("predictive logpdf: point dimension differs from state dimension");
  }
  Matrix z = points.transpose();
  noise_->chol().triangularView<Eigen::Lower>().solveInPlace(z);
  // Blocks of points adjacent along the lead axis share one component window.
  std::vector<Index> order(static_cast<std::size_t>(points.rows()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return z(0, a) < z(0, b); });
  std::vector<Index> block;
  for (std::size_t s = 0; s < order.size(); s += static_cast<std::size_t>(kBlock)) {
    const std::size_t e = std::min(order.size(), s + static_cast<std::size_t>(kBlock));
    block.assign(order.begin() + static_cast<std::ptrdiff_t>(s), order.begin() + static_cast<std::ptrdiff_t>(e));
    kernel(z, block, out);
  }
  return out;
}

PointSet PredictiveDensity::sample(Index count, RngStream& rng) const {
  if (prior_) {
    return prior_->sample(rng, count);
  }
  std::vector<double> weights(log_weights_.size());
  std::transform(log_weights_.begin(), log_weights_.end(), weights.begin(), [](double lw) { return std::exp(lw); });
  const auto idx = systematic_indices(weights, count, rng);
  PointSet out(count, means_.cols());
  for (Index i = 0; i < count; ++i) {
    out.row(i) = (means_.row(idx[static_cast<std::size_t>(i)]).transpose() + noise_->sample(rng)).transpose();
  }
  return out;
}

double predictive_logpdf(const Eigen::Ref<const Vector>& u, const ParticleSet& ancestors,
                         const StateSpaceModel& model, std::size_t step) {
  return PredictiveDensity::from_ancestors(model, ancestors, step).logpdf_at(u);
}

}  // namespace dmpf
