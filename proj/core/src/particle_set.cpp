#include "dmpf/particle_set.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dmpf/errors.hpp"
#include "dmpf/rng.hpp"

namespace dmpf {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_normalized(const ParticleSet& ps, const char* who) {
  if (!ps.normalized) {
    throw AllWeightsZero(std::string(who) + " requires a normalized particle set");
  }
}
}  // namespace

ParticleSet ParticleSet::uniform(PointSet points) {
  ParticleSet ps;
  const Index m = points.rows();
  if (m == 0) {
    throw EmptyEnsemble("ParticleSet::uniform");
  }
  ps.particles = std::move(points);
  ps.log_weights = Vector::Constant(m, -std::log(static_cast<double>(m)));
  ps.normalized = true;
  return ps;
}

double log_sum_exp(const Eigen::Ref<const Vector>& x) {
  if (x.size() == 0) {
    return kNegInf;
  }
  const double max = x.maxCoeff();
  if (max == kNegInf) {
    return kNegInf;
  }
  if (max == std::numeric_limits<double>::infinity()) {
    return max;
  }
  double sum = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    sum += std::exp(x[i] - max);
  }
  return max + std::log(sum);
}

double log_add_exp(double a, double b) {
  if (a < b) {
    std::swap(a, b);
  }
  if (b == kNegInf) {
    return a;
  }
  return a + std::log1p(std::exp(b - a));
}

void normalize_in_place(ParticleSet& ps) {
  if (ps.size() == 0) {
    throw EmptyEnsemble("normalize");
  }
  for (Index i = 0; i < ps.log_weights.size(); ++i) {
    if (std::isnan(ps.log_weights[i])) {
      ps.log_weights[i] = kNegInf;
    }
  }
  const double lse = log_sum_exp(ps.log_weights);
  if (!std::isfinite(lse)) {
    throw AllWeightsZero("every log-weight is -inf");
  }
  ps.log_weights.array() -= lse;
  ps.normalized = true;
}

ParticleSet normalize(ParticleSet ps) {
  normalize_in_place(ps);
  return ps;
}

double ess(const ParticleSet& ps) {
  require_normalized(ps, "ess");
  const double sum_sq = (2.0 * ps.log_weights.array()).exp().sum();
  return std::clamp(1.0 / sum_sq, 1.0, static_cast<double>(ps.size()));
}

std::vector<Index> systematic_indices(std::span<const double> weights, Index count, RngStream& rng) {
  const auto m = static_cast<Index>(weights.size());
  if (m == 0) {
    throw EmptyEnsemble("systematic_indices");
  }
  std::vector<Index> out;
  out.reserve(static_cast<std::size_t>(count));
  if (count == 0) {
    return out;
  }
  const double step = 1.0 / static_cast<double>(count);
  const double offset = rng.uniform() * step;
  // Rounding can leave the cumulative sum just below 1; never step past the last positive weight.
  Index last = m - 1;
  while (last > 0 && !(weights[static_cast<std::size_t>(last)] > 0.0)) {
    --last;
  }
  double cumulative = weights[0];
  Index source = 0;
  for (Index k = 0; k < count; ++k) {
    const double position = offset + static_cast<double>(k) * step;
    while (position >= cumulative && source < last) {
      ++source;
      cumulative += weights[static_cast<std::size_t>(source)];
    }
    out.push_back(source);
  }
  return out;
}

ParticleSet systematic_resample(const ParticleSet& ps, RngStream& rng) {
  require_normalized(ps, "systematic_resample");
  const Vector w = ps.weights();
  const auto idx = systematic_indices(std::span<const double>(w.data(), static_cast<std::size_t>(w.size())),
                                      ps.size(), rng);
  PointSet resampled(ps.size(), ps.dim());
  for (Index k = 0; k < ps.size(); ++k) {
    resampled.row(k) = ps.particles.row(idx[static_cast<std::size_t>(k)]);
  }
  return ParticleSet::uniform(std::move(resampled));
}

Vector weighted_mean(const ParticleSet& ps) {
  require_normalized(ps, "weighted_mean");
  return ps.particles.transpose() * ps.weights();
}

Vector weighted_variance(const ParticleSet& ps) {
  require_normalized(ps, "weighted_variance");
  const Vector w = ps.weights();
  const Vector mean = ps.particles.transpose() * w;
  const PointSet centered = ps.particles.rowwise() - mean.transpose();
  return centered.array().square().matrix().transpose() * w;
}

}  // namespace dmpf
