#ifndef DMPF_PARTICLE_FILTER_HPP
#define DMPF_PARTICLE_FILTER_HPP

#include <cstddef>
#include <cstdint>

#include "dmpf/filter_result.hpp"
#include "dmpf/model.hpp"
#include "dmpf/particle_set.hpp"
#include "dmpf/trajectory.hpp"

namespace dmpf {

class RngStream;

struct PfOptions {
  /// Resample the incoming set when its ESS falls below this fraction of M.
  double resample_fraction = 0.5;
  /// Resample on every step regardless of ESS (used for reference posteriors).
  bool always_resample = false;
};

/**
 * Pushes every particle through the transition with fresh process noise. Particles whose
 * transition mean is non-finite stay in place and get log-weight -inf.
 */
ParticleSet propagate(const StateSpaceModel& model, const ParticleSet& prev, std::size_t step, RngStream& rng);

/// Bootstrap initialization: M draws from the prior weighted by the t = 0 likelihood.
ParticleSet pf_init(const StateSpaceModel& model, const Eigen::Ref<const Vector>& y0, Index particles, RngStream& rng);

/**
 * One bootstrap step: optional systematic resampling of `prev` (ESS rule in `options`),
 * propagation, likelihood weighting, normalization. Throws AllWeightsZero.
 */
ParticleSet pf_step(const StateSpaceModel& model, const ParticleSet& prev, std::size_t step,
                    const Eigen::Ref<const Vector>& y, RngStream& rng, const PfOptions& options = {});

/// Posterior summary of a weighted set.
FilterStepRecord summarize(std::size_t t, const ParticleSet& ps);

FilterRunResult run_pf(const StateSpaceModel& model, const Trajectory& traj, Index particles, std::uint64_t seed,
                       const PfOptions& options = {});

}  // namespace dmpf

#endif  // DMPF_PARTICLE_FILTER_HPP
