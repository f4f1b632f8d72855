#include "dmpf/particle_filter.hpp"

#include <chrono>
#include <limits>

#include "dmpf/errors.hpp"
#include "dmpf/rng.hpp"

namespace dmpf {

ParticleSet propagate(const StateSpaceModel& model, const ParticleSet& prev, std::size_t step, RngStream& rng) {
  const GaussianDist& noise = model.process_noise(step);
  ParticleSet next;
  next.particles.resize(prev.size(), prev.dim());
  next.log_weights = prev.log_weights;
  for (Index m = 0; m < prev.size(); ++m) {
    const Vector mean = model.transition_mean(step, prev.particles.row(m).transpose());
    if (mean.allFinite()) {
      next.particles.row(m) = (mean + noise.sample(rng)).transpose();
    } else {
      next.particles.row(m) = prev.particles.row(m);
      next.log_weights[m] = -std::numeric_limits<double>::infinity();
    }
  }
  next.normalized = false;
  return next;
}

ParticleSet pf_init(const StateSpaceModel& model, const Eigen::Ref<const Vector>& y0, Index particles,
                    RngStream& rng) {
  if (particles < 1) {
    throw EmptyEnsemble("pf_init needs at least two particles");
  }
  if (particles == 1) {
    throw SingleParticle("pf_init needs at least two particles");
  }
  ParticleSet ps;
  ps.particles = model.prior().sample(rng, particles);
  ps.log_weights = model.obs_loglik(0, y0, ps.particles);
  normalize_in_place(ps);
  return ps;
}

ParticleSet pf_step(const StateSpaceModel& model, const ParticleSet& prev, std::size_t step,
                    const Eigen::Ref<const Vector>& y, RngStream& rng, const PfOptions& options) {
  const bool resample =
      options.always_resample || ess(prev) < options.resample_fraction * static_cast<double>(prev.size());
  ParticleSet ps = propagate(model, resample ? systematic_resample(prev, rng) : prev, step, rng);
  ps.log_weights += model.obs_loglik(step, y, ps.particles);
  normalize_in_place(ps);
  return ps;
}

FilterStepRecord summarize(std::size_t t, const ParticleSet& ps) {
  FilterStepRecord rec;
  rec.t = t;
  rec.mean = weighted_mean(ps);
  rec.variance = weighted_variance(ps);
  rec.ess = ess(ps);
  return rec;
}

FilterRunResult run_pf(const StateSpaceModel& model, const Trajectory& traj, Index particles, std::uint64_t seed,
                       const PfOptions& options) {
  using Clock = std::chrono::steady_clock;
  FilterRunResult result;
  result.filter = "pf";
  result.model = model.name();
  result.particles = particles;
  result.seed = seed;
  RngStream rng(seed);
  try {
    ParticleSet ps;
    for (std::size_t t = 0; t < traj.size(); ++t) {
      const auto start = Clock::now();
      ps = t == 0 ? pf_init(model, traj.observation(0), particles, rng)
                  : pf_step(model, ps, t, traj.observation(t), rng, options);
      FilterStepRecord rec = summarize(t, ps);
      rec.wallclock_seconds = std::chrono::duration<double>(Clock::now() - start).count();
      result.steps.push_back(std::move(rec));
    }
  } catch (const Error& e) {
    result.failed = true;
    result.failure = e.what();
  }
  return result;
}

}  // namespace dmpf
