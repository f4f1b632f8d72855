#include "dmpf/dmpf.hpp"

#include <chrono>
#include <string>

#include "dmpf/enkf.hpp"
#include "dmpf/errors.hpp"
#include "dmpf/particle_filter.hpp"
#include "dmpf/rng.hpp"

namespace dmpf {

namespace {

/// Final weighting at the chosen a; at a = 0 the weight is the likelihood and no predictive evaluation is needed.
ParticleSet weigh(const MixtureSample& draw, const MixtureProposal& proposal, const Eigen::Ref<const Vector>& y,
                  const StateSpaceModel& model) {
  ParticleSet ps;
  ps.particles = draw.particles;
  if (proposal.a <= 0.0) {
    ps.log_weights = model.obs_loglik(proposal.t, y, draw.particles);
  } else {
    ps.log_weights = balance_weights(draw.particles, proposal, y, model).log_weights(proposal.a);
  }
  normalize_in_place(ps);
  return ps;
}

std::optional<GaussianDist> try_enkf_proposal(const StateSpaceModel& model, const PointSet& forecast,
                                              std::size_t step, const Eigen::Ref<const Vector>& y,
                                              const PredictiveDensity& predictive, RngStream& rng) {
  try {
    const PointSet posterior = enkf_analysis(model, forecast, step, y, rng);
    return build_enkf_proposal(posterior, y, predictive, model, step, rng);
  } catch (const NotPositiveDefinite&) {
  } catch (const AllWeightsZero&) {
  } catch (const SingleParticle&) {
  }
  return std::nullopt;
}

void check_options(const DmpfOptions& options) {
  if (!(options.a0 >= 0.0 && options.a0 <= 1.0)) {
    throw ConfigError("a0 must lie in [0, 1]");
  }
  if (options.fixed_a && !(*options.fixed_a >= 0.0 && *options.fixed_a <= 1.0)) {
    throw ConfigError("fixed a must lie in [0, 1]");
  }
}

}  // namespace

AncestorMode parse_ancestor_mode(std::string_view text) {
  if (text == "resample") {
    return AncestorMode::resample;
  }
  if (text == "weighted") {
    return AncestorMode::weighted;
  }
  throw ConfigError("unknown ancestor mode '" + std::string(text) + "'");
}

std::string_view to_string(AncestorMode mode) { return mode == AncestorMode::resample ? "resample" : "weighted"; }

DmpfStepResult dmpf_init(const StateSpaceModel& model, const Eigen::Ref<const Vector>& y0, Index particles,
                         RngStream& rng, const DmpfOptions& options) {
  check_options(options);
  if (particles < 2) {
    throw SingleParticle("DMPF needs at least two particles");
  }
  const PredictiveDensity predictive = PredictiveDensity::from_prior(model.prior());
  const PointSet forecast = model.prior().sample(rng, particles);

  MixtureProposal proposal;
  proposal.t = 0;
  proposal.predictive = &predictive;
  proposal.q_enkf = try_enkf_proposal(model, forecast, 0, y0, predictive, rng);
  proposal.a = proposal.q_enkf ? options.fixed_a.value_or(options.a0) : 0.0;

  const MixtureSample draw = sample_mixture(proposal, particles, rng);
  DmpfStepResult result;
  result.posterior = weigh(draw, proposal, y0, model);
  result.a = proposal.a;
  result.diagnostics.t = 0;
  result.diagnostics.a = proposal.a;
  result.diagnostics.ess = ess(result.posterior);
  result.diagnostics.fallback = !proposal.q_enkf;
  if (proposal.q_enkf) {
    const WeightBreakdown b = balance_weights(draw.particles, proposal, y0, model);
    result.diagnostics.objective_zero = weight_objective(b, 0.0, proposal.a);
    result.diagnostics.objective_a = weight_objective(b, proposal.a, proposal.a);
    result.diagnostics.objective_one = weight_objective(b, 1.0, proposal.a);
  }
  return result;
}

DmpfStepResult dmpf_step(const StateSpaceModel& model, const ParticleSet& prev, std::size_t step,
                         const Eigen::Ref<const Vector>& y, Index particles, RngStream& rng,
                         const DmpfOptions& options) {
  check_options(options);
  if (particles < 2) {
    throw SingleParticle("DMPF needs at least two particles");
  }
  const ParticleSet resampled = systematic_resample(prev, rng);
  const ParticleSet& ancestors = options.ancestor_mode == AncestorMode::resample ? resampled : prev;
  const PredictiveDensity predictive = PredictiveDensity::from_ancestors(model, ancestors, step);

  MixtureProposal proposal;
  proposal.t = step;
  proposal.predictive = &predictive;
  try {
    const PointSet forecast = enkf_forecast(model, resampled.particles, step, rng);
    proposal.q_enkf = try_enkf_proposal(model, forecast, step, y, predictive, rng);
  } catch (const NumericalDomain&) {
    proposal.q_enkf.reset();
  }

  DmpfStepResult result;
  result.diagnostics.t = step;
  if (!proposal.q_enkf) {
    proposal.a = 0.0;
    result.diagnostics.fallback = true;
  } else if (options.fixed_a) {
    proposal.a = *options.fixed_a;
  } else {
    MixtureProposal trial = proposal;
    trial.a = options.a0;
    const MixtureSample draw = sample_mixture(trial, particles, rng);
    const WeightBreakdown b = balance_weights(draw.particles, trial, y, model);
    const WeightOptimization opt = optimize_a(b, options.a0, options.grid_points);
    proposal.a = opt.a;
    result.diagnostics.optimized = true;
    result.diagnostics.objective_zero = opt.objective_zero;
    result.diagnostics.objective_a = opt.objective_a;
    result.diagnostics.objective_one = opt.objective_one;
  }

  const MixtureSample draw = sample_mixture(proposal, particles, rng);
  result.posterior = weigh(draw, proposal, y, model);
  result.a = proposal.a;
  result.diagnostics.a = proposal.a;
  result.diagnostics.ess = ess(result.posterior);
  return result;
}

FilterRunResult run_dmpf(const StateSpaceModel& model, const Trajectory& traj, Index particles, std::uint64_t seed,
                         const DmpfOptions& options) {
  using Clock = std::chrono::steady_clock;
  FilterRunResult result;
  result.filter = "dmpf";
  result.model = model.name();
  result.particles = particles;
  result.seed = seed;
  check_options(options);
  RngStream rng(seed);
  try {
    ParticleSet ps;
    for (std::size_t t = 0; t < traj.size(); ++t) {
      const auto start = Clock::now();
      DmpfStepResult step = t == 0 ? dmpf_init(model, traj.observation(0), particles, rng, options)
                                   : dmpf_step(model, ps, t, traj.observation(t), particles, rng, options);
      ps = std::move(step.posterior);
      FilterStepRecord rec = summarize(t, ps);
      rec.a = step.a;
      rec.wallclock_seconds = std::chrono::duration<double>(Clock::now() - start).count();
      result.steps.push_back(std::move(rec));
      result.diagnostics.push_back(step.diagnostics);
    }
  } catch (const Error& e) {
    result.failed = true;
    result.failure = e.what();
  }
  return result;
}

}  // namespace dmpf
