#ifndef DMPF_DMPF_HPP
#define DMPF_DMPF_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

#include "dmpf/defensive_mixture.hpp"
#include "dmpf/filter_result.hpp"
#include "dmpf/particle_set.hpp"
#include "dmpf/trajectory.hpp"

namespace dmpf {

class RngStream;

/// Which ancestor set defines q_PF and the predictive density.
enum class AncestorMode {
  /// The systematically resampled, equally weighted set that also feeds the EnKF branch.
  resample,
  /// The weighted posterior of the previous step as is.
  weighted,
};

AncestorMode parse_ancestor_mode(std::string_view text);
std::string_view to_string(AncestorMode mode);

struct DmpfOptions {
  /// Mixture weight under which the optimization samples are drawn (and used at t = 0).
  double a0 = 0.5;
  int grid_points = 101;
  AncestorMode ancestor_mode = AncestorMode::resample;
  /// Skips the optimization and uses this weight at every step, t = 0 included.
  std::optional<double> fixed_a;
};

struct DmpfStepResult {
  ParticleSet posterior;
  double a = 0.0;
  WeightDiagnostics diagnostics;
};

/**
 * t = 0: prior ensemble, perturbed-observation EnKF update, proposal refit against the
 * prior as predictive density, then one mixture draw at a0 (no optimization).
 */
DmpfStepResult dmpf_init(const StateSpaceModel& model, const Eigen::Ref<const Vector>& y0, Index particles,
                         RngStream& rng, const DmpfOptions& options = {});

/**
 * One marginal step: resample ancestors, EnKF forecast and update, proposal refit,
 * mixture draw at a0 to pick a*, final mixture draw at a* with balance-heuristic weights.
 * If the EnKF proposal cannot be built the step runs with a = 0 and is flagged as a fallback.
 */
DmpfStepResult dmpf_step(const StateSpaceModel& model, const ParticleSet& prev, std::size_t step,
                         const Eigen::Ref<const Vector>& y, Index particles, RngStream& rng,
                         const DmpfOptions& options = {});

FilterRunResult run_dmpf(const StateSpaceModel& model, const Trajectory& traj, Index particles, std::uint64_t seed,
                         const DmpfOptions& options = {});

}  // namespace dmpf

#endif  // DMPF_DMPF_HPP
