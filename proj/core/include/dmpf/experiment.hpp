#ifndef DMPF_EXPERIMENT_HPP
#define DMPF_EXPERIMENT_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "dmpf/dmpf.hpp"
#include "dmpf/filter_result.hpp"
#include "dmpf/model.hpp"
#include "dmpf/particle_filter.hpp"
#include "dmpf/trajectory.hpp"

namespace dmpf {

enum class FilterKind { pf, enkf, dmpf };

std::string_view to_string(FilterKind kind);
/// Throws ConfigError for anything but pf, enkf or dmpf.
FilterKind parse_filter(std::string_view name);

struct FilterSettings {
  PfOptions pf;
  DmpfOptions dmpf;
};

FilterRunResult run_filter(FilterKind kind, const StateSpaceModel& model, const Trajectory& traj, Index particles,
                           std::uint64_t seed, const FilterSettings& settings = {});

/// Per-step posterior moments of a large bootstrap PF that resamples every step.
struct ReferencePosterior {
  PointSet means;
  PointSet variances;
  Index particles = 0;
  std::uint64_t seed = 0;
};

ReferencePosterior reference_posterior(const StateSpaceModel& model, const Trajectory& traj, Index particles,
                                       std::uint64_t seed);

/**
 * RMSE(t) = (1/J) sum_j [ sum_i (est_j(t, i) - ref(t, i))^2 ]^{1/2}: the coordinate-summed
 * error norm averaged over trials. Throws ShapeMismatch on differing shapes.
 */
std::vector<double> rmse_series(const std::vector<PointSet>& estimates, const PointSet& reference);

/// Mean of series[first..last], both inclusive and clamped to the series.
double window_average(const std::vector<double>& series, std::size_t first, std::size_t last);

double median(std::vector<double> values);

struct RmseReport {
  std::vector<double> mean;
  std::vector<double> variance;
  double mean_average = 0.0;
  double variance_average = 0.0;
  std::size_t trials = 0;
};

RmseReport rmse(const std::vector<FilterRunResult>& runs, const ReferencePosterior& reference);

struct ExperimentSpec {
  std::string model = "bernoulli";
  ParameterMap model_overrides;
  std::vector<FilterKind> filters{FilterKind::pf, FilterKind::enkf, FilterKind::dmpf};
  Index particles = 2000;
  /// Per-filter particle counts overriding `particles`.
  std::map<FilterKind, Index> particles_by_filter;
  Index reference_particles = 20000;
  std::size_t trials = 50;
  std::uint64_t seed = 1;
  /// Worker threads; 0 means hardware concurrency.
  unsigned jobs = 0;
  FilterSettings settings;

  [[nodiscard]] Index particles_for(FilterKind kind) const;
  /// Throws ConfigError when the spec is unusable (no trials, reference too small, ...).
  void validate() const;
};

/// Paper-scale protocol: 1000 trials, 1e4 particles, 5e5 reference particles.
void apply_paper_scale(ExperimentSpec& spec);

struct FilterSummary {
  FilterKind kind = FilterKind::pf;
  Index particles = 0;
  std::vector<FilterRunResult> runs;
  std::size_t failed_trials = 0;
  RmseReport rmse;
};

struct ExperimentReport {
  ExperimentSpec spec;
  ParameterMap model_parameters;
  std::uint64_t trajectory_seed = 0;
  Trajectory trajectory;
  ReferencePosterior reference;
  std::vector<FilterSummary> filters;

  [[nodiscard]] const FilterSummary& summary(FilterKind kind) const;
  /// Median over trials and steps t >= 1 of the optimized DMPF weight; NaN without DMPF runs.
  [[nodiscard]] double median_weight_parameter() const;
};

/// Seeds derived from spec.seed; trials run on a worker pool, results are order-independent.
ExperimentReport run_experiment(const ExperimentSpec& spec);

struct ArtifactInfo {
  std::string version;
  std::string config_text;
};

/**
 * Writes trajectory.csv, reference.csv, rmse_mean.csv, rmse_var.csv, table.csv, trials.csv,
 * a_trajectory.json and run_meta.json into `dir`.
 */
void write_artifacts(const ExperimentReport& report, const std::filesystem::path& dir, const ArtifactInfo& info);

/// run_meta.json for a validated spec without running it; the echo carries "dry_run": true.
void write_run_plan(const ExperimentSpec& spec, const std::filesystem::path& dir, const ArtifactInfo& info);

std::string_view library_version();

/// FNV-1a 64-bit hash rendered as 16 hex digits.
std::string content_hash(std::string_view text);

}  // namespace dmpf

#endif  // DMPF_EXPERIMENT_HPP
