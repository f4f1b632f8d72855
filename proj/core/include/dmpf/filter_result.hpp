#ifndef DMPF_FILTER_RESULT_HPP
#define DMPF_FILTER_RESULT_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "dmpf/linalg.hpp"
#include "dmpf/model.hpp"

namespace dmpf {

struct FilterStepRecord {
  std::size_t t = 0;
  Vector mean;
  /// Diagonal of the posterior covariance.
  Vector variance;
  double ess = 0.0;
  /// Weight of the EnKF mixture component (DMPF only).
  std::optional<double> a;
  double wallclock_seconds = 0.0;
};

/// Per-step record of the mixture-weight optimization.
struct WeightDiagnostics {
  std::size_t t = 0;
  double a = 0.0;
  double ess = 0.0;
  double objective_zero = 0.0;
  double objective_a = 0.0;
  double objective_one = 0.0;
  /// False at t = 0 and on fallback steps, where a was not optimized.
  bool optimized = false;
  /// The EnKF proposal could not be built and the step ran as a pure PF step.
  bool fallback = false;
};

struct FilterRunResult {
  std::string filter;
  std::string model;
  Index particles = 0;
  std::uint64_t seed = 0;
  std::vector<FilterStepRecord> steps;
  std::vector<WeightDiagnostics> diagnostics;
  bool failed = false;
  std::string failure;

  [[nodiscard]] bool has_weight_parameter() const;
  [[nodiscard]] PointSet means() const;
  [[nodiscard]] PointSet variances() const;
  [[nodiscard]] std::vector<double> weight_parameters() const;
  [[nodiscard]] double total_seconds() const;
};

/// `t,mean_1..,var_1..,ess[,a]`; the a column is present only for DMPF results.
void write_result_csv(const FilterRunResult& result, std::ostream& out);

/// JSON metadata: filter, model, parameters, particle count, seed, failure state.
std::string result_metadata_json(const FilterRunResult& result, const ParameterMap& model_parameters);

/// JSON array of {t, a, ess, objective_0, objective_a, objective_1} records.
std::string diagnostics_json(const std::vector<WeightDiagnostics>& diagnostics);

}  // namespace dmpf

#endif  // DMPF_FILTER_RESULT_HPP
