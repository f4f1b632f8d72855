#include "dmpf/filter_result.hpp"

#include <json.hpp>

#include "dmpf/csv.hpp"

namespace dmpf {

bool FilterRunResult::has_weight_parameter() const {
  return !steps.empty() && steps.front().a.has_value();
}

PointSet FilterRunResult::means() const {
  PointSet out(static_cast<Index>(steps.size()), steps.empty() ? 0 : steps.front().mean.size());
  for (std::size_t i = 0; i < steps.size(); ++i) {
    out.row(static_cast<Index>(i)) = steps[i].mean.transpose();
  }
  return out;
}

PointSet FilterRunResult::variances() const {
  PointSet out(static_cast<Index>(steps.size()), steps.empty() ? 0 : steps.front().variance.size());
  for (std::size_t i = 0; i < steps.size(); ++i) {
    out.row(static_cast<Index>(i)) = steps[i].variance.transpose();
  }
  return out;
}

std::vector<double> FilterRunResult::weight_parameters() const {
  std::vector<double> out;
  for (const auto& s : steps) {
    if (s.a) {
      out.push_back(*s.a);
    }
  }
  return out;
}

double FilterRunResult::total_seconds() const {
  double total = 0.0;
  for (const auto& s : steps) {
    total += s.wallclock_seconds;
  }
  return total;
}

void write_result_csv(const FilterRunResult& result, std::ostream& out) {
  const Index n = result.steps.empty() ? 0 : result.steps.front().mean.size();
  const bool with_a = result.has_weight_parameter();
  out << "t";
  for (Index i = 0; i < n; ++i) {
    out << ",mean_" << i + 1;
  }
  for (Index i = 0; i < n; ++i) {
    out << ",var_" << i + 1;
  }
  out << ",ess";
  if (with_a) {
    out << ",a";
  }
  out << '\n';
  for (const auto& s : result.steps) {
    out << s.t;
    for (Index i = 0; i < n; ++i) {
      out << ',' << csv::format(s.mean[i]);
    }
    for (Index i = 0; i < n; ++i) {
      out << ',' << csv::format(s.variance[i]);
    }
    out << ',' << csv::format(s.ess);
    if (with_a) {
      out << ',' << csv::format(s.a.value_or(0.0));
    }
    out << '\n';
  }
}

std::string result_metadata_json(const FilterRunResult& result, const ParameterMap& model_parameters) {
  nlohmann::ordered_json j;
  j["filter"] = result.filter;
  j["model"] = result.model;
  j["model_parameters"] = model_parameters;
  j["particles"] = result.particles;
  j["seed"] = result.seed;
  j["steps"] = result.steps.size();
  j["failed"] = result.failed;
  if (result.failed) {
    j["failure"] = result.failure;
  }
  return j.dump(2) + "\n";
}

std::string diagnostics_json(const std::vector<WeightDiagnostics>& diagnostics) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& d : diagnostics) {
    nlohmann::ordered_json rec;
    rec["t"] = d.t;
    rec["a"] = d.a;
    rec["ess"] = d.ess;
    rec["objective_0"] = d.objective_zero;
    rec["objective_a"] = d.objective_a;
    rec["objective_1"] = d.objective_one;
    rec["optimized"] = d.optimized;
    rec["fallback"] = d.fallback;
    arr.push_back(std::move(rec));
  }
  return arr.dump(2) + "\n";
}

}  // namespace dmpf
