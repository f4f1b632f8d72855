#include "dmpf/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <thread>

#include <json.hpp>

#include "dmpf/benchmark_models.hpp"
#include "dmpf/csv.hpp"
#include "dmpf/enkf.hpp"
#include "dmpf/errors.hpp"
#include "dmpf/rng.hpp"

namespace dmpf {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw ConfigError("cannot write " + path.string());
  }
  return out;
}

std::vector<double> trial_error_series(const PointSet& estimate, const PointSet& reference) {
  std::vector<double> out(static_cast<std::size_t>(reference.rows()));
  for (Index t = 0; t < reference.rows(); ++t) {
    out[static_cast<std::size_t>(t)] = (estimate.row(t) - reference.row(t)).norm();
  }
  return out;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) {
    return kNaN;
  }
  double s = 0.0;
  for (const double x : v) {
    s += x;
  }
  return s / static_cast<double>(v.size());
}

}  // namespace

std::string_view to_string(FilterKind kind) {
  switch (kind) {
    case FilterKind::pf:
      return "pf";
    case FilterKind::enkf:
      return "enkf";
    case FilterKind::dmpf:
      return "dmpf";
  }
  return "unknown";
}

FilterKind parse_filter(std::string_view name) {
  if (name == "pf") {
    return FilterKind::pf;
  }
  if (name == "enkf") {
    return FilterKind::enkf;
  }
  if (name == "dmpf") {
    return FilterKind::dmpf;
  }
  throw ConfigError("unknown filter '" + std::string(name) + "'");
}

FilterRunResult run_filter(FilterKind kind, const StateSpaceModel& model, const Trajectory& traj, Index particles,
                           std::uint64_t seed, const FilterSettings& settings) {
  switch (kind) {
    case FilterKind::pf:
      return run_pf(model, traj, particles, seed, settings.pf);
    case FilterKind::enkf:
      return run_enkf(model, traj, particles, seed);
    case FilterKind::dmpf:
      return run_dmpf(model, traj, particles, seed, settings.dmpf);
  }
  throw ConfigError("unknown filter kind");
}

ReferencePosterior reference_posterior(const StateSpaceModel& model, const Trajectory& traj, Index particles,
                                       std::uint64_t seed) {
  PfOptions options;
  options.always_resample = true;
  const FilterRunResult run = run_pf(model, traj, particles, seed, options);
  if (run.failed) {
    throw AllWeightsZero("reference particle filter failed: " + run.failure);
  }
  ReferencePosterior ref;
  ref.means = run.means();
  ref.variances = run.variances();
  ref.particles = particles;
  ref.seed = seed;
  return ref;
}

std::vector<double> rmse_series(const std::vector<PointSet>& estimates, const PointSet& reference) {
  std::vector<double> out(static_cast<std::size_t>(reference.rows()), 0.0);
  if (estimates.empty()) {
    std::fill(out.begin(), out.end(), kNaN);
    return out;
  }
  for (const auto& est : estimates) {
    if (est.rows() != reference.rows() || est.cols() != reference.cols()) {
      throw ShapeMismatch("estimate is " + std::to_string(est.rows()) + "x" + std::to_string(est.cols()) +
                          ", reference is " + std::to_string(reference.rows()) + "x" +
                          std::to_string(reference.cols()));
    }
    const auto errors = trial_error_series(est, reference);
    for (std::size_t t = 0; t < out.size(); ++t) {
      out[t] += errors[t];
    }
  }
  for (double& v : out) {
    v /= static_cast<double>(estimates.size());
  }
  return out;
}

double window_average(const std::vector<double>& series, std::size_t first, std::size_t last) {
  if (series.empty() || first >= series.size()) {
    return kNaN;
  }
  last = std::min(last, series.size() - 1);
  double s = 0.0;
  for (std::size_t t = first; t <= last; ++t) {
    s += series[t];
  }
  return s / static_cast<double>(last - first + 1);
}

double median(std::vector<double> values) {
  if (values.empty()) {
    return kNaN;
  }
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

RmseReport rmse(const std::vector<FilterRunResult>& runs, const ReferencePosterior& reference) {
  std::vector<PointSet> means;
  std::vector<PointSet> vars;
  for (const auto& run : runs) {
    if (!run.failed) {
      means.push_back(run.means());
      vars.push_back(run.variances());
    }
  }
  RmseReport report;
  report.trials = means.size();
  report.mean = rmse_series(means, reference.means);
  report.variance = rmse_series(vars, reference.variances);
  report.mean_average = mean_of(report.mean);
  report.variance_average = mean_of(report.variance);
  return report;
}

Index ExperimentSpec::particles_for(FilterKind kind) const {
  const auto it = particles_by_filter.find(kind);
  return it == particles_by_filter.end() ? particles : it->second;
}

void ExperimentSpec::validate() const {
  if (trials < 1) {
    throw ConfigError("trials must be at least 1");
  }
  if (filters.empty()) {
    throw ConfigError("no filters selected");
  }
  for (const FilterKind kind : filters) {
    const Index m = particles_for(kind);
    if (m < 2) {
      throw ConfigError(std::string(to_string(kind)) + " needs at least two particles");
    }
    if (reference_particles < 10 * m) {
      throw ConfigError("reference_particles must be at least 10x the particles of " + std::string(to_string(kind)));
    }
  }
}

void apply_paper_scale(ExperimentSpec& spec) {
  spec.trials = 1000;
  spec.particles = 10000;
  spec.particles_by_filter.clear();
  spec.reference_particles = 500000;
}

const FilterSummary& ExperimentReport::summary(FilterKind kind) const {
  for (const auto& s : filters) {
    if (s.kind == kind) {
      return s;
    }
  }
  throw ConfigError("filter " + std::string(to_string(kind)) + " was not part of the experiment");
}

double ExperimentReport::median_weight_parameter() const {
  std::vector<double> values;
  for (const auto& s : filters) {
    if (s.kind != FilterKind::dmpf) {
      continue;
    }
    for (const auto& run : s.runs) {
      if (run.failed) {
        continue;
      }
      for (const auto& d : run.diagnostics) {
        if (d.t >= 1) {
          values.push_back(d.a);
        }
      }
    }
  }
  return median(std::move(values));
}

ExperimentReport run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const auto model = make_model(spec.model, spec.model_overrides);

  ExperimentReport report;
  report.spec = spec;
  report.model_parameters = model->parameters();
  report.trajectory_seed = derive_seed(spec.seed, "trajectory", 0);
  RngStream traj_rng(report.trajectory_seed);
  report.trajectory = simulate(*model, traj_rng);
  report.reference = reference_posterior(*model, report.trajectory, spec.reference_particles,
                                         derive_seed(spec.seed, "reference", 0));

  struct Task {
    std::size_t filter;
    std::size_t trial;
  };
  std::vector<Task> tasks;
  for (const FilterKind kind : spec.filters) {
    FilterSummary s;
    s.kind = kind;
    s.particles = spec.particles_for(kind);
    s.runs.resize(spec.trials);
    report.filters.push_back(std::move(s));
  }
  // Interleave filters so a partial pool still makes progress on every method.
  for (std::size_t j = 0; j < spec.trials; ++j) {
    for (std::size_t f = 0; f < report.filters.size(); ++f) {
      tasks.push_back({f, j});
    }
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < tasks.size(); i = next.fetch_add(1)) {
      const Task task = tasks[i];
      FilterSummary& s = report.filters[task.filter];
      const std::uint64_t seed = derive_seed(spec.seed, to_string(s.kind), task.trial);
      s.runs[task.trial] = run_filter(s.kind, *model, report.trajectory, s.particles, seed, spec.settings);
    }
  };
  unsigned jobs = spec.jobs == 0 ? std::max(1u, std::thread::hardware_concurrency()) : spec.jobs;
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, tasks.size()));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(jobs);
    for (unsigned w = 0; w < jobs; ++w) {
      pool.emplace_back(worker);
    }
  }

  for (auto& s : report.filters) {
    s.failed_trials = static_cast<std::size_t>(
        std::count_if(s.runs.begin(), s.runs.end(), [](const FilterRunResult& r) { return r.failed; }));
    s.rmse = rmse(s.runs, report.reference);
  }
  return report;
}

void write_artifacts(const ExperimentReport& report, const std::filesystem::path& dir, const ArtifactInfo& info) {
  std::filesystem::create_directories(dir);
  {
    auto out = open_output(dir / "trajectory.csv");
    write_trajectory_csv(report.trajectory, out);
  }
  {
    auto out = open_output(dir / "reference.csv");
    const Index n = report.reference.means.cols();
    out << "t";
    for (Index i = 0; i < n; ++i) {
      out << ",mean_" << i + 1;
    }
    for (Index i = 0; i < n; ++i) {
      out << ",var_" << i + 1;
    }
    out << '\n';
    for (Index t = 0; t < report.reference.means.rows(); ++t) {
      out << t;
      for (Index i = 0; i < n; ++i) {
        out << ',' << csv::format(report.reference.means(t, i));
      }
      for (Index i = 0; i < n; ++i) {
        out << ',' << csv::format(report.reference.variances(t, i));
      }
      out << '\n';
    }
  }
  auto write_series = [&](const std::filesystem::path& path, bool variance) {
    auto out = open_output(path);
    out << "t";
    for (const auto& s : report.filters) {
      out << ',' << to_string(s.kind);
    }
    out << '\n';
    for (std::size_t t = 0; t < report.trajectory.size(); ++t) {
      out << t;
      for (const auto& s : report.filters) {
        out << ',' << csv::format(variance ? s.rmse.variance[t] : s.rmse.mean[t]);
      }
      out << '\n';
    }
  };
  write_series(dir / "rmse_mean.csv", false);
  write_series(dir / "rmse_var.csv", true);
  {
    auto out = open_output(dir / "table.csv");
    out << "filter,mean,variance\n";
    for (const auto& s : report.filters) {
      out << to_string(s.kind) << ',' << csv::format(s.rmse.mean_average) << ','
          << csv::format(s.rmse.variance_average) << '\n';
    }
  }
  {
    auto out = open_output(dir / "trials.csv");
    out << "filter,trial,seed,failed,rmse_mean,rmse_var,median_a\n";
    for (const auto& s : report.filters) {
      for (std::size_t j = 0; j < s.runs.size(); ++j) {
        const auto& run = s.runs[j];
        double em = kNaN;
        double ev = kNaN;
        if (!run.failed) {
          em = mean_of(trial_error_series(run.means(), report.reference.means));
          ev = mean_of(trial_error_series(run.variances(), report.reference.variances));
        }
        std::vector<double> a_values;
        for (const auto& d : run.diagnostics) {
          if (d.t >= 1) {
            a_values.push_back(d.a);
          }
        }
        out << to_string(s.kind) << ',' << j << ',' << run.seed << ',' << (run.failed ? 1 : 0) << ','
            << csv::format(em) << ',' << csv::format(ev) << ',' << csv::format(median(a_values)) << '\n';
      }
    }
  }
  {
    nlohmann::ordered_json j;
    j["filter"] = "dmpf";
    const double med = report.median_weight_parameter();
    j["median_a"] = std::isfinite(med) ? nlohmann::ordered_json(med) : nlohmann::ordered_json(nullptr);
    j["trials"] = nlohmann::ordered_json::array();
    for (const auto& s : report.filters) {
      if (s.kind != FilterKind::dmpf) {
        continue;
      }
      for (std::size_t t = 0; t < s.runs.size(); ++t) {
        nlohmann::ordered_json rec;
        rec["trial"] = t;
        rec["seed"] = s.runs[t].seed;
        rec["failed"] = s.runs[t].failed;
        rec["steps"] = nlohmann::ordered_json::parse(diagnostics_json(s.runs[t].diagnostics));
        j["trials"].push_back(std::move(rec));
      }
    }
    auto out = open_output(dir / "a_trajectory.json");
    out << j.dump(2) << '\n';
  }
  {
    nlohmann::ordered_json j;
    j["version"] = info.version;
    j["config_hash"] = content_hash(info.config_text);
    j["model"] = report.spec.model;
    j["model_overrides"] = report.spec.model_overrides;
    j["model_parameters"] = report.model_parameters;
    j["trials"] = report.spec.trials;
    j["seed"] = report.spec.seed;
    j["trajectory_seed"] = report.trajectory_seed;
    j["reference_particles"] = report.reference.particles;
    j["reference_seed"] = report.reference.seed;
    j["dmpf"] = {{"a0", report.spec.settings.dmpf.a0},
                 {"grid_points", report.spec.settings.dmpf.grid_points},
                 {"ancestor_mode", std::string(to_string(report.spec.settings.dmpf.ancestor_mode))}};
    j["pf"] = {{"resample_fraction", report.spec.settings.pf.resample_fraction}};
    j["filters"] = nlohmann::ordered_json::array();
    for (const auto& s : report.filters) {
      nlohmann::ordered_json f;
      f["name"] = to_string(s.kind);
      f["particles"] = s.particles;
      f["failed_trials"] = s.failed_trials;
      f["rmse_mean"] = s.rmse.mean_average;
      f["rmse_var"] = s.rmse.variance_average;
      std::vector<std::uint64_t> seeds;
      for (const auto& run : s.runs) {
        seeds.push_back(run.seed);
      }
      f["trial_seeds"] = seeds;
      j["filters"].push_back(std::move(f));
    }
    auto out = open_output(dir / "run_meta.json");
    out << j.dump(2) << '\n';
  }
}

void write_run_plan(const ExperimentSpec& spec, const std::filesystem::path& dir, const ArtifactInfo& info) {
  spec.validate();
  const auto model = make_model(spec.model, spec.model_overrides);
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json j;
  j["version"] = info.version;
  j["config_hash"] = content_hash(info.config_text);
  j["dry_run"] = true;
  j["model"] = spec.model;
  j["model_overrides"] = spec.model_overrides;
  j["model_parameters"] = model->parameters();
  j["trials"] = spec.trials;
  j["seed"] = spec.seed;
  j["trajectory_seed"] = derive_seed(spec.seed, "trajectory", 0);
  j["reference_particles"] = spec.reference_particles;
  j["reference_seed"] = derive_seed(spec.seed, "reference", 0);
  j["dmpf"] = {{"a0", spec.settings.dmpf.a0},
               {"grid_points", spec.settings.dmpf.grid_points},
               {"ancestor_mode", std::string(to_string(spec.settings.dmpf.ancestor_mode))}};
  j["pf"] = {{"resample_fraction", spec.settings.pf.resample_fraction}};
  j["filters"] = nlohmann::ordered_json::array();
  for (const FilterKind kind : spec.filters) {
    j["filters"].push_back({{"name", to_string(kind)}, {"particles", spec.particles_for(kind)}});
  }
  auto out = open_output(dir / "run_meta.json");
  out << j.dump(2) << '\n';
}

std::string_view library_version() { return "0.1.0"; }

std::string content_hash(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kHex[h & 0xF];
    h >>= 4;
  }
  return out;
}

}  // namespace dmpf
