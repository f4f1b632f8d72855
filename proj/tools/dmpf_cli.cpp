// dmpf command-line driver: simulate, filter, bench.
//
// Exit codes: 0 ok, 1 unexpected error, 2 bad configuration, 3 numerical failure,
// 4 when some filter failed in more than half of its bench trials.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dmpf/benchmark_models.hpp"
#include "dmpf/config.hpp"
#include "dmpf/csv.hpp"
#include "dmpf/errors.hpp"
#include "dmpf/experiment.hpp"
#include "dmpf/rng.hpp"
#include "dmpf/trajectory.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

enum ExitCode : int { kOk = 0, kUnexpected = 1, kConfig = 2, kNumerical = 3, kTooManyFailures = 4 };

dmpf::ParameterMap overrides_from(const std::vector<std::string>& sets) {
  dmpf::ParameterMap out;
  for (const auto& s : sets) {
    const auto [key, value] = dmpf::parse_override(s);
    out[key] = value;
  }
  return out;
}

std::ofstream open_file(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw dmpf::ConfigError("cannot write " + path.string());
  }
  return out;
}

// Canonical text of the inputs of a run; its hash goes into the metadata.
std::string describe(const std::string& command, const std::vector<std::pair<std::string, std::string>>& args) {
  std::ostringstream os;
  os << command << '\n';
  for (const auto& [k, v] : args) {
    os << k << " = " << v << '\n';
  }
  return os.str();
}

struct SimulateArgs {
  std::string model = "bernoulli";
  std::uint64_t seed = 1;
  std::vector<std::string> sets;
  std::string out = ".";
};

int cmd_simulate(const SimulateArgs& args) {
  const auto overrides = overrides_from(args.sets);
  const auto model = dmpf::make_model(args.model, overrides);
  const std::uint64_t traj_seed = dmpf::derive_seed(args.seed, "trajectory", 0);
  dmpf::RngStream rng(traj_seed);
  const dmpf::Trajectory traj = dmpf::simulate(*model, rng);

  fs::create_directories(args.out);
  {
    auto out = open_file(fs::path(args.out) / "trajectory.csv");
    dmpf::write_trajectory_csv(traj, out);
  }
  std::vector<std::pair<std::string, std::string>> desc{{"model", args.model}, {"seed", std::to_string(args.seed)}};
  for (const auto& s : args.sets) {
    desc.emplace_back("set", s);
  }
  json meta;
  meta["command"] = "simulate";
  meta["version"] = dmpf::library_version();
  meta["config_hash"] = dmpf::content_hash(describe("simulate", desc));
  meta["model"] = args.model;
  meta["model_overrides"] = overrides;
  meta["model_parameters"] = model->parameters();
  meta["seed"] = args.seed;
  meta["trajectory_seed"] = traj_seed;
  meta["rows"] = traj.size();
  {
    auto out = open_file(fs::path(args.out) / "run_meta.json");
    out << meta.dump(2) << '\n';
  }

  std::cout << "simulated " << model->name() << ": " << traj.size() << " states (" << traj.size() - 1
            << " transitions), state dim " << traj.states.cols() << ", obs dim " << traj.observations.cols() << '\n';
  const auto last = traj.size() - 1;
  std::cout << "  final state:";
  for (dmpf::Index i = 0; i < traj.states.cols(); ++i) {
    std::cout << ' ' << traj.states(static_cast<dmpf::Index>(last), i);
  }
  std::cout << "\n  wrote " << (fs::path(args.out) / "trajectory.csv").string() << '\n';
  return kOk;
}

struct FilterArgs {
  std::string name = "dmpf";
  std::string model = "bernoulli";
  dmpf::Index particles = 2000;
  std::uint64_t seed = 1;
  std::vector<std::string> sets;
  std::string out = ".";
  std::string trajectory;
  double a0 = 0.5;
  std::string ancestor_mode = "resample";
  std::optional<double> fixed_a;
};

int cmd_filter(const FilterArgs& args) {
  const dmpf::FilterKind kind = dmpf::parse_filter(args.name);
  const auto overrides = overrides_from(args.sets);
  const auto model = dmpf::make_model(args.model, overrides);

  dmpf::Trajectory traj;
  std::uint64_t traj_seed = 0;
  if (!args.trajectory.empty()) {
    std::ifstream in(args.trajectory);
    if (!in) {
      throw dmpf::ConfigError("cannot open trajectory " + args.trajectory);
    }
    traj = dmpf::read_trajectory_csv(in, *model);
  } else {
    traj_seed = dmpf::derive_seed(args.seed, "trajectory", 0);
    dmpf::RngStream rng(traj_seed);
    traj = dmpf::simulate(*model, rng);
  }

  dmpf::FilterSettings settings;
  settings.dmpf.a0 = args.a0;
  settings.dmpf.ancestor_mode = dmpf::parse_ancestor_mode(args.ancestor_mode);
  settings.dmpf.fixed_a = args.fixed_a;
  const std::uint64_t filter_seed = dmpf::derive_seed(args.seed, dmpf::to_string(kind), 0);
  const dmpf::FilterRunResult result = dmpf::run_filter(kind, *model, traj, args.particles, filter_seed, settings);

  fs::create_directories(args.out);
  {
    auto out = open_file(fs::path(args.out) / "result.csv");
    dmpf::write_result_csv(result, out);
  }
  std::vector<std::pair<std::string, std::string>> desc{{"name", args.name},
                                                        {"model", args.model},
                                                        {"particles", std::to_string(args.particles)},
                                                        {"seed", std::to_string(args.seed)},
                                                        {"trajectory", args.trajectory},
                                                        {"a0", dmpf::csv::format(args.a0)},
                                                        {"ancestor_mode", args.ancestor_mode}};
  if (args.fixed_a) {
    desc.emplace_back("fixed_a", dmpf::csv::format(*args.fixed_a));
  }
  for (const auto& s : args.sets) {
    desc.emplace_back("set", s);
  }
  json meta = json::parse(dmpf::result_metadata_json(result, model->parameters()));
  meta["command"] = "filter";
  meta["version"] = dmpf::library_version();
  meta["config_hash"] = dmpf::content_hash(describe("filter", desc));
  meta["base_seed"] = args.seed;
  if (args.trajectory.empty()) {
    meta["trajectory_seed"] = traj_seed;
  } else {
    meta["trajectory_file"] = args.trajectory;
  }
  if (kind == dmpf::FilterKind::dmpf) {
    meta["dmpf"] = {{"a0", args.a0}, {"ancestor_mode", args.ancestor_mode}};
    if (args.fixed_a) {
      meta["dmpf"]["fixed_a"] = *args.fixed_a;
    }
  }
  {
    auto out = open_file(fs::path(args.out) / "result.json");
    out << meta.dump(2) << '\n';
  }
  if (kind == dmpf::FilterKind::dmpf) {
    auto out = open_file(fs::path(args.out) / "diagnostics.json");
    out << dmpf::diagnostics_json(result.diagnostics);
  }

  std::cout << args.name << " on " << model->name() << " with M=" << args.particles << ": " << result.steps.size()
            << " of " << traj.size() << " steps";
  if (!result.steps.empty()) {
    std::cout << ", final ESS " << result.steps.back().ess;
  }
  std::cout << '\n';
  if (result.failed) {
    std::cerr << "filter failed: " << result.failure << '\n';
    return kNumerical;
  }
  return kOk;
}

struct BenchArgs {
  std::string config;
  std::string model;
  std::optional<std::size_t> trials;
  std::optional<dmpf::Index> particles;
  std::optional<dmpf::Index> reference_particles;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> jobs;
  bool paper_scale = false;
  bool dry_run = false;
  std::vector<std::string> sets;
  std::string out = "bench_out";
};

int cmd_bench(const BenchArgs& args) {
  dmpf::KeyValueConfig cfg;
  if (!args.config.empty()) {
    cfg = dmpf::load_config(args.config);
  }
  dmpf::ExperimentSpec spec = dmpf::experiment_from_config(cfg);
  if (!args.model.empty()) {
    spec.model = args.model;
  }
  if (args.paper_scale) {
    dmpf::apply_paper_scale(spec);
  }
  if (args.trials) {
    spec.trials = *args.trials;
  }
  if (args.particles) {
    spec.particles = *args.particles;
    spec.particles_by_filter.clear();
  }
  if (args.reference_particles) {
    spec.reference_particles = *args.reference_particles;
  }
  if (args.seed) {
    spec.seed = *args.seed;
  }
  if (args.jobs) {
    spec.jobs = *args.jobs;
  }
  for (const auto& [key, value] : overrides_from(args.sets)) {
    spec.model_overrides[key] = value;
  }

  std::ostringstream text;
  text << cfg.text << "# command line\n";
  text << "model = " << spec.model << "\ntrials = " << spec.trials << "\nparticles = " << spec.particles
       << "\nreference_particles = " << spec.reference_particles << "\nseed = " << spec.seed << '\n';
  for (const auto& [key, value] : spec.model_overrides) {
    text << "model." << key << " = " << dmpf::csv::format(value) << '\n';
  }

  std::cout << "bench " << spec.model << ": " << spec.trials << " trials, reference M=" << spec.reference_particles
            << '\n';
  if (args.dry_run) {
    dmpf::write_run_plan(spec, args.out, {std::string(dmpf::library_version()), text.str()});
    std::cout << "dry run: wrote " << (std::filesystem::path(args.out) / "run_meta.json").string() << '\n';
    return kOk;
  }
  const dmpf::ExperimentReport report = dmpf::run_experiment(spec);
  dmpf::write_artifacts(report, args.out, {std::string(dmpf::library_version()), text.str()});

  int code = kOk;
  std::cout << std::left << std::setw(8) << "filter" << std::setw(8) << "M" << std::setw(14) << "rmse_mean"
            << std::setw(14) << "rmse_var"
            << "failed\n";
  for (const auto& s : report.filters) {
    std::cout << std::left << std::setw(8) << dmpf::to_string(s.kind) << std::setw(8) << s.particles << std::setw(14)
              << s.rmse.mean_average << std::setw(14) << s.rmse.variance_average << s.failed_trials << '/'
              << s.runs.size() << '\n';
    if (2 * s.failed_trials > s.runs.size()) {
      code = kTooManyFailures;
    }
  }
  const double med = report.median_weight_parameter();
  if (std::isfinite(med)) {
    std::cout << "median a (t >= 1): " << med << '\n';
  }
  std::cout << "wrote artifacts to " << args.out << '\n';
  if (code == kTooManyFailures) {
    std::cerr << "more than half of the trials failed for at least one filter\n";
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Defensive marginal particle filter benchmarks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(dmpf::library_version()));

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate a trajectory and write trajectory.csv");
  simulate->add_option("--model", sim.model, "bernoulli | lorenz63 | robot")->capture_default_str();
  simulate->add_option("--seed", sim.seed, "Base seed")->capture_default_str();
  simulate->add_option("--set", sim.sets, "Model parameter override key=value (repeatable)");
  simulate->add_option("--out", sim.out, "Output directory")->capture_default_str();

  FilterArgs flt;
  auto* filter = app.add_subcommand("filter", "Run one filter and write result.csv, result.json");
  filter->add_option("--name", flt.name, "pf | enkf | dmpf")->capture_default_str();
  filter->add_option("--model", flt.model, "bernoulli | lorenz63 | robot")->capture_default_str();
  filter->add_option("-M,--particles", flt.particles, "Number of particles")->capture_default_str();
  filter->add_option("--seed", flt.seed, "Base seed")->capture_default_str();
  filter->add_option("--set", flt.sets, "Model parameter override key=value (repeatable)");
  filter->add_option("--out", flt.out, "Output directory")->capture_default_str();
  filter->add_option("--trajectory", flt.trajectory, "Trajectory CSV to filter (default: simulate from --seed)");
  filter->add_option("--a0", flt.a0, "DMPF pilot weight")->capture_default_str();
  filter->add_option("--ancestor-mode", flt.ancestor_mode, "DMPF ancestors: resample | weighted")
      ->capture_default_str();
  filter->add_option("--fixed-a", flt.fixed_a, "Use this DMPF weight at every step instead of optimizing");

  BenchArgs bch;
  auto* bench = app.add_subcommand("bench", "Run a repeated-trial experiment and write tables and figure data");
  bench->add_option("--config", bch.config, "Experiment config file");
  bench->add_option("--model", bch.model, "Model id (overrides the config)");
  bench->add_option("--trials", bch.trials, "Number of trials per filter");
  bench->add_option("-M,--particles", bch.particles, "Particles for every filter");
  bench->add_option("--reference-particles", bch.reference_particles, "Particles of the reference PF");
  bench->add_option("--seed", bch.seed, "Base seed");
  bench->add_option("--jobs", bch.jobs, "Worker threads (0: all cores)");
  bench->add_flag("--paper-scale", bch.paper_scale, "1000 trials, 1e4 particles, 5e5 reference particles");
  bench->add_flag("--dry-run", bch.dry_run, "Validate the experiment and write run_meta.json without running it");
  bench->add_option("--set", bch.sets, "Model parameter override key=value (repeatable)");
  bench->add_option("--out", bch.out, "Output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*simulate) {
      return cmd_simulate(sim);
    }
    if (*filter) {
      return cmd_filter(flt);
    }
    return cmd_bench(bch);
  } catch (const dmpf::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfig;
  } catch (const dmpf::Error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUnexpected;
  }
}
