#ifndef DMPF_CONFIG_HPP
#define DMPF_CONFIG_HPP

#include <filesystem>
#include <istream>
#include <map>
#include <string>

#include "dmpf/experiment.hpp"

namespace dmpf {

/**
 * Experiment file: one `key = value` per line, `#` starts a comment.
 *
 *   model = lorenz63
 *   filters = pf, enkf, dmpf
 *   particles = 2000
 *   particles.dmpf = 1000
 *   reference_particles = 20000
 *   trials = 50
 *   seed = 1
 *   model.sigma_obs = 1.0
 *   dmpf.a0 = 0.5
 *   dmpf.ancestor_mode = resample
 *
 * Unknown keys are rejected with ConfigError.
 */
struct KeyValueConfig {
  std::map<std::string, std::string> entries;
  std::string text;
};

KeyValueConfig parse_config(std::istream& in);
KeyValueConfig load_config(const std::filesystem::path& path);

ExperimentSpec experiment_from_config(const KeyValueConfig& config);

/// Parses `key=value` for the command line `--set` flag.
std::pair<std::string, double> parse_override(const std::string& text);

}  // namespace dmpf

#endif  // DMPF_CONFIG_HPP
