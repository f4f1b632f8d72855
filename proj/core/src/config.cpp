#include "dmpf/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "dmpf/csv.hpp"
#include "dmpf/errors.hpp"

namespace dmpf {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_integer(const std::string& key, const std::string& value) {
  T out{};
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("'" + key + "' expects an integer, got '" + value + "'");
  }
  return out;
}

double parse_real(const std::string& key, const std::string& value) {
  try {
    return csv::parse_double(value);
  } catch (const Error&) {
    throw ConfigError("'" + key + "' expects a number, got '" + value + "'");
  }
}

}  // namespace

KeyValueConfig parse_config(std::istream& in) {
  KeyValueConfig cfg;
  std::ostringstream raw;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    raw << line << '\n';
    std::string body = line.substr(0, line.find('#'));
    body = trim(body);
    if (body.empty()) {
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }
    std::string key = trim(std::string_view(body).substr(0, eq));
    std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    }
    if (!cfg.entries.emplace(key, value).second) {
      throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
  }
  cfg.text = raw.str();
  return cfg;
}

KeyValueConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config " + path.string());
  }
  return parse_config(in);
}

ExperimentSpec experiment_from_config(const KeyValueConfig& config) {
  ExperimentSpec spec;
  for (const auto& [key, value] : config.entries) {
    if (key == "model") {
      spec.model = value;
    } else if (key == "filters") {
      spec.filters.clear();
      std::stringstream ss(value);
      std::string item;
      while (std::getline(ss, item, ',')) {
        spec.filters.push_back(parse_filter(trim(item)));
      }
    } else if (key == "particles") {
      spec.particles = parse_integer<Index>(key, value);
    } else if (key.rfind("particles.", 0) == 0) {
      spec.particles_by_filter[parse_filter(key.substr(10))] = parse_integer<Index>(key, value);
    } else if (key == "reference_particles") {
      spec.reference_particles = parse_integer<Index>(key, value);
    } else if (key == "trials") {
      spec.trials = parse_integer<std::size_t>(key, value);
    } else if (key == "seed") {
      spec.seed = parse_integer<std::uint64_t>(key, value);
    } else if (key == "jobs") {
      spec.jobs = parse_integer<unsigned>(key, value);
    } else if (key.rfind("model.", 0) == 0) {
      spec.model_overrides[key.substr(6)] = parse_real(key, value);
    } else if (key == "dmpf.a0") {
      spec.settings.dmpf.a0 = parse_real(key, value);
    } else if (key == "dmpf.grid_points") {
      spec.settings.dmpf.grid_points = parse_integer<int>(key, value);
    } else if (key == "dmpf.ancestor_mode") {
      spec.settings.dmpf.ancestor_mode = parse_ancestor_mode(value);
    } else if (key == "pf.resample_fraction") {
      spec.settings.pf.resample_fraction = parse_real(key, value);
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  return spec;
}

std::pair<std::string, double> parse_override(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("expected key=value, got '" + text + "'");
  }
  std::string key = trim(std::string_view(text).substr(0, eq));
  if (key.empty()) {
    throw ConfigError("empty key in '" + text + "'");
  }
  return {key, parse_real(key, trim(std::string_view(text).substr(eq + 1)))};
}

}  // namespace dmpf
