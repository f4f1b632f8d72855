#include "dmpf/trajectory.hpp"

#include <string>

#include "dmpf/csv.hpp"
#include "dmpf/errors.hpp"
#include "dmpf/rng.hpp"

namespace dmpf {

Trajectory simulate(const StateSpaceModel& model, RngStream& rng, std::size_t steps) {
  if (steps < 1) {
    throw ShapeMismatch("simulate needs at least one step");
  }
  const auto rows = static_cast<Index>(steps + 1);
  Trajectory traj;
  traj.states.resize(rows, model.state_dim());
  traj.observations.resize(rows, model.obs_dim());
  traj.times.resize(steps + 1);

  Vector u = model.prior().sample(rng);
  for (std::size_t t = 0; t <= steps; ++t) {
    if (t > 0) {
      u = model.sample_transition(t, u, rng);
      if (!u.allFinite()) {
        throw NumericalDomain("simulated state became non-finite at step " + std::to_string(t) +
                               " (the discrete map diverged; try another seed)");
      }
    }
    traj.states.row(static_cast<Index>(t)) = u.transpose();
    traj.observations.row(static_cast<Index>(t)) = model.sample_observation(t, u, rng).transpose();
    traj.times[t] = model.time_of(t);
  }
  return traj;
}

Trajectory simulate(const StateSpaceModel& model, RngStream& rng) { return simulate(model, rng, model.steps()); }

void write_trajectory_csv(const Trajectory& traj, std::ostream& out) {
  out << "t";
  for (Index i = 0; i < traj.states.cols(); ++i) {
    out << ",u_" << i + 1;
  }
  for (Index i = 0; i < traj.observations.cols(); ++i) {
    out << ",y_" << i + 1;
  }
  out << '\n';
  for (Index r = 0; r < traj.states.rows(); ++r) {
    out << r;
    for (Index i = 0; i < traj.states.cols(); ++i) {
      out << ',' << csv::format(traj.states(r, i));
    }
    for (Index i = 0; i < traj.observations.cols(); ++i) {
      out << ',' << csv::format(traj.observations(r, i));
    }
    out << '\n';
  }
}

Trajectory read_trajectory_csv(std::istream& in, const StateSpaceModel& model) {
  const Index nu = model.state_dim();
  const Index nv = model.obs_dim();
  std::string line;
  if (!csv::next_line(in, line)) {
    throw ConfigError("trajectory file is empty");
  }
  const auto header = csv::split(line);
  if (static_cast<Index>(header.size()) != 1 + nu + nv || header.front() != "t") {
    throw ConfigError("trajectory header does not match model " + model.name());
  }
  std::vector<std::vector<double>> rows;
  while (csv::next_line(in, line)) {
    const auto fields = csv::split(line);
    if (fields.size() != header.size()) {
      throw ConfigError("trajectory row has " + std::to_string(fields.size()) + " fields");
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) {
      row.push_back(csv::parse_double(f));
    }
    if (row.front() != static_cast<double>(rows.size())) {
      throw ConfigError("trajectory steps must be consecutive from 0");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) {
    throw ConfigError("trajectory has no rows");
  }
  Trajectory traj;
  const auto n = static_cast<Index>(rows.size());
  traj.states.resize(n, nu);
  traj.observations.resize(n, nv);
  for (Index r = 0; r < n; ++r) {
    for (Index i = 0; i < nu; ++i) {
      traj.states(r, i) = rows[r][1 + i];
    }
    for (Index i = 0; i < nv; ++i) {
      traj.observations(r, i) = rows[r][1 + nu + i];
    }
    traj.times.push_back(model.time_of(static_cast<std::size_t>(r)));
  }
  return traj;
}

}  // namespace dmpf
