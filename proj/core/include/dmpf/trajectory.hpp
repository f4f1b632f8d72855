#ifndef DMPF_TRAJECTORY_HPP
#define DMPF_TRAJECTORY_HPP

#include <cstddef>
#include <istream>
#include <ostream>
#include <vector>

#include "dmpf/linalg.hpp"
#include "dmpf/model.hpp"

namespace dmpf {

class RngStream;

/// Ground-truth states and observations at steps 0..size()-1.
struct Trajectory {
  PointSet states;
  PointSet observations;
  std::vector<double> times;

  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(states.rows()); }
  [[nodiscard]] Vector state(std::size_t t) const { return states.row(static_cast<Index>(t)).transpose(); }
  [[nodiscard]] Vector observation(std::size_t t) const {
    return observations.row(static_cast<Index>(t)).transpose();
  }
};

/**
 * Ancestral sampling: u_0 ~ prior, then `steps` noisy transitions, with an observation at
 * every step including t = 0. The result holds steps + 1 rows.
 * Throws NumericalDomain if the transition leaves its domain.
 */
Trajectory simulate(const StateSpaceModel& model, RngStream& rng, std::size_t steps);

/// simulate() with the model's default step count.
Trajectory simulate(const StateSpaceModel& model, RngStream& rng);

/// CSV with header `t,u_1..u_n,y_1..y_m`; t is the step index.
void write_trajectory_csv(const Trajectory& traj, std::ostream& out);

/// Inverse of write_trajectory_csv; times are taken from the model.
Trajectory read_trajectory_csv(std::istream& in, const StateSpaceModel& model);

}  // namespace dmpf

#endif  // DMPF_TRAJECTORY_HPP
