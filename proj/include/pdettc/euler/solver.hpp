#pragma once

#include "pdettc/euler/initial_conditions.hpp"
#include "pdettc/euler/state.hpp"

#include <vector>

namespace pdettc::euler {

struct SolverOptions {
  double gamma = kDefaultGamma;
  /// Courant number applied to the summed directional wave speeds.
  double cfl = 0.4;
  int n_outputs = 21;
  double t_end = 1.0;
  long max_steps = 2'000'000;
};

/// Largest dt with dt * max((|vx|+c)/dx + (|vy|+c)/dy) <= cfl.
double max_stable_dt(const Snapshot& u, const GridSpec& grid, double gamma, double cfl);

/// One SSP-RK2 step of the MUSCL-minmod / Rusanov finite-volume scheme with
/// periodic boundaries. The returned snapshot carries time u.t + dt.
///
/// Throws ConfigError when dt exceeds the unit-Courant bound and
/// NumericalError when a stage loses positivity.
Snapshot fv_step(const Snapshot& u, const GridSpec& grid, double dt,
                 double gamma = kDefaultGamma);

struct Trajectory {
  ICSpec ic;
  std::vector<Snapshot> snapshots;
  std::vector<double> times;

  int steps() const { return static_cast<int>(snapshots.size()) - 1; }
};

/// Integrates from the realised initial condition to t_end, storing
/// n_outputs uniformly spaced snapshots. Substeps are CFL-adaptive and land
/// exactly on each output time.
Trajectory solve_trajectory(const ICSpec& spec, const GridSpec& grid,
                            const SolverOptions& options = {});

/// Same integration from an explicit initial snapshot.
Trajectory solve_from(const Snapshot& initial, const GridSpec& grid,
                      const SolverOptions& options = {});

}  // namespace pdettc::euler
