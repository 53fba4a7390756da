#pragma once

#include "pdettc/core/rng.hpp"
#include "pdettc/euler/state.hpp"

#include <cmath>

namespace pdettc::testing {

/// Smooth positive random state for property tests.
inline euler::Snapshot random_snapshot(const euler::GridSpec& grid, std::uint64_t seed,
                                       double t = 0.0) {
  RngStream rng(seed, 77);
  auto u = euler::uniform_snapshot(grid, 1.0, 0.0, 0.0, 1.0, t);
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      u.rho(i, j) = rng.uniform(0.5, 2.0);
      u.vx(i, j) = rng.uniform(-0.5, 0.5);
      u.vy(i, j) = rng.uniform(-0.5, 0.5);
      u.p(i, j) = rng.uniform(0.5, 2.0);
    }
  return u;
}

inline bool bit_equal(const euler::Snapshot& a, const euler::Snapshot& b) {
  if (!euler::same_grid(a, b) || a.t != b.t) return false;
  for (int c = 0; c < euler::kNumChannels; ++c)
    if (!(a.channel(c).array() == b.channel(c).array()).all()) return false;
  return true;
}

inline double rel_drift(double before, double after, double scale) {
  return std::abs(after - before) / scale;
}

}  // namespace pdettc::testing
