#include "pdettc/euler/state.hpp"

#include <string>

namespace pdettc::euler {

void GridSpec::validate() const {
  if (nx < 8 || ny < 8)
    throw ConfigError("grid must have at least 8 cells per direction, got " +
                      std::to_string(nx) + "x" + std::to_string(ny));
  if (!(lx > 0.0) || !(ly > 0.0)) throw ConfigError("grid lengths must be positive");
}

Snapshot uniform_snapshot(const GridSpec& grid, double rho, double vx, double vy, double p,
                          double t) {
  Snapshot u;
  u.rho = Field::Constant(grid.nx, grid.ny, rho);
  u.vx = Field::Constant(grid.nx, grid.ny, vx);
  u.vy = Field::Constant(grid.nx, grid.ny, vy);
  u.p = Field::Constant(grid.nx, grid.ny, p);
  u.t = t;
  return u;
}

namespace {

Field roll(const Field& f, int di, int dj) {
  const int nx = static_cast<int>(f.rows()), ny = static_cast<int>(f.cols());
  Field out(nx, ny);
  for (int j = 0; j < ny; ++j) {
    const int jj = ((j + dj) % ny + ny) % ny;
    for (int i = 0; i < nx; ++i) out(((i + di) % nx + nx) % nx, jj) = f(i, j);
  }
  return out;
}

}  // namespace

Snapshot shifted(const Snapshot& u, int di, int dj) {
  return {roll(u.rho, di, dj), roll(u.vx, di, dj), roll(u.vy, di, dj), roll(u.p, di, dj), u.t};
}

bool same_grid(const Snapshot& a, const Snapshot& b) {
  for (int c = 0; c < kNumChannels; ++c) {
    if (a.channel(c).rows() != b.channel(c).rows() || a.channel(c).cols() != b.channel(c).cols())
      return false;
  }
  return a.rho.size() > 0;
}

void require_physical(const Snapshot& u, std::string_view where) {
  if (!u.all_finite()) throw NumericalError(std::string(where) + ": non-finite state");
  if (!(u.rho > 0.0).all())
    throw NumericalError(std::string(where) + ": non-positive density, min " +
                         std::to_string(u.rho.minCoeff()));
  if (!(u.p > 0.0).all())
    throw NumericalError(std::string(where) + ": non-positive pressure, min " +
                         std::to_string(u.p.minCoeff()));
}

Conserved to_conserved(const Snapshot& u, double gamma) {
  return {u.rho, u.rho * u.vx, u.rho * u.vy, total_energy_density(u.rho, u.vx, u.vy, u.p, gamma)};
}

Snapshot to_primitive(const Conserved& q, double gamma, double t) {
  Snapshot u;
  u.rho = q.rho;
  u.vx = q.mx / q.rho;
  u.vy = q.my / q.rho;
  u.p = (gamma - 1.0) * (q.e - 0.5 * (q.mx.square() + q.my.square()) / q.rho);
  u.t = t;
  return u;
}

}  // namespace pdettc::euler
