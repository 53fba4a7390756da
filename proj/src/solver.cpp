#include "pdettc/euler/solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

namespace pdettc::euler {

namespace {

inline double minmod(double a, double b) {
  if (a * b <= 0.0) return 0.0;
  return std::abs(a) < std::abs(b) ? a : b;
}

struct Face {
  double rho, vn, vt, p;
};

struct Flux {
  double mass, mn, mt, energy;
};

inline Flux physical_flux(const Face& w, double gamma, double& energy_out) {
  const double e = w.p / (gamma - 1.0) + 0.5 * w.rho * (w.vn * w.vn + w.vt * w.vt);
  energy_out = e;
  const double mn = w.rho * w.vn;
  return {mn, mn * w.vn + w.p, mn * w.vt, w.vn * (e + w.p)};
}

inline Flux rusanov(const Face& l, const Face& r, double gamma) {
  double el, er;
  const Flux fl = physical_flux(l, gamma, el);
  const Flux fr = physical_flux(r, gamma, er);
  const double sl = std::abs(l.vn) + std::sqrt(gamma * l.p / l.rho);
  const double sr = std::abs(r.vn) + std::sqrt(gamma * r.p / r.rho);
  const double s = std::max(sl, sr);
  return {0.5 * (fl.mass + fr.mass) - 0.5 * s * (r.rho - l.rho),
          0.5 * (fl.mn + fr.mn) - 0.5 * s * (r.rho * r.vn - l.rho * l.vn),
          0.5 * (fl.mt + fr.mt) - 0.5 * s * (r.rho * r.vt - l.rho * l.vt),
          0.5 * (fl.energy + fr.energy) - 0.5 * s * (er - el)};
}

// Residual -div(F) accumulated one grid line at a time. `normal` selects the
// sweep direction: 0 sweeps along x, 1 along y.
void accumulate_sweep(const Snapshot& w, int normal, double h, double gamma, Conserved& res) {
  const int nx = w.nx(), ny = w.ny();
  const int n = normal == 0 ? nx : ny;
  const int lines = normal == 0 ? ny : nx;
  const Eigen::Index stride = normal == 0 ? 1 : nx;
  const Eigen::Index line_step = normal == 0 ? nx : 1;

  const double* rho = w.rho.data();
  const double* vn = normal == 0 ? w.vx.data() : w.vy.data();
  const double* vt = normal == 0 ? w.vy.data() : w.vx.data();
  const double* p = w.p.data();
  double* r_mass = res.rho.data();
  double* r_mn = normal == 0 ? res.mx.data() : res.my.data();
  double* r_mt = normal == 0 ? res.my.data() : res.mx.data();
  double* r_e = res.e.data();

  std::vector<Face> cell(n), slope(n);
  std::vector<Flux> flux(n);  // flux[k] sits on the face between k and k+1
  const double inv_h = 1.0 / h;

  for (int line = 0; line < lines; ++line) {
    const Eigen::Index base = line * line_step;
    for (int k = 0; k < n; ++k) {
      const Eigen::Index idx = base + k * stride;
      cell[k] = {rho[idx], vn[idx], vt[idx], p[idx]};
    }
    for (int k = 0; k < n; ++k) {
      const Face& c = cell[k];
      const Face& lo = cell[(k + n - 1) % n];
      const Face& hi = cell[(k + 1) % n];
      slope[k] = {minmod(c.rho - lo.rho, hi.rho - c.rho), minmod(c.vn - lo.vn, hi.vn - c.vn),
                  minmod(c.vt - lo.vt, hi.vt - c.vt), minmod(c.p - lo.p, hi.p - c.p)};
    }
    for (int k = 0; k < n; ++k) {
      const int kp = (k + 1) % n;
      const Face l{cell[k].rho + 0.5 * slope[k].rho, cell[k].vn + 0.5 * slope[k].vn,
                   cell[k].vt + 0.5 * slope[k].vt, cell[k].p + 0.5 * slope[k].p};
      const Face r{cell[kp].rho - 0.5 * slope[kp].rho, cell[kp].vn - 0.5 * slope[kp].vn,
                   cell[kp].vt - 0.5 * slope[kp].vt, cell[kp].p - 0.5 * slope[kp].p};
      flux[k] = rusanov(l, r, gamma);
    }
    for (int k = 0; k < n; ++k) {
      const Flux& out = flux[k];
      const Flux& in = flux[(k + n - 1) % n];
      const Eigen::Index idx = base + k * stride;
      r_mass[idx] -= (out.mass - in.mass) * inv_h;
      r_mn[idx] -= (out.mn - in.mn) * inv_h;
      r_mt[idx] -= (out.mt - in.mt) * inv_h;
      r_e[idx] -= (out.energy - in.energy) * inv_h;
    }
  }
}

Conserved residual(const Snapshot& w, const GridSpec& grid, double gamma) {
  Conserved res{Field::Zero(grid.nx, grid.ny), Field::Zero(grid.nx, grid.ny),
                Field::Zero(grid.nx, grid.ny), Field::Zero(grid.nx, grid.ny)};
  accumulate_sweep(w, 0, grid.dx(), gamma, res);
  accumulate_sweep(w, 1, grid.dy(), gamma, res);
  return res;
}

Snapshot checked_primitive(const Conserved& q, double gamma, double t, const char* stage) {
  Snapshot w = to_primitive(q, gamma, t);
  require_physical(w, stage);
  return w;
}

}  // namespace

double max_stable_dt(const Snapshot& u, const GridSpec& grid, double gamma, double cfl) {
  const Field c = (gamma * u.p / u.rho).sqrt();
  const double rate =
      ((u.vx.abs() + c) / grid.dx() + (u.vy.abs() + c) / grid.dy()).maxCoeff();
  if (!(rate > 0.0) || !std::isfinite(rate)) throw NumericalError("invalid wave-speed estimate");
  return cfl / rate;
}

Snapshot fv_step(const Snapshot& u, const GridSpec& grid, double dt, double gamma) {
  if (u.nx() != grid.nx || u.ny() != grid.ny) throw ConfigError("snapshot does not match grid");
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
  if (dt > max_stable_dt(u, grid, gamma, 1.0) * (1.0 + 1e-12))
    throw ConfigError("time step violates the CFL bound");

  const Conserved q0 = to_conserved(u, gamma);
  const Conserved l0 = residual(u, grid, gamma);
  const Conserved q1{q0.rho + dt * l0.rho, q0.mx + dt * l0.mx, q0.my + dt * l0.my,
                     q0.e + dt * l0.e};
  const Snapshot w1 = checked_primitive(q1, gamma, u.t + dt, "fv_step stage 1");

  const Conserved l1 = residual(w1, grid, gamma);
  const Conserved q2{0.5 * q0.rho + 0.5 * (q1.rho + dt * l1.rho),
                     0.5 * q0.mx + 0.5 * (q1.mx + dt * l1.mx),
                     0.5 * q0.my + 0.5 * (q1.my + dt * l1.my),
                     0.5 * q0.e + 0.5 * (q1.e + dt * l1.e)};
  return checked_primitive(q2, gamma, u.t + dt, "fv_step stage 2");
}

Trajectory solve_from(const Snapshot& initial, const GridSpec& grid,
                      const SolverOptions& options) {
  grid.validate();
  if (options.n_outputs < 2) throw ConfigError("need at least two output times");
  require_physical(initial, "initial condition");

  Trajectory traj;
  const int intervals = options.n_outputs - 1;
  for (int k = 0; k <= intervals; ++k)
    traj.times.push_back(options.t_end * static_cast<double>(k) / intervals);

  Snapshot u = initial;
  u.t = 0.0;
  traj.snapshots.push_back(u);
  long steps = 0;
  for (int k = 1; k <= intervals; ++k) {
    const double t_out = traj.times[k];
    while (u.t < t_out) {
      double dt = max_stable_dt(u, grid, options.gamma, options.cfl);
      bool last = false;
      if (u.t + dt >= t_out * (1.0 - 1e-14)) {
        dt = t_out - u.t;
        last = true;
      }
      try {
        u = fv_step(u, grid, dt, options.gamma);
      } catch (const NumericalError& e) {
        std::ostringstream msg;
        msg << e.what() << " at t=" << u.t;
        throw NumericalError(msg.str());
      }
      if (last) u.t = t_out;
      if (++steps > options.max_steps) throw NumericalError("solver exceeded max_steps");
    }
    traj.snapshots.push_back(u);
  }
  return traj;
}

Trajectory solve_trajectory(const ICSpec& spec, const GridSpec& grid,
                            const SolverOptions& options) {
  Trajectory traj = solve_from(make_initial_condition(spec, grid, options.gamma), grid, options);
  traj.ic = spec;
  return traj;
}

}  // namespace pdettc::euler
