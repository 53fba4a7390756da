#include "pdettc/euler/initial_conditions.hpp"

#include "pdettc/core/rng.hpp"

#include <cmath>
#include <string>

namespace pdettc::euler {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

// Shortest periodic separation on the unit interval.
double periodic_delta(double a, double b) {
  double d = a - b;
  d -= std::round(d);
  return d;
}

void require_state(const PrimState& s, std::string_view what) {
  if (!(s.rho > 0.0) || !(s.p > 0.0) || !std::isfinite(s.vx) || !std::isfinite(s.vy))
    throw ConfigError(std::string(what) + ": state must have rho > 0 and p > 0");
}

PrimState random_state(RngStream& rng) {
  PrimState s;
  s.rho = rng.uniform(0.5, 2.0);
  s.vx = rng.uniform(-0.5, 0.5);
  s.vy = rng.uniform(-0.5, 0.5);
  s.p = rng.uniform(0.5, 2.0);
  return s;
}

RiemannParams random_riemann(RngStream& rng) {
  RiemannParams rp;
  rp.x_split = rng.uniform(0.3, 0.7);
  rp.y_split = rng.uniform(0.3, 0.7);
  for (auto& q : rp.quadrants) q = random_state(rng);
  return rp;
}

const PrimState& quadrant(const RiemannParams& rp, bool east, bool north) {
  return rp.quadrants[(north ? 2 : 0) + (east ? 1 : 0)];
}

void fill(Snapshot& u, int i, int j, const PrimState& s) {
  u.rho(i, j) = s.rho;
  u.vx(i, j) = s.vx;
  u.vy(i, j) = s.vy;
  u.p(i, j) = s.p;
}

struct PostShock {
  double rho, vx, p;
};

PostShock rankine_hugoniot(double mach, double rho1, double p1, double gamma) {
  const double m2 = mach * mach;
  const double rho2 = rho1 * (gamma + 1.0) * m2 / ((gamma - 1.0) * m2 + 2.0);
  const double p2 = p1 * (1.0 + 2.0 * gamma / (gamma + 1.0) * (m2 - 1.0));
  const double shock_speed = mach * std::sqrt(gamma * p1 / rho1);
  return {rho2, shock_speed * (1.0 - rho1 / rho2), p2};
}

}  // namespace

std::string_view family_name(ICFamily f) {
  switch (f) {
    case ICFamily::RP: return "rp";
    case ICFamily::CRP: return "crp";
    case ICFamily::Gauss: return "gauss";
    case ICFamily::KH: return "kh";
    case ICFamily::RPUI: return "rpui";
    case ICFamily::RM: return "rm";
  }
  return "?";
}

ICFamily parse_family(std::string_view name) {
  for (auto f : {ICFamily::RP, ICFamily::CRP, ICFamily::Gauss, ICFamily::KH, ICFamily::RPUI,
                 ICFamily::RM}) {
    if (family_name(f) == name) return f;
  }
  throw ConfigError("unknown initial-condition family '" + std::string(name) + "'");
}

double kh_vx(const KelvinHelmholtzParams& kh, double y) {
  return kh.shear_speed * std::tanh((std::abs(y - 0.5) - 0.25) / kh.layer_width);
}

double kh_rho(const KelvinHelmholtzParams& kh, double y) {
  const double inside = 0.5 * (1.0 - std::tanh((std::abs(y - 0.5) - 0.25) / kh.layer_width));
  return kh.rho_outer + (kh.rho_inner - kh.rho_outer) * inside;
}

ICSpec sample_ic_spec(ICFamily family, std::uint64_t seed, double gamma) {
  RngStream rng(seed, static_cast<std::uint64_t>(family) + 1);
  ICSpec spec;
  spec.family = family;
  spec.seed = seed;
  switch (family) {
    case ICFamily::RP:
      spec.params = random_riemann(rng);
      break;
    case ICFamily::CRP: {
      CurvedRiemannParams c;
      c.inner = random_state(rng);
      c.outer = random_state(rng);
      c.cx = rng.uniform();
      c.cy = rng.uniform();
      c.radius = rng.uniform(0.15, 0.3);
      const int n_modes = 1 + static_cast<int>(rng.below(3));
      for (int m = 0; m < n_modes; ++m)
        c.modes.push_back({2 + static_cast<int>(rng.below(4)), rng.uniform(0.0, 0.2),
                           rng.uniform(0.0, kTwoPi)});
      spec.params = c;
      break;
    }
    case ICFamily::Gauss: {
      GaussParams g;
      g.background = {rng.uniform(0.8, 1.2), rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2),
                      rng.uniform(0.8, 1.2)};
      const int n_bumps = 1 + static_cast<int>(rng.below(3));
      for (int b = 0; b < n_bumps; ++b)
        g.bumps.push_back({rng.uniform(), rng.uniform(), rng.uniform(0.05, 0.12),
                           rng.uniform(0.2, 1.0), rng.uniform(0.2, 1.0)});
      spec.params = g;
      break;
    }
    case ICFamily::KH: {
      KelvinHelmholtzParams kh;
      kh.rho_inner = rng.uniform(1.0, 2.5);
      kh.rho_outer = 1.0;
      kh.shear_speed = rng.uniform(0.3, 0.6);
      kh.amplitude = rng.uniform(0.005, 0.02);
      kh.mode = 1 << rng.below(3);
      spec.params = kh;
      break;
    }
    case ICFamily::RPUI: {
      PerturbedRiemannParams pr;
      pr.base = random_riemann(rng);
      pr.amp_x = rng.uniform(0.02, 0.1);
      pr.amp_y = rng.uniform(0.02, 0.1);
      pr.k_x = 1 + static_cast<int>(rng.below(3));
      pr.k_y = 1 + static_cast<int>(rng.below(3));
      pr.phase_x = rng.uniform(0.0, kTwoPi);
      pr.phase_y = rng.uniform(0.0, kTwoPi);
      spec.params = pr;
      break;
    }
    case ICFamily::RM: {
      RichtmyerMeshkovParams rm;
      rm.mach = rng.uniform(1.2, 2.0);
      rm.shock_x = rng.uniform(0.1, 0.2);
      rm.interface_x = rng.uniform(0.35, 0.45);
      rm.amplitude = rng.uniform(0.02, 0.06);
      rm.k = 1 + static_cast<int>(rng.below(3));
      rm.phase = rng.uniform(0.0, kTwoPi);
      rm.rho_heavy = rng.uniform(2.0, 4.0);
      spec.params = rm;
      break;
    }
  }
  (void)gamma;
  validate(spec);
  return spec;
}

void validate(const ICSpec& spec) {
  const auto mismatch = [&] {
    throw ConfigError("parameter record does not match family '" +
                      std::string(family_name(spec.family)) + "'");
  };
  switch (spec.family) {
    case ICFamily::RP: {
      const auto* rp = std::get_if<RiemannParams>(&spec.params);
      if (!rp) mismatch();
      for (const auto& q : rp->quadrants) require_state(q, "rp quadrant");
      break;
    }
    case ICFamily::CRP: {
      const auto* c = std::get_if<CurvedRiemannParams>(&spec.params);
      if (!c) mismatch();
      require_state(c->inner, "crp inner");
      require_state(c->outer, "crp outer");
      if (!(c->radius > 0.0)) throw ConfigError("crp radius must be positive");
      break;
    }
    case ICFamily::Gauss: {
      const auto* g = std::get_if<GaussParams>(&spec.params);
      if (!g) mismatch();
      require_state(g->background, "gauss background");
      double rho_floor = g->background.rho, p_floor = g->background.p;
      for (const auto& b : g->bumps) {
        if (!(b.sigma > 0.0)) throw ConfigError("gauss bump width must be positive");
        rho_floor += std::min(0.0, b.rho_amplitude);
        p_floor += std::min(0.0, b.p_amplitude);
      }
      if (!(rho_floor > 0.0) || !(p_floor > 0.0))
        throw ConfigError("gauss bumps can drive rho or p non-positive");
      break;
    }
    case ICFamily::KH: {
      const auto* kh = std::get_if<KelvinHelmholtzParams>(&spec.params);
      if (!kh) mismatch();
      if (!(kh->rho_inner > 0.0) || !(kh->rho_outer > 0.0) || !(kh->pressure > 0.0))
        throw ConfigError("kh densities and pressure must be positive");
      if (!(kh->layer_width > 0.0) || !(kh->sigma > 0.0))
        throw ConfigError("kh widths must be positive");
      break;
    }
    case ICFamily::RPUI: {
      const auto* pr = std::get_if<PerturbedRiemannParams>(&spec.params);
      if (!pr) mismatch();
      for (const auto& q : pr->base.quadrants) require_state(q, "rpui quadrant");
      break;
    }
    case ICFamily::RM: {
      const auto* rm = std::get_if<RichtmyerMeshkovParams>(&spec.params);
      if (!rm) mismatch();
      if (!(rm->mach >= 1.0)) throw ConfigError("rm shock Mach number must be >= 1");
      if (!(rm->rho_light > 0.0) || !(rm->rho_heavy > 0.0) || !(rm->pressure > 0.0))
        throw ConfigError("rm densities and pressure must be positive");
      if (!(rm->shock_x < rm->interface_x - rm->amplitude) ||
          !(rm->interface_x + rm->amplitude < rm->heavy_end_x) || rm->heavy_end_x >= 1.0)
        throw ConfigError("rm layout must satisfy shock < interface < heavy_end < 1");
      break;
    }
  }
}

Snapshot make_initial_condition(const ICSpec& spec, const GridSpec& grid, double gamma) {
  grid.validate();
  validate(spec);
  Snapshot u = uniform_snapshot(grid, 1.0, 0.0, 0.0, 1.0, 0.0);

  for (int j = 0; j < grid.ny; ++j) {
    const double y = grid.y_center(j);
    for (int i = 0; i < grid.nx; ++i) {
      const double x = grid.x_center(i);
      switch (spec.family) {
        case ICFamily::RP: {
          const auto& rp = std::get<RiemannParams>(spec.params);
          fill(u, i, j, quadrant(rp, x >= rp.x_split, y >= rp.y_split));
          break;
        }
        case ICFamily::CRP: {
          const auto& c = std::get<CurvedRiemannParams>(spec.params);
          const double ddx = periodic_delta(x, c.cx), ddy = periodic_delta(y, c.cy);
          const double theta = std::atan2(ddy, ddx);
          double r = c.radius;
          for (const auto& m : c.modes)
            r += c.radius * m.amplitude * std::cos(m.k * theta + m.phase);
          fill(u, i, j, std::hypot(ddx, ddy) < r ? c.inner : c.outer);
          break;
        }
        case ICFamily::Gauss: {
          const auto& g = std::get<GaussParams>(spec.params);
          PrimState s = g.background;
          for (const auto& b : g.bumps) {
            const double ddx = periodic_delta(x, b.cx), ddy = periodic_delta(y, b.cy);
            const double w = std::exp(-(ddx * ddx + ddy * ddy) / (2.0 * b.sigma * b.sigma));
            s.rho += b.rho_amplitude * w;
            s.p += b.p_amplitude * w;
          }
          fill(u, i, j, s);
          break;
        }
        case ICFamily::KH: {
          const auto& kh = std::get<KelvinHelmholtzParams>(spec.params);
          const double s2 = 2.0 * kh.sigma * kh.sigma;
          const double envelope =
              std::exp(-(y - 0.25) * (y - 0.25) / s2) + std::exp(-(y - 0.75) * (y - 0.75) / s2);
          fill(u, i, j,
               {kh_rho(kh, y), kh_vx(kh, y),
                kh.amplitude * std::sin(kTwoPi * kh.mode * x) * envelope, kh.pressure});
          break;
        }
        case ICFamily::RPUI: {
          const auto& pr = std::get<PerturbedRiemannParams>(spec.params);
          const double xs =
              pr.base.x_split + pr.amp_x * std::sin(kTwoPi * pr.k_x * y + pr.phase_x);
          const double ys =
              pr.base.y_split + pr.amp_y * std::sin(kTwoPi * pr.k_y * x + pr.phase_y);
          fill(u, i, j, quadrant(pr.base, x >= xs, y >= ys));
          break;
        }
        case ICFamily::RM: {
          const auto& rm = std::get<RichtmyerMeshkovParams>(spec.params);
          const double xi = rm.interface_x + rm.amplitude * std::cos(kTwoPi * rm.k * y + rm.phase);
          if (x < rm.shock_x) {
            const PostShock ps = rankine_hugoniot(rm.mach, rm.rho_light, rm.pressure, gamma);
            fill(u, i, j, {ps.rho, ps.vx, 0.0, ps.p});
          } else if (x >= xi && x < rm.heavy_end_x) {
            fill(u, i, j, {rm.rho_heavy, 0.0, 0.0, rm.pressure});
          } else {
            fill(u, i, j, {rm.rho_light, 0.0, 0.0, rm.pressure});
          }
          break;
        }
      }
    }
  }
  require_physical(u, "initial condition");
  return u;
}

}  // namespace pdettc::euler
