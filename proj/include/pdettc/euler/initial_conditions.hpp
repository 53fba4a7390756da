#pragma once

#include "pdettc/euler/state.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace pdettc::euler {

/// Initial-condition families. The first four are pretraining analogs, the
/// last two downstream analogs.
enum class ICFamily { RP, CRP, Gauss, KH, RPUI, RM };

std::string_view family_name(ICFamily f);
/// Accepts the lowercase names used on the command line ("rp", "crp", ...).
ICFamily parse_family(std::string_view name);

struct PrimState {
  double rho = 1.0, vx = 0.0, vy = 0.0, p = 1.0;
};

/// Four quadrants split at (x_split, y_split); order SW, SE, NW, NE.
struct RiemannParams {
  double x_split = 0.5, y_split = 0.5;
  std::array<PrimState, 4> quadrants{};
};

struct FourierMode {
  int k = 1;
  double amplitude = 0.0;
  double phase = 0.0;
};

/// `inner` inside the closed curve r < radius * (1 + sum a_k cos(k theta + phi_k)).
struct CurvedRiemannParams {
  PrimState inner, outer;
  double cx = 0.5, cy = 0.5, radius = 0.25;
  std::vector<FourierMode> modes;
};

struct GaussBump {
  double cx = 0.5, cy = 0.5, sigma = 0.1;
  double rho_amplitude = 0.0, p_amplitude = 0.0;
};

struct GaussParams {
  PrimState background;
  std::vector<GaussBump> bumps;
};

/// Shear band |y - 1/2| < 1/4 moving at -U against +U outside.
struct KelvinHelmholtzParams {
  double rho_inner = 2.0, rho_outer = 1.0;
  double shear_speed = 0.5;
  double pressure = 2.5;
  double layer_width = 0.025;
  double amplitude = 0.01;
  int mode = 2;
  double sigma = 0.05;
};

/// Riemann problem whose interfaces are displaced by periodic sinusoids:
/// x = x_split + ax sin(2 pi kx y + phx), y = y_split + ay sin(2 pi ky x + phy).
struct PerturbedRiemannParams {
  RiemannParams base;
  double amp_x = 0.05, amp_y = 0.05;
  int k_x = 1, k_y = 1;
  double phase_x = 0.0, phase_y = 0.0;
};

/// Right-moving shock at shock_x hitting a corrugated interface
/// x = interface_x + amplitude cos(2 pi k y + phase) between light and heavy gas.
struct RichtmyerMeshkovParams {
  double mach = 1.5;
  double shock_x = 0.15;
  double interface_x = 0.4;
  double heavy_end_x = 0.85;
  double amplitude = 0.04;
  int k = 2;
  double phase = 0.0;
  double rho_light = 1.0, rho_heavy = 3.0;
  double pressure = 1.0;
};

using ICParams = std::variant<RiemannParams, CurvedRiemannParams, GaussParams,
                              KelvinHelmholtzParams, PerturbedRiemannParams,
                              RichtmyerMeshkovParams>;

struct ICSpec {
  ICFamily family = ICFamily::RP;
  ICParams params = RiemannParams{};
  std::uint64_t seed = 0;
};

/// Draws family parameters from the documented per-family distributions.
ICSpec sample_ic_spec(ICFamily family, std::uint64_t seed, double gamma = kDefaultGamma);

/// Throws ConfigError when the parameters admit rho <= 0 or p <= 0 or the
/// parameter record does not match the family.
void validate(const ICSpec& spec);

Snapshot make_initial_condition(const ICSpec& spec, const GridSpec& grid,
                                double gamma = kDefaultGamma);

/// Closed-form KH profiles, evaluated at height y.
double kh_vx(const KelvinHelmholtzParams& kh, double y);
double kh_rho(const KelvinHelmholtzParams& kh, double y);

}  // namespace pdettc::euler
