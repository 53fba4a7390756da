#pragma once

#include "pdettc/euler/dataset.hpp"

#include <json.hpp>

namespace pdettc::euler {

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(GridSpec, nx, ny, lx, ly)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(PrimState, rho, vx, vy, p)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(RiemannParams, x_split, y_split, quadrants)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(FourierMode, k, amplitude, phase)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(CurvedRiemannParams, inner, outer, cx, cy, radius, modes)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(GaussBump, cx, cy, sigma, rho_amplitude, p_amplitude)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(GaussParams, background, bumps)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(KelvinHelmholtzParams, rho_inner, rho_outer, shear_speed,
                                   pressure, layer_width, amplitude, mode, sigma)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(PerturbedRiemannParams, base, amp_x, amp_y, k_x, k_y, phase_x,
                                   phase_y)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(RichtmyerMeshkovParams, mach, shock_x, interface_x,
                                   heavy_end_x, amplitude, k, phase, rho_light, rho_heavy,
                                   pressure)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(Normalization, mean, stdev)

void to_json(nlohmann::json& j, const ICSpec& spec);
void from_json(const nlohmann::json& j, ICSpec& spec);

}  // namespace pdettc::euler
