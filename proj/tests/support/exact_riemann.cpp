#include "exact_riemann.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pdettc::testing {

ExactRiemann::ExactRiemann(Primitive1D left, Primitive1D right, double gamma)
    : l_(left), r_(right), g_(gamma) {
  cl_ = std::sqrt(g_ * l_.p / l_.rho);
  cr_ = std::sqrt(g_ * r_.p / r_.rho);
  if (2.0 / (g_ - 1.0) * (cl_ + cr_) <= r_.u - l_.u) throw std::runtime_error("vacuum generated");
  const double z = (g_ - 1.0) / (2.0 * g_);
  double p = std::pow((cl_ + cr_ - 0.5 * (g_ - 1.0) * (r_.u - l_.u)) /
                          (cl_ / std::pow(l_.p, z) + cr_ / std::pow(r_.p, z)),
                      1.0 / z);
  p = std::max(p, 1e-10);
  for (int it = 0; it < 100; ++it) {
    double dl, dr;
    const double f = pressure_function(p, l_, cl_, dl) + pressure_function(p, r_, cr_, dr) +
                     (r_.u - l_.u);
    const double next = std::max(1e-12, p - f / (dl + dr));
    const double change = 2.0 * std::abs(next - p) / (next + p);
    p = next;
    if (change < 1e-14) break;
  }
  p_star_ = p;
  double dl, dr;
  u_star_ = 0.5 * (l_.u + r_.u) +
            0.5 * (pressure_function(p, r_, cr_, dr) - pressure_function(p, l_, cl_, dl));
}

double ExactRiemann::pressure_function(double p, const Primitive1D& s, double c,
                                       double& deriv) const {
  if (p > s.p) {
    const double a = 2.0 / ((g_ + 1.0) * s.rho), b = (g_ - 1.0) / (g_ + 1.0) * s.p;
    const double q = std::sqrt(a / (p + b));
    deriv = q * (1.0 - 0.5 * (p - s.p) / (b + p));
    return (p - s.p) * q;
  }
  const double ratio = p / s.p;
  deriv = std::pow(ratio, -(g_ + 1.0) / (2.0 * g_)) / (s.rho * c);
  return 2.0 * c / (g_ - 1.0) * (std::pow(ratio, (g_ - 1.0) / (2.0 * g_)) - 1.0);
}

Primitive1D ExactRiemann::sample(double xi) const {
  const double g = g_;
  const double gm = (g - 1.0) / (g + 1.0);
  if (xi <= u_star_) {
    const auto& s = l_;
    const double c = cl_;
    if (p_star_ > s.p) {
      const double ratio = p_star_ / s.p;
      const double speed = s.u - c * std::sqrt((g + 1.0) / (2.0 * g) * ratio + (g - 1.0) / (2.0 * g));
      if (xi <= speed) return s;
      return {s.rho * (ratio + gm) / (ratio * gm + 1.0), u_star_, p_star_};
    }
    const double c_star = c * std::pow(p_star_ / s.p, (g - 1.0) / (2.0 * g));
    if (xi <= s.u - c) return s;
    if (xi >= u_star_ - c_star) return {s.rho * std::pow(p_star_ / s.p, 1.0 / g), u_star_, p_star_};
    const double k = 2.0 / (g + 1.0) + gm / c * (s.u - xi);
    return {s.rho * std::pow(k, 2.0 / (g - 1.0)), 2.0 / (g + 1.0) * (c + (g - 1.0) / 2.0 * s.u + xi),
            s.p * std::pow(k, 2.0 * g / (g - 1.0))};
  }
  const auto& s = r_;
  const double c = cr_;
  if (p_star_ > s.p) {
    const double ratio = p_star_ / s.p;
    const double speed = s.u + c * std::sqrt((g + 1.0) / (2.0 * g) * ratio + (g - 1.0) / (2.0 * g));
    if (xi >= speed) return s;
    return {s.rho * (ratio + gm) / (ratio * gm + 1.0), u_star_, p_star_};
  }
  const double c_star = c * std::pow(p_star_ / s.p, (g - 1.0) / (2.0 * g));
  if (xi >= s.u + c) return s;
  if (xi <= u_star_ + c_star) return {s.rho * std::pow(p_star_ / s.p, 1.0 / g), u_star_, p_star_};
  const double k = 2.0 / (g + 1.0) - gm / c * (s.u - xi);
  return {s.rho * std::pow(k, 2.0 / (g - 1.0)), 2.0 / (g + 1.0) * (-c + (g - 1.0) / 2.0 * s.u + xi),
          s.p * std::pow(k, 2.0 * g / (g - 1.0))};
}

}  // namespace pdettc::testing
