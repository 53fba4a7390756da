#pragma once

namespace pdettc::testing {

struct Primitive1D {
  double rho, u, p;
};

/// Exact solution of the 1D Euler Riemann problem (two-rarefaction guess,
/// Newton iteration on the star pressure), sampled at xi = x / t.
class ExactRiemann {
 public:
  ExactRiemann(Primitive1D left, Primitive1D right, double gamma);
  Primitive1D sample(double xi) const;
  double p_star() const { return p_star_; }
  double u_star() const { return u_star_; }

 private:
  double pressure_function(double p, const Primitive1D& s, double c, double& deriv) const;

  Primitive1D l_, r_;
  double g_, cl_, cr_, p_star_ = 0, u_star_ = 0;
};

}  // namespace pdettc::testing
