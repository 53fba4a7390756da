#pragma once

#include "pdettc/core/types.hpp"

#include <array>
#include <string_view>

namespace pdettc::euler {

inline constexpr double kDefaultGamma = 1.4;
inline constexpr int kNumChannels = 4;
inline constexpr std::array<std::string_view, kNumChannels> kChannelNames{"rho", "vx", "vy",
                                                                           "p"};

/// Uniform periodic grid on [0, lx) x [0, ly).
struct GridSpec {
  int nx = 64;
  int ny = 64;
  double lx = 1.0;
  double ly = 1.0;

  double dx() const { return lx / nx; }
  double dy() const { return ly / ny; }
  double x_center(int i) const { return (i + 0.5) * dx(); }
  double y_center(int j) const { return (j + 0.5) * dy(); }
  int cells() const { return nx * ny; }

  /// Throws ConfigError on nx, ny < 8 or non-positive lengths.
  void validate() const;
  bool operator==(const GridSpec&) const = default;
};

/// Primitive state (rho, vx, vy, p) at one instant.
template <typename S>
struct SnapshotT {
  FieldT<S> rho, vx, vy, p;
  double t = 0.0;

  int nx() const { return static_cast<int>(rho.rows()); }
  int ny() const { return static_cast<int>(rho.cols()); }

  FieldT<S>& channel(int c) {
    switch (c) {
      case 0: return rho;
      case 1: return vx;
      case 2: return vy;
      default: return p;
    }
  }
  const FieldT<S>& channel(int c) const { return const_cast<SnapshotT&>(*this).channel(c); }

  bool all_finite() const {
    return rho.allFinite() && vx.allFinite() && vy.allFinite() && p.allFinite();
  }
  bool positive() const { return (rho > S(0)).all() && (p > S(0)).all(); }

  template <typename T>
  SnapshotT<T> cast() const {
    return {rho.template cast<T>(), vx.template cast<T>(), vy.template cast<T>(),
            p.template cast<T>(), t};
  }
};

using Snapshot = SnapshotT<Scalar>;

Snapshot uniform_snapshot(const GridSpec& grid, double rho, double vx, double vy, double p,
                          double t = 0.0);

/// Periodic roll by whole cells: result(i + di, j + dj) = u(i, j).
Snapshot shifted(const Snapshot& u, int di, int dj);

/// Same shape on every channel.
bool same_grid(const Snapshot& a, const Snapshot& b);

/// Throws NumericalError naming `where` if any value is non-finite or rho/p <= 0.
void require_physical(const Snapshot& u, std::string_view where);

template <typename Derived>
auto total_energy_density(const Eigen::ArrayBase<Derived>& rho, const Eigen::ArrayBase<Derived>& vx,
                          const Eigen::ArrayBase<Derived>& vy, const Eigen::ArrayBase<Derived>& p,
                          double gamma) {
  using S = typename Derived::Scalar;
  return (p / S(gamma - 1.0) + S(0.5) * rho * (vx.square() + vy.square())).eval();
}

/// Discrete sums over cells (no cell-volume factor).
struct Totals {
  double mass = 0.0;
  double mom_x = 0.0;
  double mom_y = 0.0;
  double energy = 0.0;
};

template <typename S>
Totals totals(const SnapshotT<S>& u, double gamma = kDefaultGamma) {
  Totals out;
  out.mass = static_cast<double>(u.rho.sum());
  out.mom_x = static_cast<double>((u.rho * u.vx).sum());
  out.mom_y = static_cast<double>((u.rho * u.vy).sum());
  out.energy = static_cast<double>(total_energy_density(u.rho, u.vx, u.vy, u.p, gamma).sum());
  return out;
}

/// Conserved variables (rho, rho vx, rho vy, E).
struct Conserved {
  Field rho, mx, my, e;
};

Conserved to_conserved(const Snapshot& u, double gamma);
Snapshot to_primitive(const Conserved& q, double gamma, double t);

}  // namespace pdettc::euler
