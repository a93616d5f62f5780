#pragma once

// Guidance velocities v = Im(grad psi / psi) for oscillator states and
// adaptive trajectory integration.

#include <array>
#include <numbers>
#include <vector>

#include "pilotwave/grid.hpp"
#include "pilotwave/ode.hpp"
#include "pilotwave/oscillator.hpp"

namespace pilotwave {

using Vec2 = std::array<double, 2>;

/// (vQx, vQy). Throws AtNode when psi / chi_00 vanishes (|.|^2 < 1e-300).
Vec2 velocity_cartesian(const OscillatorState& state, const Configuration& q, double t);
/// (d eta / dT, d phi / dT). Throws OriginSingular for eta < 1e-12.
Vec2 velocity_polar(const OscillatorState& state, const Configuration& q, double t);

struct IntegratorSettings {
  double rtol = 1e-8;
  double atol = 1e-10;
  double max_step = 2.0 * std::numbers::pi / 1000.0;
  /// A trial step is refused when |psi|^2 falls below node_guard times the
  /// squared magnitude bound of the state's terms at that point.
  double node_guard = 1e-12;
  int max_halvings = 60;

  ode::Settings ode() const;
};

struct TrajectorySample {
  double t;
  Configuration q;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  ode::Stats stats;
  /// Net change of the continuous polar angle between the first and last sample.
  double unwrapped_dphi = 0.0;

  const Configuration& final() const { return samples.back().q; }
};

/// Integrate from t0 to t1 (either direction), recording every accepted step.
Trajectory integrate(const OscillatorState& state, const Configuration& start, double t0,
                     double t1, const IntegratorSettings& settings = {});

struct Endpoint {
  Configuration q;
  double unwrapped_dphi = 0.0;
  ode::Stats stats;
};

/// As integrate() but keeps only the end point.
Endpoint advance(const OscillatorState& state, const Configuration& start, double t0, double t1,
                 const IntegratorSettings& settings = {});

/// d|psi|^2 / dT at a point.
double density_rate(const OscillatorState& state, const Configuration& q, double t);
/// d|psi|^2 / dT sampled at cell centres.
DensityGrid density_rate_grid(const OscillatorState& state, const GridSpec& grid, double t);

/// Non-canonical velocity built from the two-dimensional Green's function of
/// the divergence: j(x) = (1/2pi) sum (x' - x)/|x' - x|^2 drho(x') dA, v = j / rho.
/// Midpoint rule over `rate`; the cell containing x contributes nothing.
Vec2 velocity_green(const DensityGrid& rate, double rho_at_x, const Configuration& q);

}  // namespace pilotwave
