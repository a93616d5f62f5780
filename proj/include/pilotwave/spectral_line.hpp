#pragma once

// Reduced photon-detector model: the excited field mode Q and the energy
// reading devE = (E - E_gamma)/dE, with rescaled time T = 1/resolution.

#include <array>
#include <cstdint>
#include <vector>

#include "pilotwave/guidance.hpp"
#include "pilotwave/ode.hpp"
#include "pilotwave/stats.hpp"

namespace pilotwave {

/// (dQ/dT, d devE/dT). Throws AtNode at Q = 0.
Vec2 reduced_velocity(double q, double dev_e);

/// devE^2/2 + Q^2 - ln|Q| - ln|Q^2 - 1|. Throws OnSeparatrix at Q in {0, +-1}.
double orbit_constant(double q, double dev_e);

/// Centres of the closed orbits, (Q, 0) with Q = +-sqrt(5 +- sqrt 17)/2,
/// ordered ascending.
std::array<double, 4> reduced_fixed_points();

/// Equilibrium density of (Q, devE): one-particle in Q, unit normal in devE.
double reduced_equilibrium(double q, double dev_e);

Vec2 evolve_reduced(Vec2 state, double t0, double t1, const ode::Settings& settings = {});

struct SpectralEnsemble {
  std::vector<double> q, dev_e;
  double w = 1.0;
  double t = 0.0;
  int failed = 0;  // failed members carry NaN
};

/// n points drawn from the equilibrium density with Q widened by w, at T = 0.
SpectralEnsemble spectral_ensemble(double w, int n, std::uint64_t seed);

/// Evolves every member to T = t_end. Members whose integration fails are
/// set to NaN and counted.
void advance_ensemble(SpectralEnsemble& e, double t_end, const ode::Settings& settings = {},
                      unsigned workers = 0);

struct LineProfile {
  double t_obs = 0.0;
  std::vector<double> dev_e;  // finite samples only
  stats::Histogram histogram;
  double mean = 0.0;
  double std = 0.0;
  int peaks = 0;  // KDE peaks at bandwidth 0.2
  int failed = 0;
};

struct LineSettings {
  double hist_lo = -10.0;
  double hist_hi = 10.0;
  std::size_t bins = 80;
  double peak_bandwidth = 0.2;
  ode::Settings integrator;
  unsigned workers = 0;
};

/// Profiles at each observation time, in the order given. Times must be
/// ascending and lie in [1, 1000]; one ensemble is carried through all of them.
std::vector<LineProfile> line_profiles(double w, const std::vector<double>& t_obs, int n, std::uint64_t seed,
                                       const LineSettings& settings = {});

LineProfile line_profile(double w, double t_obs, int n, std::uint64_t seed, const LineSettings& settings = {});

/// Instrument response: Gaussian in E with mean E_gamma and std E_gamma / T.
double dispersion(double e, double e_gamma, double t);

/// Recorded energy for a reading devE: E = E_gamma (1 + devE / T).
double recorded_energy(double dev_e, double e_gamma, double t);

struct TabulatedSpectrum {
  std::vector<double> energy;   // ascending
  std::vector<double> density;

  /// Trapezoidal integral of the density.
  double norm() const;
  void validate() const;
};

/// rho_obs(E) = integral rho_true(E_g) D(E | E_g) dE_g by the trapezoid rule,
/// evaluated on the input energy grid.
TabulatedSpectrum observed_spectrum(const TabulatedSpectrum& true_spectrum, double t);

}  // namespace pilotwave
