#pragma once

// Two truncated field-theory models: a two-mode decay |1,0> -> |0,1> in the
// rotating-wave approximation, and an energy measurement of one field mode
// by a pointer (vacuum, one particle, or their superposition).

#include <array>
#include <cstdint>
#include <vector>

#include "pilotwave/guidance.hpp"
#include "pilotwave/ode.hpp"
#include "pilotwave/rng.hpp"
#include "pilotwave/stats.hpp"

namespace pilotwave {

// ---- sampling helpers ------------------------------------------------------

/// Density 2 Q^2 exp(-Q^2) / sqrt(pi) of the first excited oscillator state.
double one_particle_density(double q);
double one_particle_cdf(double q);
/// Draws from one_particle_density: Q^2 is Gamma(3/2, 1), built from three
/// normals, with a random sign.
double sample_one_particle(Rng& rng);

// ---- decay -----------------------------------------------------------------

struct DecayConfig {
  double omega = 1.0;
  double g = 1.0;

  void validate() const;
  /// Trajectories repeat with period 2 pi omega / g.
  double period() const;
};

/// Velocity field of the decaying state. Throws AtNode where the density
/// vanishes.
Vec2 decay_velocity(const DecayConfig& config, double q1, double q2, double t);

/// Integrates one configuration from t0 to t1 (either direction).
Vec2 evolve_decay(const DecayConfig& config, Vec2 q, double t0, double t1,
                  const ode::Settings& settings = {});

struct DecayEnsemble {
  std::vector<double> q1_initial, q2_initial;
  std::vector<double> q1, q2;  // NaN where integration failed
  double t = 0.0;
  int failed = 0;

  std::vector<double> valid_q1() const;
  std::vector<double> valid_q2() const;
};

/// Samples n points with q1 drawn from the one-particle density scaled by w
/// (w = 1 is equilibrium) and q2 from the ground-state density, then evolves
/// them to t_end.
DecayEnsemble decay_ensemble(double w, int n, double t_end, std::uint64_t seed, const DecayConfig& config = {},
                             const ode::Settings& settings = {}, unsigned workers = 0);

// ---- energy measurement ----------------------------------------------------

enum class MeasurementCase { Vacuum, OneParticle, Superposition };

/// Coefficients c0 = exp(i theta)/sqrt 2, c1 = 1/sqrt 2 for the superposition.
struct MeasurementModel {
  MeasurementCase kind = MeasurementCase::Vacuum;
  double theta = 0.0;
};

/// Velocity (dQ/dT, dY/dT) of the pointer-mode configuration.
Vec2 measurement_velocity(const MeasurementModel& model, double q, double y, double t);

/// Superposition flux |f|^2 (dQ/dT, dY/dT) / M and |f|^2 / M, where
/// Psi = f(Q, Y, T) G(Q, Y, T) with G the vacuum packet and M > 0 a
/// normalizer. Finite at nodes; used to step trajectories across them.
std::array<double, 3> superposition_flux(double theta, double q, double y, double t);

/// Draws (Q, Y) at T = 0 from |Psi|^2 with Q widened by w.
Vec2 sample_measurement_initial(const MeasurementModel& model, double w, Rng& rng);

Vec2 evolve_measurement(const MeasurementModel& model, Vec2 qy, double t0, double t1,
                        const ode::Settings& settings = {});

struct MeasurementEnsemble {
  std::vector<double> q_initial, y_initial;
  std::vector<double> q, y;  // NaN where integration failed
  double t = 0.0;
  int failed = 0;

  std::vector<double> valid_y() const;
};

MeasurementEnsemble measurement_ensemble(const MeasurementModel& model, double w, int n, double t_end,
                                         std::uint64_t seed, const ode::Settings& settings = {},
                                         unsigned workers = 0);

/// theta_k = 2 pi k / 10, k = 1..10.
std::vector<double> default_thetas();

struct DetectionResult {
  double probability = 0.0;         // mean over thetas
  std::vector<double> per_theta;    // fraction beyond the threshold
  int failed = 0;
};

/// Fraction of a superposition ensemble whose pointer lies beyond `threshold`
/// at t_end, averaged over the relative phases. Failed trajectories are
/// excluded from their fraction.
DetectionResult detection_probability(double w, const std::vector<double>& thetas, int n, std::uint64_t seed,
                                      double t_end = 4.5, double threshold = 9.0,
                                      const ode::Settings& settings = {}, unsigned workers = 0);

// ---- stationary vacuum pointer (frame Y' = Y - T) ---------------------------

/// (dQ/dT, dY'/dT) = (-Q Y'/3, 2 Q^2/3 - 1/3).
Vec2 stationary_vacuum_velocity(double q, double y_prime);
/// Y'^2/2 + Q^2 - ln|Q|, constant along trajectories. OnSeparatrix at Q = 0.
double stationary_vacuum_invariant(double q, double y_prime);

struct StationaryPointer {
  std::vector<double> q, y_prime;      // at t_end
  std::vector<double> y_prime_before;  // at t_compare
  stats::Histogram marginal;           // Y' at t_end
  stats::Histogram marginal_before;    // Y' at t_compare
  double convergence_l1 = 0.0;         // L1 between the two marginals
  bool crossed_zero = false;           // any trajectory changed the sign of Q
  int failed = 0;
};

struct PointerSettings {
  double t_end = 120.0;
  double t_compare = 100.0;
  double y_lo = -6.0;
  double y_hi = 6.0;
  std::size_t bins = 60;
  ode::Settings integrator;
  unsigned workers = 0;
};

/// Vacuum ensemble with Q widened by w, evolved in the normal-ordered frame.
StationaryPointer stationary_vacuum_pointer(double w, int n, std::uint64_t seed,
                                            const PointerSettings& settings = {});

/// True when the Gaussian KDE of the samples at 0 lies below its maximum on
/// both [-span, 0) and (0, span].
bool central_depression(const std::vector<double>& samples, double bandwidth = 0.3, double span = 2.0);

}  // namespace pilotwave
