#include "pilotwave/spectral_line.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "pilotwave/errors.hpp"
#include "pilotwave/field_models.hpp"
#include "pilotwave/parallel.hpp"
#include "pilotwave/rng.hpp"

namespace pilotwave {

Vec2 reduced_velocity(double q, double dev_e) {
  if (q == 0.0 || !std::isfinite(1.0 / (q * q))) throw AtNode("reduced guidance singular at Q=0");
  return {dev_e * (1.0 / q - q) / 6.0, 1.0 / (6.0 * q * q) + q * q / 3.0 - 5.0 / 6.0};
}

double orbit_constant(double q, double dev_e) {
  const double sep = std::abs(q * q - 1.0);
  if (q == 0.0 || sep == 0.0) throw OnSeparatrix("orbit constant undefined at Q=" + std::to_string(q));
  return 0.5 * dev_e * dev_e + q * q - std::log(std::abs(q)) - std::log(sep);
}

std::array<double, 4> reduced_fixed_points() {
  const double r = std::sqrt(17.0);
  const double lo = std::sqrt(5.0 - r) / 2.0, hi = std::sqrt(5.0 + r) / 2.0;
  return {-hi, -lo, lo, hi};
}

double reduced_equilibrium(double q, double dev_e) {
  return std::exp(-0.5 * dev_e * dev_e) / std::sqrt(2.0 * std::numbers::pi) * one_particle_density(q);
}

Vec2 evolve_reduced(Vec2 state, double t0, double t1, const ode::Settings& settings) {
  ode::Stats st;
  return ode::advance<2>([](double, const Vec2& v) { return reduced_velocity(v[0], v[1]); }, state, t0, t1,
                         settings, st);
}

SpectralEnsemble spectral_ensemble(double w, int n, std::uint64_t seed) {
  if (!(w > 0) || !std::isfinite(w)) throw InvalidArgument("width parameter w must be positive");
  if (n < 0) throw InvalidArgument("ensemble size must be >= 0");
  SpectralEnsemble e;
  e.w = w;
  for (int k = 0; k < n; ++k) {
    Rng rng(sub_seed(seed, static_cast<std::uint64_t>(k)));
    e.q.push_back(w * sample_one_particle(rng));
    e.dev_e.push_back(rng.normal());
  }
  return e;
}

void advance_ensemble(SpectralEnsemble& e, double t_end, const ode::Settings& settings, unsigned workers) {
  const double t0 = e.t;
  const auto out = parallel_map(
      e.q.size(),
      [&](std::size_t k) -> Vec2 {
        if (!std::isfinite(e.q[k])) return {e.q[k], e.dev_e[k]};
        try {
          return evolve_reduced({e.q[k], e.dev_e[k]}, t0, t_end, settings);
        } catch (const AtNode&) {
        } catch (const StepUnderflow&) {
        }
        return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
      },
      workers);
  e.failed = 0;
  for (std::size_t k = 0; k < out.size(); ++k) {
    e.q[k] = out[k][0];
    e.dev_e[k] = out[k][1];
    if (!std::isfinite(e.q[k])) ++e.failed;
  }
  e.t = t_end;
}

std::vector<LineProfile> line_profiles(double w, const std::vector<double>& t_obs, int n, std::uint64_t seed,
                                       const LineSettings& settings) {
  for (std::size_t k = 0; k < t_obs.size(); ++k) {
    if (!(t_obs[k] >= 1.0 && t_obs[k] <= 1000.0)) throw InvalidArgument("observation time must lie in [1, 1000]");
    if (k && !(t_obs[k] > t_obs[k - 1])) throw InvalidArgument("observation times must be ascending");
  }
  auto e = spectral_ensemble(w, n, seed);
  std::vector<LineProfile> out;
  for (double t : t_obs) {
    advance_ensemble(e, t, settings.integrator, settings.workers);
    LineProfile p;
    p.t_obs = t;
    p.failed = e.failed;
    for (double d : e.dev_e)
      if (std::isfinite(d)) p.dev_e.push_back(d);
    p.histogram = stats::histogram(p.dev_e, settings.hist_lo, settings.hist_hi, settings.bins);
    if (p.dev_e.size() >= 2) {
      p.mean = stats::mean(p.dev_e);
      p.std = stats::stddev(p.dev_e);
      p.peaks = stats::count_peaks(p.dev_e, settings.peak_bandwidth);
    }
    out.push_back(std::move(p));
  }
  return out;
}

LineProfile line_profile(double w, double t_obs, int n, std::uint64_t seed, const LineSettings& settings) {
  return line_profiles(w, {t_obs}, n, seed, settings).front();
}

double dispersion(double e, double e_gamma, double t) {
  if (!(t > 0)) throw InvalidArgument("dispersion needs T > 0");
  if (!(e_gamma > 0)) throw InvalidArgument("dispersion needs E_gamma > 0");
  const double sd = e_gamma / t;
  const double z = (e - e_gamma) / sd;
  return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
}

double recorded_energy(double dev_e, double e_gamma, double t) {
  if (!(t > 0)) throw InvalidArgument("recorded_energy needs T > 0");
  return e_gamma * (1.0 + dev_e / t);
}

double TabulatedSpectrum::norm() const {
  double s = 0.0;
  for (std::size_t k = 1; k < energy.size(); ++k)
    s += 0.5 * (density[k] + density[k - 1]) * (energy[k] - energy[k - 1]);
  return s;
}

void TabulatedSpectrum::validate() const {
  if (energy.size() != density.size() || energy.size() < 2)
    throw InvalidArgument("tabulated spectrum needs matching energy/density arrays of length >= 2");
  for (std::size_t k = 0; k < energy.size(); ++k) {
    if (!(density[k] >= 0) || !std::isfinite(density[k])) throw InvalidArgument("spectrum density must be >= 0");
    if (k && !(energy[k] > energy[k - 1])) throw InvalidArgument("spectrum energies must be ascending");
  }
}

TabulatedSpectrum observed_spectrum(const TabulatedSpectrum& in, double t) {
  in.validate();
  if (!(t > 0)) throw InvalidArgument("observed_spectrum needs T > 0");
  if (!(in.energy.front() > 0)) throw InvalidArgument("spectrum energies must be positive");
  TabulatedSpectrum out;
  out.energy = in.energy;
  out.density.assign(in.energy.size(), 0.0);
  const auto& eg = in.energy;
  for (std::size_t i = 0; i < eg.size(); ++i) {
    double s = 0.0;
    for (std::size_t k = 1; k < eg.size(); ++k) {
      const double a = in.density[k - 1] * dispersion(eg[i], eg[k - 1], t);
      const double b = in.density[k] * dispersion(eg[i], eg[k], t);
      s += 0.5 * (a + b) * (eg[k] - eg[k - 1]);
    }
    out.density[i] = s;
  }
  return out;
}

}  // namespace pilotwave
