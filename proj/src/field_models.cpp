#include "pilotwave/field_models.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>

#include "pilotwave/errors.hpp"
#include "pilotwave/parallel.hpp"

namespace pilotwave {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<double> finite_only(const std::vector<double>& v) {
  std::vector<double> out;
  out.reserve(v.size());
  for (double x : v)
    if (std::isfinite(x)) out.push_back(x);
  return out;
}

void check_ensemble_args(double w, int n) {
  if (!(w > 0) || !std::isfinite(w)) throw InvalidArgument("width parameter w must be positive");
  if (n < 0) throw InvalidArgument("ensemble size must be >= 0");
}

template <class Rhs>
Vec2 integrate2(Rhs&& rhs, Vec2 y, double t0, double t1, const ode::Settings& s) {
  ode::Stats st;
  return ode::advance<2>(std::forward<Rhs>(rhs), y, t0, t1, s, st);
}

}  // namespace

double one_particle_density(double q) {
  return 2.0 * q * q * std::exp(-q * q) / std::sqrt(std::numbers::pi);
}

double one_particle_cdf(double q) {
  return 0.5 * (1.0 + std::erf(q)) - q * std::exp(-q * q) / std::sqrt(std::numbers::pi);
}

double sample_one_particle(Rng& rng) {
  double s = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double z = rng.normal();
    s += z * z;
  }
  const double q = std::sqrt(0.5 * s);
  return rng.uniform() < 0.5 ? -q : q;
}

// ---- decay -----------------------------------------------------------------

void DecayConfig::validate() const {
  if (!(omega > 0) || !(g > 0) || !std::isfinite(omega) || !std::isfinite(g))
    throw InvalidArgument("decay needs finite omega > 0 and g > 0");
}

double DecayConfig::period() const { return 2.0 * std::numbers::pi * omega / g; }

Vec2 decay_velocity(const DecayConfig& c, double q1, double q2, double t) {
  const double half = c.g * t / (2.0 * c.omega);
  const double cs = std::cos(half), sn = std::sin(half);
  const double den = q1 * q1 * cs * cs + q2 * q2 * sn * sn;
  if (!(den > 1e-300)) throw AtNode("decay density vanishes at q=(" + std::to_string(q1) + "," + std::to_string(q2) + ")");
  const double k = c.g / (2.0 * c.omega * c.omega);
  const double s = 0.5 * std::sin(c.g * t / c.omega) / den;
  return {(q2 - k * q1) * s, (-q1 + k * q2) * s};
}

Vec2 evolve_decay(const DecayConfig& c, Vec2 q, double t0, double t1, const ode::Settings& s) {
  c.validate();
  return integrate2([&](double t, const Vec2& y) { return decay_velocity(c, y[0], y[1], t); }, q, t0, t1, s);
}

std::vector<double> DecayEnsemble::valid_q1() const { return finite_only(q1); }
std::vector<double> DecayEnsemble::valid_q2() const { return finite_only(q2); }

DecayEnsemble decay_ensemble(double w, int n, double t_end, std::uint64_t seed, const DecayConfig& config,
                             const ode::Settings& settings, unsigned workers) {
  check_ensemble_args(w, n);
  config.validate();
  DecayEnsemble e;
  e.t = t_end;
  // With general omega the ground state is exp(-omega q^2) and the excited
  // factor is sqrt(omega) q; rescale the unit-frequency draws.
  const double scale = 1.0 / std::sqrt(config.omega);
  for (int k = 0; k < n; ++k) {
    Rng rng(sub_seed(seed, static_cast<std::uint64_t>(k)));
    e.q1_initial.push_back(w * scale * sample_one_particle(rng));
    e.q2_initial.push_back(scale * std::sqrt(0.5) * rng.normal());
  }
  const auto out = parallel_map(
      static_cast<std::size_t>(n),
      [&](std::size_t k) -> Vec2 {
        try {
          return evolve_decay(config, {e.q1_initial[k], e.q2_initial[k]}, 0.0, t_end, settings);
        } catch (const AtNode&) {
        } catch (const StepUnderflow&) {
        }
        return {kNaN, kNaN};
      },
      workers);
  for (const auto& v : out) {
    e.q1.push_back(v[0]);
    e.q2.push_back(v[1]);
    if (!std::isfinite(v[0])) ++e.failed;
  }
  return e;
}

// ---- energy measurement ----------------------------------------------------

Vec2 measurement_velocity(const MeasurementModel& m, double q, double y, double t) {
  switch (m.kind) {
    case MeasurementCase::Vacuum:
      return {q * (t - y) / 3.0, 2.0 / 3.0 * (1.0 + q * q)};
    case MeasurementCase::OneParticle: {
      if (q == 0.0 || !std::isfinite(1.0 / (q * q)))
        throw AtNode("one-particle measurement node at Q=0");
      return {(y - 3.0 * t) * (1.0 / q - q) / 3.0, 1.0 / (3.0 * q * q) + 4.0 / 3.0 + 2.0 / 3.0 * q * q};
    }
    case MeasurementCase::Superposition: {
      using cplx = std::complex<double>;
      // Psi = (a + Q e^s) G with s = T(Y - 2T); r = e^s / (a + Q e^s).
      const cplx a = std::polar(1.0 / std::numbers::sqrt2, m.theta);
      const double s = t * (y - 2.0 * t);
      const cplx ae = a * std::exp(-s);
      const cplx r = 1.0 / (ae + q);
      if (!std::isfinite(r.real()) || !std::isfinite(r.imag()) || std::abs(ae + q) <= 1e-12 * (std::abs(ae) + std::abs(q)))
        throw AtNode("superposition measurement node at Q=" + std::to_string(q) + " Y=" + std::to_string(y));
      const double u = y - t;
      const cplx pq = r - q;                     // Psi_Q / Psi
      const cplx py = q * t * r - u / 2.0;       // Psi_Y / Psi
      const cplx pqy = q * u / 2.0 - q * q * t * r - u * r / 2.0 + t * r;
      const cplx pqq = q * q - 1.0 - 2.0 * q * r;
      const double vq = (-4.0 / 3.0 * pqy + 2.0 / 3.0 * py * std::conj(pq)).real();
      const double vy = (-2.0 / 3.0 * pqq).real() + std::norm(pq) / 3.0 + q * q;
      return {vq, vy};
    }
  }
  throw InvalidArgument("unknown measurement case");
}

Vec2 sample_measurement_initial(const MeasurementModel& m, double w, Rng& rng) {
  double q = 0.0;
  switch (m.kind) {
    case MeasurementCase::Vacuum:
      q = std::sqrt(0.5) * rng.normal();
      break;
    case MeasurementCase::OneParticle:
      q = sample_one_particle(rng);
      break;
    case MeasurementCase::Superposition: {
      // |a + Q|^2 e^{-Q^2} = (1/2 + Q^2 + sqrt2 cos(theta) Q) e^{-Q^2}: the even
      // part is an equal mixture of the two eigenstate densities, the odd part
      // fixes the sign.
      const double mag = std::abs(rng.uniform() < 0.5 ? std::sqrt(0.5) * rng.normal() : sample_one_particle(rng));
      const double p_plus =
          0.5 * (1.0 + std::numbers::sqrt2 * std::cos(m.theta) * mag / (0.5 + mag * mag));
      q = rng.uniform() < p_plus ? mag : -mag;
      break;
    }
  }
  return {w * q, rng.normal()};
}

std::array<double, 3> superposition_flux(double theta, double q, double y, double t) {
  using cplx = std::complex<double>;
  // Psi = f G with f = a + Q e^s. Multiplying the velocity by |f|^2 leaves a
  // polynomial in f and its derivatives, finite at nodes. Factor out e^s when
  // s > 0 so nothing overflows; the normalizer M absorbs the same factor.
  const double s = t * (y - 2.0 * t);
  const double ea = s > 0 ? std::exp(-s) : 1.0, eb = s > 0 ? 1.0 : std::exp(s);
  const cplx a = std::polar(1.0 / std::numbers::sqrt2, theta);
  const cplx f = a * ea + q * eb;
  const double fq = eb, fy = q * t * eb, fqy = t * eb;
  const cplx F = std::conj(f);
  const double n2 = std::norm(f);
  const double gq = -q, gy = -0.5 * (y - t);
  const cplx pqy = F * fqy + F * fq * gy + F * fy * gq + n2 * gq * gy;
  const cplx pqq = 2.0 * F * fq * gq + n2 * (gq * gq - 1.0);
  const cplx x = fy * fq + gq * F * fy + gy * f * fq + n2 * gy * gq;
  const double pp = fq * fq + 2.0 * gq * (F * fq).real() + n2 * gq * gq;
  const double jq = (-4.0 / 3.0 * pqy + 2.0 / 3.0 * x).real();
  const double jy = (-2.0 / 3.0 * pqq).real() + pp / 3.0 + q * q * n2;
  const double m = 0.5 * ea * ea + (1.0 + q * q) * eb * eb;
  return {jq / m, jy / m, n2 / m};
}

namespace {

// Superposition trajectories cross moving nodes in finite time when the wave
// function is real (theta = 0, pi). Integrate in a regularized time tau with
// dt/dtau = |f|^2/M, then finish the last stretch in T.
Vec2 evolve_superposition(double theta, Vec2 qy, double t0, double t1, const ode::Settings& s) {
  const double dir = t1 >= t0 ? 1.0 : -1.0;
  const auto rhs_t = [&](double t, const Vec2& v) {
    return measurement_velocity({MeasurementCase::Superposition, theta}, v[0], v[1], t);
  };
  const auto rhs_tau = [&](double, const ode::State<3>& z) {
    const auto j = superposition_flux(theta, z[0], z[1], z[2]);
    return ode::State<3>{dir * j[0], dir * j[1], dir * j[2]};
  };
  ode::State<3> z{qy[0], qy[1], t0};
  double dtau = 0.25;
  for (long iter = 0; iter < 10'000'000; ++iter) {
    if (dir * (t1 - z[2]) <= 0) return {z[0], z[1]};
    ode::Stats st;
    const auto next = ode::advance<3>(rhs_tau, z, 0.0, dtau, s, st);
    if (dir * (next[2] - t1) < 0) {
      z = next;
      dtau = std::min(0.25, 2.0 * dtau);
      continue;
    }
    try {
      return integrate2(rhs_t, {z[0], z[1]}, z[2], t1, s);
    } catch (const AtNode&) {
    } catch (const StepUnderflow&) {
    }
    dtau *= 0.5;
    if (dtau < 1e-12) throw StepUnderflow("superposition trajectory stalled near t=" + std::to_string(z[2]));
  }
  throw StepUnderflow("superposition trajectory did not reach t=" + std::to_string(t1));
}

}  // namespace

Vec2 evolve_measurement(const MeasurementModel& m, Vec2 qy, double t0, double t1, const ode::Settings& s) {
  if (m.kind == MeasurementCase::Superposition) return evolve_superposition(m.theta, qy, t0, t1, s);
  return integrate2([&](double t, const Vec2& v) { return measurement_velocity(m, v[0], v[1], t); }, qy, t0, t1, s);
}

std::vector<double> MeasurementEnsemble::valid_y() const { return finite_only(y); }

MeasurementEnsemble measurement_ensemble(const MeasurementModel& model, double w, int n, double t_end,
                                         std::uint64_t seed, const ode::Settings& settings, unsigned workers) {
  check_ensemble_args(w, n);
  MeasurementEnsemble e;
  e.t = t_end;
  for (int k = 0; k < n; ++k) {
    Rng rng(sub_seed(seed, static_cast<std::uint64_t>(k)));
    const auto v = sample_measurement_initial(model, w, rng);
    e.q_initial.push_back(v[0]);
    e.y_initial.push_back(v[1]);
  }
  const auto out = parallel_map(
      static_cast<std::size_t>(n),
      [&](std::size_t k) -> Vec2 {
        try {
          return evolve_measurement(model, {e.q_initial[k], e.y_initial[k]}, 0.0, t_end, settings);
        } catch (const AtNode&) {
        } catch (const StepUnderflow&) {
        }
        return {kNaN, kNaN};
      },
      workers);
  for (const auto& v : out) {
    e.q.push_back(v[0]);
    e.y.push_back(v[1]);
    if (!std::isfinite(v[0])) ++e.failed;
  }
  return e;
}

std::vector<double> default_thetas() {
  std::vector<double> t;
  for (int k = 1; k <= 10; ++k) t.push_back(2.0 * std::numbers::pi * k / 10.0);
  return t;
}

DetectionResult detection_probability(double w, const std::vector<double>& thetas, int n, std::uint64_t seed,
                                      double t_end, double threshold, const ode::Settings& settings,
                                      unsigned workers) {
  if (thetas.empty()) throw InvalidArgument("detection_probability needs at least one phase");
  if (n <= 0) throw InvalidArgument("detection_probability needs n > 0");
  DetectionResult r;
  for (std::size_t k = 0; k < thetas.size(); ++k) {
    const MeasurementModel m{MeasurementCase::Superposition, thetas[k]};
    const auto e = measurement_ensemble(m, w, n, t_end, sub_seed(seed, 1000 + k), settings, workers);
    const auto y = e.valid_y();
    double beyond = 0.0;
    for (double v : y)
      if (v > threshold) beyond += 1.0;
    r.per_theta.push_back(y.empty() ? kNaN : beyond / static_cast<double>(y.size()));
    r.failed += e.failed;
  }
  r.probability = stats::mean(r.per_theta);
  return r;
}

// ---- stationary vacuum pointer ---------------------------------------------

Vec2 stationary_vacuum_velocity(double q, double yp) { return {-q * yp / 3.0, 2.0 / 3.0 * q * q - 1.0 / 3.0}; }

double stationary_vacuum_invariant(double q, double yp) {
  if (q == 0.0) throw OnSeparatrix("stationary vacuum invariant undefined at Q=0");
  return 0.5 * yp * yp + q * q - std::log(std::abs(q));
}

StationaryPointer stationary_vacuum_pointer(double w, int n, std::uint64_t seed, const PointerSettings& ps) {
  check_ensemble_args(w, n);
  if (!(ps.t_compare >= 0) || ps.t_compare > ps.t_end) throw InvalidArgument("need 0 <= t_compare <= t_end");
  struct Out {
    double q, y_before, y;
    bool crossed;
  };
  const auto rhs = [](double, const Vec2& v) { return stationary_vacuum_velocity(v[0], v[1]); };
  const auto out = parallel_map(
      static_cast<std::size_t>(n),
      [&](std::size_t k) -> Out {
        Rng rng(sub_seed(seed, k));
        const Vec2 start = sample_measurement_initial({MeasurementCase::Vacuum, 0.0}, w, rng);
        try {
          const Vec2 a = integrate2(rhs, start, 0.0, ps.t_compare, ps.integrator);
          const Vec2 b = integrate2(rhs, a, ps.t_compare, ps.t_end, ps.integrator);
          return {b[0], a[1], b[1], (b[0] > 0) != (start[0] > 0)};
        } catch (const StepUnderflow&) {
          return {kNaN, kNaN, kNaN, false};
        }
      },
      ps.workers);

  StationaryPointer r;
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (!std::isfinite(out[k].y)) {
      ++r.failed;
      continue;
    }
    r.q.push_back(out[k].q);
    r.y_prime.push_back(out[k].y);
    r.y_prime_before.push_back(out[k].y_before);
    r.crossed_zero = r.crossed_zero || out[k].crossed;
  }
  r.marginal = stats::histogram(r.y_prime, ps.y_lo, ps.y_hi, ps.bins);
  r.marginal_before = stats::histogram(r.y_prime_before, ps.y_lo, ps.y_hi, ps.bins);
  r.convergence_l1 = stats::l1_distance(r.marginal, r.marginal_before);
  return r;
}

bool central_depression(const std::vector<double>& samples, double bandwidth, double span) {
  if (!(span > 0)) throw InvalidArgument("central_depression needs span > 0");
  constexpr int half = 40;
  std::vector<double> grid;
  for (int k = -half; k <= half; ++k) grid.push_back(span * k / half);
  const auto f = stats::kde(samples, grid, bandwidth);
  double left = 0.0, right = 0.0;
  for (int k = 0; k < half; ++k) left = std::max(left, f[k]);
  for (int k = half + 1; k <= 2 * half; ++k) right = std::max(right, f[k]);
  return f[half] < left && f[half] < right;
}

}  // namespace pilotwave
