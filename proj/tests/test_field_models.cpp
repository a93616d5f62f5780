#include <cmath>
#include <complex>
#include <numbers>

#include "doctest.h"
#include "pilotwave/errors.hpp"
#include "pilotwave/field_models.hpp"

using namespace pilotwave;
using std::numbers::pi;
using cplx = std::complex<double>;

namespace {

// Measurement wave function as a Hermite series, straight from its
// definition; the guidance law is then applied by finite differences.
cplx series_psi(const std::vector<cplx>& c, double q, double y, double t) {
  cplx sum = 0.0;
  double h_prev = 0.0, h = 1.0;  // H_{n-1}, H_n
  double fact = 1.0;
  for (std::size_t n = 0; n < c.size(); ++n) {
    if (n > 0) {
      const double next = 2 * q * h - 2 * static_cast<double>(n - 1) * h_prev;
      h_prev = h;
      h = next;
      fact *= static_cast<double>(n);
    }
    const double norm = 1.0 / std::sqrt(pi * std::pow(2.0, n + 0.5) * fact);
    const double shift = y - (2.0 * n + 1) * t;
    sum += c[n] * norm * std::exp(-0.25 * shift * shift - 0.5 * q * q) * h;
  }
  return sum;
}

Vec2 series_velocity(const std::vector<cplx>& c, double q, double y, double t) {
  const double e = 1e-4;
  auto f = [&](double dq, double dy) { return series_psi(c, q + dq, y + dy, t); };
  const cplx p = f(0, 0);
  const cplx pq = (f(e, 0) - f(-e, 0)) / (2 * e);
  const cplx py = (f(0, e) - f(0, -e)) / (2 * e);
  const cplx pqq = (f(e, 0) - 2.0 * p + f(-e, 0)) / (e * e);
  const cplx pqy = (f(e, e) - f(e, -e) - f(-e, e) + f(-e, -e)) / (4 * e * e);
  const double n2 = std::norm(p);
  const double vq = (-4.0 / 3.0 * pqy / p).real() + (2.0 / 3.0 * py * std::conj(pq)).real() / n2;
  const double vy = (-2.0 / 3.0 * pqq / p).real() + std::norm(pq) / (3.0 * n2) + q * q;
  return {vq, vy};
}

// The superposition velocities as printed, with D = a e^{T(2T-Y)} + Q.
Vec2 printed_superposition(double theta, double q, double y, double t) {
  const cplx d = std::polar(1.0 / std::numbers::sqrt2, theta) * std::exp(t * (2 * t - y)) + q;
  const double vq = ((-5.0 / 3 * t + 2.0 / 3 * q * q * t + y / 3.0) / d).real() + 2.0 / 3 * q * t / std::norm(d) -
                    (y - t) * q / 3.0;
  const double vy = (2.0 / 3 * q / d).real() + 1.0 / 3 / std::norm(d) + 2.0 / 3 * (q * q + 1);
  return {vq, vy};
}

}  // namespace

TEST_CASE("one-particle sampling") {
  CHECK(one_particle_cdf(0.0) == doctest::Approx(0.5));
  CHECK(one_particle_cdf(-8.0) == doctest::Approx(0.0));
  // CDF derivative is the density.
  for (double q : {-1.3, 0.2, 0.9, 2.1})
    CHECK((one_particle_cdf(q + 1e-6) - one_particle_cdf(q - 1e-6)) / 2e-6 ==
          doctest::Approx(one_particle_density(q)).epsilon(1e-6));
  Rng rng(4);
  std::vector<double> x;
  for (int k = 0; k < 20000; ++k) x.push_back(sample_one_particle(rng));
  CHECK(stats::ks_statistic(x, one_particle_cdf) < 0.015);
  // <Q^2> = 3/2 for the first excited state.
  double m2 = 0.0;
  for (double v : x) m2 += v * v;
  CHECK(m2 / x.size() == doctest::Approx(1.5).epsilon(0.03));
}

TEST_CASE("decay velocity field and trajectories") {
  const DecayConfig c;
  const auto v0 = decay_velocity(c, 0.7, -0.4, 0.0);
  CHECK(v0[0] == 0.0);
  CHECK(v0[1] == 0.0);
  CHECK_THROWS_AS(decay_velocity(c, 0.0, 0.0, 1.0), AtNode);
  const DecayConfig bad{-1.0, 1.0};
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);

  // Phase gradient of cos(gt/2w) q1 - i sin(gt/2w) q2 in the guidance law.
  const double q1 = 0.8, q2 = -0.3, t = 1.1;
  const double h = 1e-6;
  auto phase = [&](double a, double b) {
    return std::arg(cplx(std::cos(t / 2) * a, -std::sin(t / 2) * b));
  };
  const double s1 = (phase(q1 + h, q2) - phase(q1 - h, q2)) / (2 * h);
  const double s2 = (phase(q1, q2 + h) - phase(q1, q2 - h)) / (2 * h);
  const auto v = decay_velocity(c, q1, q2, t);
  CHECK(v[0] == doctest::Approx(s1 + 0.5 * s2).epsilon(1e-7));
  CHECK(v[1] == doctest::Approx(s2 + 0.5 * s1).epsilon(1e-7));

  ode::Settings s;
  s.rtol = 1e-11;
  s.atol = 1e-13;
  for (const Vec2 q : {Vec2{0.9, 0.4}, Vec2{-0.5, 1.2}, Vec2{1.6, -0.1}}) {
    const auto fwd = evolve_decay(c, q, 0.0, 1.7, s);
    const auto bwd = evolve_decay(c, q, 0.0, -1.7, s);
    CHECK(std::abs(fwd[0] - bwd[0]) < 1e-6);
    CHECK(std::abs(fwd[1] - bwd[1]) < 1e-6);
    const auto period = evolve_decay(c, q, 0.0, c.period(), s);
    CHECK(std::abs(period[0] - q[0]) < 1e-6);
    CHECK(std::abs(period[1] - q[1]) < 1e-6);
  }
  const DecayConfig c2{2.0, 0.5};
  const auto p2 = evolve_decay(c2, {0.6, 0.2}, 0.0, c2.period(), s);
  CHECK(std::abs(p2[0] - 0.6) < 1e-6);
}

TEST_CASE("decay ensembles") {
  const auto eq = decay_ensemble(1.0, 4000, pi, 21);
  CHECK(eq.failed == 0);
  CHECK(stats::ks_statistic(eq.valid_q2(), one_particle_cdf) < 0.03);
  CHECK(stats::ks_statistic(eq.valid_q1(), [](double x) { return stats::normal_cdf(x, 0, std::sqrt(0.5)); }) < 0.03);
  const auto back = decay_ensemble(1.0, 200, 2 * pi, 21);
  for (std::size_t k = 0; k < back.q1.size(); ++k) {
    CHECK(std::abs(back.q1[k] - back.q1_initial[k]) < 1e-4);
    CHECK(std::abs(back.q2[k] - back.q2_initial[k]) < 1e-4);
  }
  const auto narrow = decay_ensemble(1.0 / 3, 4000, pi, 21);
  CHECK(stats::ks_statistic(narrow.valid_q2(), one_particle_cdf) > 0.1);
  // Same seed gives the same draws whatever the worker count.
  const auto a = decay_ensemble(1.0, 50, 1.0, 8, {}, {}, 1);
  const auto b = decay_ensemble(1.0, 50, 1.0, 8, {}, {}, 3);
  CHECK(a.q1 == b.q1);
  CHECK_THROWS_AS(decay_ensemble(0.0, 10, 1.0, 1), InvalidArgument);
}

TEST_CASE("measurement velocities") {
  const MeasurementModel vac{MeasurementCase::Vacuum, 0.0};
  const MeasurementModel one{MeasurementCase::OneParticle, 0.0};
  CHECK(measurement_velocity(vac, 0.0, 1.3, 0.4)[1] == doctest::Approx(2.0 / 3.0));
  CHECK(measurement_velocity(one, 1.0, 0.5, 0.2)[1] == doctest::Approx(7.0 / 3.0));
  CHECK(measurement_velocity(one, 1.0, 0.5, 0.2)[0] == 0.0);
  CHECK_THROWS_AS(measurement_velocity(one, 0.0, 0.5, 0.2), AtNode);

  Rng rng(17);
  for (int k = 0; k < 40; ++k) {
    const double q = rng.uniform(-2.5, 2.5), t = rng.uniform(0.0, 2.0);
    const double y = t + rng.uniform(-2.5, 2.5);
    const double theta = rng.uniform(0.0, 2 * pi);
    const auto sv = series_velocity({1.0}, q, y, t);
    const auto v = measurement_velocity(vac, q, y, t);
    CHECK(v[0] == doctest::Approx(sv[0]).epsilon(1e-5).scale(1));
    CHECK(v[1] == doctest::Approx(sv[1]).epsilon(1e-5).scale(1));
    if (std::abs(q) > 0.05) {
      const double y1 = 3 * t + rng.uniform(-2.5, 2.5);
      const auto s1 = series_velocity({0.0, 1.0}, q, y1, t);
      const auto v1 = measurement_velocity(one, q, y1, t);
      CHECK(v1[0] == doctest::Approx(s1[0]).epsilon(1e-5).scale(1));
      CHECK(v1[1] == doctest::Approx(s1[1]).epsilon(1e-5).scale(1));
    }
    const MeasurementModel sup{MeasurementCase::Superposition, theta};
    const std::vector<cplx> c{std::polar(1 / std::numbers::sqrt2, theta), 1 / std::numbers::sqrt2};
    const auto ss = series_velocity(c, q, y, t);
    const auto vs = measurement_velocity(sup, q, y, t);
    const auto ps = printed_superposition(theta, q, y, t);
    CHECK(vs[0] == doctest::Approx(ss[0]).epsilon(1e-4).scale(1));
    CHECK(vs[1] == doctest::Approx(ss[1]).epsilon(1e-4).scale(1));
    CHECK(vs[0] == doctest::Approx(ps[0]).epsilon(1e-10));
    CHECK(vs[1] == doctest::Approx(ps[1]).epsilon(1e-10));
  }

  // Far below the excited packet the superposition follows the vacuum law,
  // far above it the one-particle law.
  const MeasurementModel sup{MeasurementCase::Superposition, 0.7};
  const auto lo = measurement_velocity(sup, 0.6, -40.0, 2.0);
  const auto vlo = measurement_velocity(vac, 0.6, -40.0, 2.0);
  CHECK(lo[0] == doctest::Approx(vlo[0]).epsilon(1e-9));
  CHECK(lo[1] == doctest::Approx(vlo[1]).epsilon(1e-9));
  const auto hi = measurement_velocity(sup, 0.6, 60.0, 2.0);
  const auto vhi = measurement_velocity(one, 0.6, 60.0, 2.0);
  CHECK(hi[0] == doctest::Approx(vhi[0]).epsilon(1e-9));
  CHECK(hi[1] == doctest::Approx(vhi[1]).epsilon(1e-9));
  // theta = pi has a real node at Q = e^{-s}/sqrt2.
  const double s = 0.5 * (0.3 - 1.0);
  CHECK_THROWS_AS(measurement_velocity({MeasurementCase::Superposition, pi}, std::exp(-s) / std::numbers::sqrt2,
                                       0.3, 0.5),
                  AtNode);
}

TEST_CASE("measurement sampling and equilibrium transport") {
  Rng rng(2);
  std::vector<double> q;
  for (int k = 0; k < 20000; ++k) q.push_back(sample_measurement_initial({MeasurementCase::Superposition, 0.0}, 1.0, rng)[0]);
  // CDF of (1/2 + Q^2 + sqrt2 Q) e^{-Q^2} / sqrt(pi).
  auto cdf = [](double x) {
    return 0.5 * (0.5 * (1 + std::erf(x))) + 0.5 * one_particle_cdf(x) - std::exp(-x * x) / std::sqrt(2 * pi);
  };
  CHECK(cdf(10.0) == doctest::Approx(1.0));
  CHECK(stats::ks_statistic(q, cdf) < 0.015);

  // Equilibrium pointer marginal stays Born: N(T, 1) for the vacuum,
  // N(3T, 1) for one particle.
  const auto vac = measurement_ensemble({MeasurementCase::Vacuum, 0.0}, 1.0, 3000, 2.0, 6);
  CHECK(stats::ks_statistic(vac.valid_y(), [](double y) { return stats::normal_cdf(y, 2.0); }) < 0.03);
  const auto one = measurement_ensemble({MeasurementCase::OneParticle, 0.0}, 1.0, 3000, 2.0, 6);
  CHECK(one.failed == 0);
  CHECK(stats::ks_statistic(one.valid_y(), [](double y) { return stats::normal_cdf(y, 6.0); }) < 0.03);
}

TEST_CASE("detection probability") {
  const auto r = detection_probability(1.0, {0.0, pi / 2}, 2000, 4);
  REQUIRE(r.per_theta.size() == 2u);
  CHECK(r.probability == doctest::Approx(0.5).epsilon(0.1));
  CHECK(default_thetas().size() == 10u);
  CHECK(default_thetas().back() == doctest::Approx(2 * pi));
  const auto wide = detection_probability(4.0, {0.0, pi / 2}, 2000, 4);
  CHECK(wide.probability > r.probability);
  CHECK_THROWS_AS(detection_probability(1.0, {}, 10, 1), InvalidArgument);
}

TEST_CASE("stationary vacuum pointer") {
  const auto v = stationary_vacuum_velocity(1 / std::numbers::sqrt2, 0.0);
  CHECK(std::abs(v[0]) < 1e-15);
  CHECK(std::abs(v[1]) < 1e-15);
  CHECK_THROWS_AS(stationary_vacuum_invariant(0.0, 1.0), OnSeparatrix);

  // Invariant conserved and orbits closed.
  ode::Settings s;
  s.rtol = 1e-11;
  s.atol = 1e-13;
  ode::Stats st;
  const Vec2 x0{0.3, 0.8};
  const double c0 = stationary_vacuum_invariant(x0[0], x0[1]);
  bool left = false;
  double closest = 1e9;
  ode::integrate<2>([](double, const Vec2& u) { return stationary_vacuum_velocity(u[0], u[1]); }, x0, 0.0, 40.0, s, st,
                    [&](double, const Vec2& u) {
                      CHECK(std::abs(stationary_vacuum_invariant(u[0], u[1]) - c0) < 1e-8);
                      const double d = std::hypot(u[0] - x0[0], u[1] - x0[1]);
                      if (d > 0.5) left = true;
                      if (left) closest = std::min(closest, d);
                    });
  CHECK(closest < 1e-2);

  PointerSettings ps;
  ps.t_end = 20.0;
  ps.t_compare = 10.0;
  const auto eq = stationary_vacuum_pointer(1.0, 4000, 3, ps);
  CHECK_FALSE(eq.crossed_zero);
  CHECK(eq.failed == 0);
  CHECK(stats::ks_statistic(eq.y_prime, [](double y) { return stats::normal_cdf(y); }) < 0.03);
}

TEST_CASE("superposition flux through nodes") {
  Rng rng(5);
  for (int k = 0; k < 30; ++k) {
    const double q = rng.uniform(-2, 2), t = rng.uniform(0, 4), y = rng.uniform(-2, 14), th = rng.uniform(0, 2 * pi);
    const auto j = superposition_flux(th, q, y, t);
    const auto v = measurement_velocity({MeasurementCase::Superposition, th}, q, y, t);
    CHECK(j[2] > 0);
    CHECK(j[0] / j[2] == doctest::Approx(v[0]).epsilon(1e-8).scale(1));
    CHECK(j[1] / j[2] == doctest::Approx(v[1]).epsilon(1e-8).scale(1));
  }
  // On the node of the real wave function the flux is finite and t stalls.
  const double t = 0.5, y = 0.3, s = t * (y - 2 * t);
  const auto j = superposition_flux(pi, std::exp(-s) / std::numbers::sqrt2, y, t);
  CHECK(std::abs(j[2]) < 1e-14);
  CHECK(std::isfinite(j[0]));
  CHECK(std::isfinite(j[1]));

  // A real-phase ensemble integrates without failures; the tau-integration
  // agrees with plain time stepping away from nodes.
  const auto e = measurement_ensemble({MeasurementCase::Superposition, pi}, 1.0, 300, 4.5, 77);
  CHECK(e.failed == 0);
  ode::Settings tight;
  tight.rtol = 1e-10;
  tight.atol = 1e-12;
  const MeasurementModel m{MeasurementCase::Superposition, 1.0};
  ode::Stats st;
  const auto plain = ode::advance<2>([&](double tt, const Vec2& u) { return measurement_velocity(m, u[0], u[1], tt); },
                                     Vec2{0.4, 0.2}, 0.0, 3.0, tight, st);
  const auto viaflux = evolve_measurement(m, {0.4, 0.2}, 0.0, 3.0, tight);
  CHECK(viaflux[0] == doctest::Approx(plain[0]).epsilon(1e-6));
  CHECK(viaflux[1] == doctest::Approx(plain[1]).epsilon(1e-6));
}

TEST_CASE("central depression detector") {
  Rng rng(9);
  std::vector<double> one, two;
  for (int k = 0; k < 5000; ++k) one.push_back(rng.normal());
  for (int k = 0; k < 5000; ++k) two.push_back(rng.normal() * 0.4 + (k % 2 ? 1.0 : -1.0));
  CHECK_FALSE(central_depression(one));
  CHECK(central_depression(two));
}
