#include <cmath>
#include <numbers>

#include "doctest.h"
#include "pilotwave/errors.hpp"
#include "pilotwave/oscillator.hpp"

using namespace pilotwave;
using std::numbers::pi;

namespace {

// 1-D normalized Hermite function, computed by the standard three-term
// recurrence; independent of the library's polynomial tables.
double hermite_fn(int n, double x) {
  double h0 = std::pow(pi, -0.25) * std::exp(-0.5 * x * x);
  if (n == 0) return h0;
  double h1 = std::sqrt(2.0) * x * h0;
  for (int k = 2; k <= n; ++k) {
    const double h2 = std::sqrt(2.0 / k) * x * h1 - std::sqrt((k - 1.0) / k) * h0;
    h0 = h1;
    h1 = h2;
  }
  return h1;
}

}  // namespace

TEST_CASE("radial polynomials at known points") {
  CHECK(eval_radial_poly(1, 1, 1.0) == doctest::Approx(0.0));
  CHECK(eval_radial_poly(0, 0, 3.7) == doctest::Approx(1.0));
  CHECK(eval_radial_poly(2, 2, 2.0) == doctest::Approx(1.0));
  CHECK(eval_radial_poly(1, 0, 2.5) == doctest::Approx(2.5));
  // f_{20} = eta^2 / sqrt(2)
  CHECK(eval_radial_poly(2, 0, 3.0) == doctest::Approx(9.0 / std::sqrt(2.0)));
  for (int nd = 0; nd <= 6; ++nd)
    for (int ng = 0; ng <= 6; ++ng)
      CHECK(eval_radial_poly(nd, ng, 1.3) == doctest::Approx(eval_radial_poly(ng, nd, 1.3)));
  const double h = 1e-6;
  CHECK(eval_radial_poly_derivative(3, 1, 1.7) ==
        doctest::Approx((eval_radial_poly(3, 1, 1.7 + h) - eval_radial_poly(3, 1, 1.7 - h)) /
                        (2 * h)));
}

TEST_CASE("configuration polar accessors") {
  Configuration c{-1.0, 0.0};
  CHECK(c.phi() == doctest::Approx(-pi));
  CHECK(c.eta() == doctest::Approx(1.0));
  const auto p = Configuration::polar(2.0, 0.5);
  CHECK(p.eta() == doctest::Approx(2.0));
  CHECK(p.phi() == doctest::Approx(0.5));
  for (std::size_t i = 0; i < level_count(6); ++i) {
    const auto [a, b] = level_at(i);
    CHECK(level_index(a, b) == i);
  }
}

TEST_CASE("basis transform matches the closed-form table") {
  for (int m = 1; m <= 4; ++m) {
    for (int k = 0; k < 5; ++k) {
      const auto s = random_state(m, 100 + 10 * m + k);
      const auto a = angular_to_cartesian(s, TransformPath::Generated);
      const auto b = angular_to_cartesian(s, TransformPath::Tabulated);
      for (std::size_t i = 0; i < a.coeffs().size(); ++i)
        CHECK(std::abs(a.coeffs()[i] - b.coeffs()[i]) < 1e-12);
      CHECK(a.norm_squared() == doctest::Approx(1.0).epsilon(1e-12));
      const auto back = cartesian_to_angular(a);
      for (std::size_t i = 0; i < s.coeffs().size(); ++i)
        CHECK(std::abs(back.coeffs()[i] - s.coeffs()[i]) < 1e-12);
    }
  }
  const auto s10 = OscillatorState::from_levels({{1, 0, 1.0}});
  const auto d = angular_to_cartesian(s10);
  CHECK(std::abs(d.coeff(1, 0) - cplx(std::sqrt(0.5), 0)) < 1e-14);
  CHECK(std::abs(d.coeff(0, 1) - cplx(0, std::sqrt(0.5))) < 1e-14);
  CHECK_THROWS_AS(angular_to_cartesian(random_state(5, 1), TransformPath::Tabulated),
                  CutoffExceeded);
}

TEST_CASE("shell transforms are unitary") {
  for (int e = 0; e <= 8; ++e) {
    const auto t = shell_transform(e);
    const int n = e + 1;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        cplx s = 0.0;
        for (int k = 0; k < n; ++k) s += t[i * n + k] * std::conj(t[j * n + k]);
        CHECK(std::abs(s - (i == j ? 1.0 : 0.0)) < 1e-12);
      }
  }
}

TEST_CASE("transform agrees with projection onto Hermite functions") {
  const auto s = random_state(2, 77);
  const auto d = angular_to_cartesian(s);
  const int n = 320;
  const double l = 8.0, h = 2 * l / n;
  for (int nx = 0; nx <= 2; ++nx)
    for (int ny = 0; nx + ny <= 2; ++ny) {
      cplx acc = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const double x = -l + (i + 0.5) * h, y = -l + (j + 0.5) * h;
          acc += eval_psi(s, {x, y}, 0.0) * hermite_fn(nx, x) * hermite_fn(ny, y);
        }
      CHECK(std::abs(acc * h * h - d.coeff(nx, ny)) < 1e-9);
    }
}

TEST_CASE("wave function evaluation") {
  const auto vac = OscillatorState::from_levels({{0, 0, 1.0}});
  CHECK(std::abs(eval_psi(vac, {0, 0}, 0.0) - 1.0 / std::sqrt(pi)) < 1e-15);

  for (int m = 1; m <= 6; ++m) {
    const auto s = random_state(m, 5 + m);
    const auto d = angular_to_cartesian(s);
    for (int k = 0; k < 20; ++k) {
      const Configuration q{-3.0 + 0.31 * k, 2.5 - 0.27 * k};
      const double t = 0.37 * k;
      const cplx a = eval_psi(s, q, t);
      CHECK(std::abs(a - eval_psi_angular(s, q, t)) < 1e-10);
      CHECK(std::abs(a - eval_psi_hermite(d, q, t)) < 1e-10);
      CHECK(std::abs(a - eval_psi(s, q, t + 2 * pi)) < 1e-12);
    }
  }

  const auto s = random_state(3, 9);
  const int n = 400;
  const double l = default_half_width(3), h = 2 * l / n;
  double mass = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      mass += std::norm(eval_psi(s, {-l + (i + 0.5) * h, -l + (j + 0.5) * h}, 1.1));
  CHECK(mass * h * h == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("gradient matches finite differences") {
  const auto vac = OscillatorState::from_levels({{0, 0, 1.0}});
  const Configuration q0 = Configuration::polar(1.3, 0.4);
  const auto [de, dp] = eval_grad_psi(vac, q0, 0.0);
  CHECK(std::abs(de / eval_psi(vac, q0, 0.0) + 1.3) < 1e-12);
  CHECK(std::abs(dp) < 1e-15);

  const auto diag = OscillatorState::from_levels({{1, 1, 1.0}, {2, 2, cplx(0.3, 0.8)}});
  CHECK(std::abs(eval_grad_psi(diag, q0, 0.7).second) < 1e-14);

  const double h = 1e-5;
  for (int seed = 0; seed < 10; ++seed) {
    const auto s = random_state(1 + seed % 4, 300 + seed);
    const double eta = 0.5 + 0.2 * seed, phi = -2.0 + 0.45 * seed, t = 0.3 * seed;
    const Configuration q = Configuration::polar(eta, phi);
    if (std::abs(eval_psi(s, q, t)) < 1e-3) continue;
    const auto [ge, gp] = eval_grad_psi(s, q, t);
    const cplx fe = (eval_psi(s, Configuration::polar(eta + h, phi), t) -
                     eval_psi(s, Configuration::polar(eta - h, phi), t)) /
                    (2 * h);
    const cplx fp = (eval_psi(s, Configuration::polar(eta, phi + h), t) -
                     eval_psi(s, Configuration::polar(eta, phi - h), t)) /
                    (2 * h);
    CHECK(std::abs(ge - fe) < 1e-6 * std::abs(ge) + 1e-9);
    CHECK(std::abs(gp - fp) < 1e-6 * std::abs(gp) + 1e-9);
  }
}

TEST_CASE("random states") {
  const auto a = random_state(3, 42), b = random_state(3, 42);
  for (std::size_t i = 0; i < a.coeffs().size(); ++i) CHECK(a.coeffs()[i] == b.coeffs()[i]);
  CHECK(a.norm_squared() == doctest::Approx(1.0).epsilon(1e-14));
  int larger = 0;
  const int n = 10000;
  for (int k = 0; k < n; ++k) {
    const auto s = random_state(1, 1000 + k);
    larger += std::abs(s.coeff(1, 0)) > std::abs(s.coeff(0, 1));
  }
  CHECK(std::abs(larger / double(n) - 0.5) < 0.02);
  CHECK_THROWS_AS(random_state(0, 1), InvalidArgument);
}

TEST_CASE("fine-tuning predicate and helpers") {
  CHECK(is_fine_tuned(OscillatorState::from_levels({{1, 0, 1.0}, {0, 1, 1.0}})));
  CHECK(is_fine_tuned(OscillatorState::from_levels({{1, 0, 0.6}, {0, 1, cplx(0, 0.8)}})));
  CHECK_FALSE(is_fine_tuned(OscillatorState::from_levels({{1, 0, 0.6}, {0, 1, cplx(0.5, 0.2)}})));
  CHECK_FALSE(is_fine_tuned(random_state(4, 3)));

  const auto s = random_state(2, 8);
  const auto mir = s.mirrored();
  CHECK(mir.coeff(2, 0) == s.coeff(0, 2));
  const Configuration q{0.7, -0.4};
  CHECK(std::abs(eval_psi(mir, q, 0.2) - eval_psi(s, {q.qx, -q.qy}, 0.2)) < 1e-12);

  const auto padded = OscillatorState(3, {0.6, 0.8, 0, 0, 0, 0, 0, 0, 0, 0});
  CHECK(padded.reduced().cutoff() == 1);
  CHECK_THROWS_AS(OscillatorState(1, {1.0, 1.0, 0.0}), InvalidArgument);
}

TEST_CASE("state JSON round trip") {
  const auto s = random_state(3, 11);
  for (const char* basis : {"angular", "cartesian"}) {
    const auto back = state_from_json(state_to_json(s, basis));
    for (std::size_t i = 0; i < s.coeffs().size(); ++i)
      CHECK(std::abs(back.coeffs()[i] - s.coeffs()[i]) < 1e-12);
  }
  nlohmann::json bad = {{"basis", "angular"}, {"m", 1}, {"coeffs", {{2, 0, 1.0, 0.0}}}};
  CHECK_THROWS_AS(state_from_json(bad), InvalidArgument);
}
