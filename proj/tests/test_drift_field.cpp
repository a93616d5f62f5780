#include <cmath>
#include <numbers>

#include "doctest.h"
#include "pilotwave/drift_field.hpp"
#include "pilotwave/errors.hpp"
#include "pilotwave/vorticity.hpp"

using namespace pilotwave;
using std::numbers::pi;

namespace {

PolarGrid small_grid() {
  PolarGrid g;
  g.n_eta = 12;
  g.n_phi = 40;
  return g;
}

}  // namespace

TEST_CASE("eigenstate has no drift") {
  const auto s = OscillatorState::from_levels({{2, 1, 1.0}});
  const auto f = build_drift_field(s, small_grid());
  for (int i = 0; i < f.grid.n_eta; ++i)
    for (int j = 0; j < f.grid.n_phi; ++j) {
      const auto k = f.grid.index(i, j);
      const double eta = f.grid.eta(i);
      CHECK(std::abs(f.d_eta[k]) < 1e-9);
      CHECK(f.d_phi[k] == doctest::Approx(2 * pi / (eta * eta)).epsilon(1e-7));
    }
  const auto rb = radial_balance(f);
  CHECK(rb.inward == 0.0);
  CHECK(rb.outward == 0.0);

  const auto vac = build_drift_field(OscillatorState::from_levels({{0, 0, 1.0}}), small_grid());
  for (double d : vac.d_phi) CHECK(d == 0.0);
  CHECK(classify(vac).type == DriftType::Type0);
}

TEST_CASE("m=1 fields rotate with the vorticity") {
  const auto g = small_grid();
  for (int k = 0; k < 4; ++k) {
    auto s = random_state(1, 400 + k);
    const int w = total_vorticity(s).winding;
    const auto f = build_drift_field(s, g);
    CHECK(f.masked_fraction() == 0.0);
    const auto c = classify(f);
    CHECK(c.type == DriftType::Type0);
    CHECK(c.uniform_sign == w);
    const auto rb = radial_balance(f);
    CHECK(std::abs(rb.inward - 0.5) < 0.1);
  }
  const auto pos = build_drift_field(OscillatorState::from_levels({{0, 0, 0.6}, {1, 0, 0.64}, {0, 1, 0.48}}), g);
  for (double d : pos.d_phi) CHECK(d > 0);
}

TEST_CASE("drift field symmetries") {
  const auto g = small_grid();
  const auto s = generate_classified_states(2, VorticityCategory::Zero, 1, 5).states.front();
  const auto f = build_drift_field(s, g);
  const auto c = classify(f);
  CHECK(c.type == DriftType::Type1);
  REQUIRE(c.axes.size() == 4u);
  int attractive = 0;
  for (const auto& a : c.axes) attractive += a.attractive;
  CHECK(attractive == 2);
  // Axes are lines through the centre.
  CHECK(std::abs(std::remainder(c.axes[2].phi - c.axes[0].phi - pi, 2 * pi)) < 0.3);

  const auto fp = build_drift_field(s.with_global_phase(2.1), g);
  for (std::size_t k = 0; k < f.d_phi.size(); ++k) {
    CHECK(std::abs(fp.d_phi[k] - f.d_phi[k]) < 1e-9);
    CHECK(std::abs(fp.d_eta[k] - f.d_eta[k]) < 1e-9);
  }

  // Swapping the two angular quanta reflects psi through phi -> -phi.
  const auto fm = build_drift_field(s.mirrored(), g);
  for (int i = 0; i < g.n_eta; ++i)
    for (int j = 0; j < g.n_phi; ++j) {
      const auto k = g.index(i, j), km = g.index(i, (g.n_phi - j) % g.n_phi);
      CHECK(std::abs(fm.d_phi[km] + f.d_phi[k]) < 1e-6);
      CHECK(std::abs(fm.d_eta[km] - f.d_eta[k]) < 1e-6);
    }
  CHECK(classify(fm).type == DriftType::Type1);
}

TEST_CASE("classifier counts sign changes of the ring average") {
  DriftField f;
  f.grid.n_eta = 2;
  f.grid.n_phi = 80;
  f.d_eta.assign(f.grid.size(), 0.0);
  f.masked.assign(f.grid.size(), 0);
  auto fill = [&](auto fn) {
    f.d_phi.resize(f.grid.size());
    for (int i = 0; i < f.grid.n_eta; ++i)
      for (int j = 0; j < f.grid.n_phi; ++j) f.d_phi[f.grid.index(i, j)] = fn(f.grid.phi(j));
  };
  fill([](double p) { return 0.2 + 0.1 * std::sin(p); });
  CHECK(classify(f).type == DriftType::Type0);
  CHECK(classify(f).uniform_sign == 1);
  fill([](double p) { return std::sin(2 * p - 0.3); });
  auto c = classify(f);
  CHECK(c.type == DriftType::Type1);
  REQUIRE(c.axes.size() == 4u);
  // sin(2p - 0.3) rises through zero at p = 0.15 and falls at 0.15 + pi/2.
  CHECK(c.axes[0].phi == doctest::Approx(0.15).epsilon(1e-3));
  CHECK(!c.axes[0].attractive);
  CHECK(c.axes[1].phi == doctest::Approx(0.15 + pi / 2).epsilon(1e-3));
  CHECK(c.axes[1].attractive);
  fill([](double p) { return std::sin(4 * p); });
  CHECK(classify(f).type == DriftType::Type2);
  fill([](double p) { return std::sin(3 * p); });
  CHECK(classify(f).type == DriftType::Unclassified);
  fill([](double p) { return 1e-8 * std::sin(2 * p) + (p > 3 ? -0.1 : 0.1); });
  CHECK(classify(f).sign_changes == 2);
}

TEST_CASE("long drift") {
  const auto s = random_state(2, 17);
  const auto id = long_drift(s, 20, 10, 20, 0, 3);
  CHECK(id.median_shift() == 0.0);
  CHECK(id.failed == 0);
  const auto r = long_drift(s, 8, 10, 20, 2, 3);
  for (std::size_t k = 0; k < r.eta_initial.size(); ++k) CHECK(r.eta_initial[k] == id.eta_initial[k]);
  CHECK(r.failed == 0);
  for (std::size_t k = 0; k < r.eta_final.size(); ++k)
    CHECK(std::abs(r.eta_final[k] - r.eta_initial[k]) < 1.0);
  CHECK_THROWS_AS(long_drift(s, 5, 20, 10, 1, 3), InvalidArgument);
}

TEST_CASE("masked cells beyond the limit fail the build") {
  PolarGrid g;
  g.n_eta = 1;
  g.n_phi = 8;
  CHECK_THROWS_AS(build_drift_field(random_state(1, 2), {0.0, 1.0, 1, 8}), InvalidArgument);
  DriftSettings ds;
  ds.integrator.max_halvings = 0;
  ds.integrator.rtol = 1e-300;
  ds.integrator.atol = 1e-300;
  CHECK_THROWS_AS(build_drift_field(random_state(2, 2), g, ds), BuildFailed);
}
