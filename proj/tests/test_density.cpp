#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "pilotwave/density.hpp"
#include "pilotwave/errors.hpp"

using namespace pilotwave;
using std::numbers::pi;

namespace {

double l1(const DensityGrid& a, const DensityGrid& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.rho.size(); ++k) s += std::abs(a.rho[k] - b.rho[k]);
  return s * a.grid.cell_area();
}

DensityGrid blob(const GridSpec& g, double cx, double cy, double w) {
  DensityGrid d(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double x = g.x(i) - cx, y = g.y(j) - cy;
      d.at(i, j) = std::exp(-(x * x + y * y) / (2 * w * w)) / (2 * pi * w * w);
    }
  return d;
}

}  // namespace

TEST_CASE("state face velocities match the guidance law") {
  const auto s = nine_mode_state(4);
  const auto g = GridSpec::square(5.0, 20);
  const StateVelocity f(s, g);
  std::vector<double> u, v;
  f.faces(0.7, u, v);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) {
      const auto ref = velocity_cartesian(s, {g.xmin + i * g.dx(), g.y(j)}, 0.7);
      CHECK(u[static_cast<std::size_t>(j) * (g.nx + 1) + i] ==
            doctest::Approx(ref[0]).epsilon(1e-9).scale(1.0));
    }
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const auto ref = velocity_cartesian(s, {g.x(i), g.ymin + j * g.dy()}, 0.7);
      CHECK(v[static_cast<std::size_t>(j) * g.nx + i] == doctest::Approx(ref[1]).epsilon(1e-9).scale(1.0));
    }
  // Nine modes, all with modulus 1/3.
  const auto d = angular_to_cartesian(s);
  for (int ny = 0; ny <= 2; ++ny)
    for (int nx = 0; nx <= 2; ++nx) CHECK(std::abs(d.coeff(nx, ny)) == doctest::Approx(1.0 / 3));
}

TEST_CASE("finite-volume basics") {
  const auto g = GridSpec::square(2.0, 16);
  DensityGrid uniform(g);
  std::fill(uniform.rho.begin(), uniform.rho.end(), 1.0 / 16);
  const CallbackVelocity still(g, [](double, double, double) { return Vec2{0.0, 0.0}; });
  FVSettings fs;
  fs.dt = 0.01;
  const auto out = evolve_fv(uniform, still, 0.0, 1.0, fs);
  CHECK(out.rho == uniform.rho);
  CHECK(out.t == 1.0);

  // Uniform drift out of the box: mass leaves only through the boundary.
  const auto g2 = GridSpec::square(4.0, 64);
  const CallbackVelocity drift(g2, [](double, double, double) { return Vec2{1.0, 0.5}; });
  const auto b = blob(g2, 1.0, 0.0, 0.6);
  FVStats st;
  fs.dt = 0.0;
  const auto moved = evolve_fv(b, drift, 0.0, 3.0, fs, &st);
  CHECK(st.boundary_outflux > 0.1);
  CHECK(std::abs(moved.mass() - (b.mass() - st.boundary_outflux)) < 1e-10);
  CHECK(*std::min_element(moved.rho.begin(), moved.rho.end()) >= 0.0);

  CHECK(st.capped_faces == 0);
  fs.cap_factor = 0.0;
  fs.dt = 0.5;
  CHECK_THROWS_AS(evolve_fv(b, drift, 0.0, 1.0, fs), CFLViolated);
  fs.cfl = 1.5;
  CHECK_THROWS_AS(evolve_fv(b, drift, 0.0, 1.0, fs), InvalidArgument);
  CHECK_THROWS_AS(evolve_fv(uniform, drift, 0.0, 1.0), InvalidArgument);
}

TEST_CASE("rigid rotation returns the density") {
  const auto g = GridSpec::square(6.0, 256);
  const CallbackVelocity rot(g, [](double x, double y, double) { return Vec2{-y, x}; });
  const auto b = blob(g, 2.5, 0.0, 0.7);
  FVSettings fs;
  const double vmax = 6.0 * std::sqrt(2.0);
  fs.cap_factor = 0.45;
  fs.dt = 0.45 * g.dx() / vmax;
  FVStats st;
  const auto out = evolve_fv(b, rot, 0.0, 2 * pi, fs, &st);
  CHECK(st.capped_faces == 0);
  CHECK(l1(out, b) < 0.05);
  const double peak = *std::max_element(b.rho.begin(), b.rho.end());
  CHECK(*std::max_element(out.rho.begin(), out.rho.end()) <= peak * (1 + 1e-6));
  CHECK(std::abs(out.mass() - (b.mass() - st.boundary_outflux)) < 1e-10);
}

TEST_CASE("Born density follows its own velocity field") {
  const auto s = nine_mode_state(1);
  const auto g = GridSpec::square(6.0, 128);
  const StateVelocity f(s, g);
  FVSettings fs;
  fs.dt = 0.1 * g.dx() / reference_speed(s, g);
  FVStats st;
  const auto rhos = evolve_fv({born_density(s, 0.0, g), initial_density(NonequilibriumSpec::widened(1.0), g)},
                              f, 0.0, 2 * pi, fs, &st);
  CHECK(st.max_courant <= 0.1 + 1e-12);
  CHECK(st.outflux.size() == 2u);
  const auto eq = born_density(s, 2 * pi, g);
  CHECK(l1(rhos[0], eq) < 0.05);
  CHECK(coarse_grained_H(rhos[0], eq, {32, 32}) < 1e-3);

  // Point-sampled backtracking is only comparable with FV before the
  // mixing outruns both grids, so compare after a short time at 16 x 16.
  const double t_short = 0.25;
  const auto psi0 = [&](double x, double y) { return std::norm(eval_psi(s, {x, y}, 0.0)); };
  const auto bt = evolve_backtrack(
      [&](double x, double y) { return std::exp(-x * x - y * y) / pi / psi0(x, y); }, s, t_short, g);
  CHECK(bt.masked == 0);
  const auto fv_short = evolve_fv(initial_density(NonequilibriumSpec::widened(1.0), g), f, 0.0, t_short, fs);
  CHECK(l1(coarse_grain(bt.rho, {16, 16}), coarse_grain(fv_short, {16, 16})) < 0.05);
  CHECK(coarse_grained_H(bt.rho, born_density(s, t_short, g), {16, 16}) >= 0.0);

  const auto unit = evolve_backtrack([](double, double) { return 1.0; }, s, 1.3, GridSpec::square(4.0, 12));
  const auto ref = born_density(s, 1.3, GridSpec::square(4.0, 12));
  for (std::size_t k = 0; k < ref.rho.size(); ++k)
    CHECK(unit.rho.rho[k] == doctest::Approx(ref.rho[k]).epsilon(1e-12));
}

TEST_CASE("nonequilibrium initial densities") {
  const auto g = GridSpec::square(8.0, 128);
  const auto d = initial_density(NonequilibriumSpec::widened(1.0), g);
  CHECK(d.mass() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(d.at(64, 64) == doctest::Approx(std::exp(-(g.x(64) * g.x(64) + g.y(64) * g.y(64))) / pi));
  const auto e = born_density(OscillatorState::from_levels({{0, 0, 1.0}}), 0.0, g);
  for (std::size_t k = 0; k < d.rho.size(); ++k) CHECK(d.rho[k] == doctest::Approx(e.rho[k]).epsilon(1e-12));
  CHECK(initial_density(NonequilibriumSpec::widened(2.0), g).mass() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK_THROWS_AS(initial_density(NonequilibriumSpec::widened(-1.0), g), InvalidArgument);
  CHECK_THROWS_AS(initial_density(NonequilibriumSpec::from_grid(DensityGrid(GridSpec::square(1.0, 4))), g),
                  InvalidArgument);
}

TEST_CASE("short relaxation run") {
  RelaxationSettings rs;
  rs.grid = GridSpec::square(6.0, 64);
  rs.coarse = {16, 16};
  rs.equilibrium_control = true;
  rs.keep_frames = true;
  const auto r = relaxation_run(nine_mode_state(1), NonequilibriumSpec::widened(1.0), 2, rs);
  REQUIRE(r.hbar.size() == 3u);
  CHECK(r.frames.size() == 3u);
  CHECK(r.times[2] == doctest::Approx(4 * pi));
  CHECK(r.hbar[0] > 0.3);
  CHECK(r.hbar[2] < r.hbar[0]);
  for (double h : r.control_hbar) CHECK(h < 1e-2);
  CHECK(r.stats.max_courant <= 0.1 + 1e-12);
}

TEST_CASE("classical phase-space flow") {
  const auto v = classical_phase_velocity(1.0, 2.0);
  CHECK(v[0] == 2.0);
  CHECK(v[1] == doctest::Approx(-(4 - 3 - 2 - 1)));
  // Energy p^2/2 + V is conserved along the flow: grad H . v = 0.
  const double q = 0.3, p = -0.7;
  const auto w = classical_phase_velocity(q, p);
  const double dV = 4 * q * q * q - 3 * q * q - 2 * q - 1;
  CHECK(dV * w[0] + p * w[1] == doctest::Approx(0.0));
}
