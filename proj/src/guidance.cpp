#include "pilotwave/guidance.hpp"

#include <cmath>

#include "pilotwave/errors.hpp"

namespace pilotwave {

namespace {

constexpr double kNodeFloor = 1e-300;

std::string where(const Configuration& q, double t) {
  return "(" + std::to_string(q.qx) + ", " + std::to_string(q.qy) + ") at T=" + std::to_string(t);
}

Vec2 jet_velocity(const PolyJet& j) {
  // The Gaussian factor is real and drops out of Im(grad psi / psi).
  return {(j.px / j.p).imag(), (j.py / j.p).imag()};
}

double turn(const ode::State<2>& a, const ode::State<2>& b) {
  return std::atan2(a[0] * b[1] - a[1] * b[0], a[0] * b[0] + a[1] * b[1]);
}

template <class Observer>
ode::State<2> run(const OscillatorState& state, const Configuration& start, double t0, double t1,
                  const IntegratorSettings& s, ode::Stats& stats, Observer&& obs) {
  if (!(s.rtol > 0) || !(s.atol > 0)) throw InvalidArgument("rtol and atol must be positive");
  const PolyJet j0 = state.jet(start.qx, start.qy, t0);
  if (std::norm(j0.p) < kNodeFloor || std::norm(j0.p) < s.node_guard * j0.bound * j0.bound)
    throw AtNode("start point on a node " + where(start, t0));

  // The guard sees each accepted point first; the next step's first stage
  // evaluates the same point, so it reuses that jet.
  struct {
    double t, x, y;
    PolyJet j;
    bool valid = false;
  } last;
  auto rhs = [&state, &last](double t, const ode::State<2>& y) -> ode::State<2> {
    const bool hit = last.valid && last.t == t && last.x == y[0] && last.y == y[1];
    const PolyJet j = hit ? last.j : state.jet(y[0], y[1], t);
    if (std::norm(j.p) < kNodeFloor) throw AtNode("trajectory hit a node " + where({y[0], y[1]}, t));
    const Vec2 v = jet_velocity(j);
    return {v[0], v[1]};
  };
  auto guard = [&state, &s, &last](double t, const ode::State<2>& y) {
    last = {t, y[0], y[1], state.jet(y[0], y[1], t), true};
    return std::norm(last.j.p) < s.node_guard * last.j.bound * last.j.bound;
  };
  try {
    return ode::integrate<2>(rhs, ode::State<2>{start.qx, start.qy}, t0, t1, s.ode(), stats, obs,
                             guard);
  } catch (const AtNode& e) {
    throw StepUnderflow(std::string("node reached: ") + e.what());
  }
}

}  // namespace

ode::Settings IntegratorSettings::ode() const {
  ode::Settings o;
  o.rtol = rtol;
  o.atol = atol;
  o.max_step = max_step;
  o.max_halvings = max_halvings;
  return o;
}

Vec2 velocity_cartesian(const OscillatorState& state, const Configuration& q, double t) {
  const PolyJet j = state.jet(q.qx, q.qy, t);
  if (std::norm(j.p) < kNodeFloor) throw AtNode("velocity requested at a node " + where(q, t));
  return jet_velocity(j);
}

Vec2 velocity_polar(const OscillatorState& state, const Configuration& q, double t) {
  const double eta = q.eta();
  if (eta < 1e-12) throw OriginSingular("polar velocity undefined at the origin");
  const PolyJet j = state.jet(q.qx, q.qy, t);
  if (std::norm(j.p) < kNodeFloor) throw AtNode("velocity requested at a node " + where(q, t));
  const double c = q.qx / eta, s = q.qy / eta;
  const cplx d_eta = c * j.px + s * j.py;
  const cplx d_phi = -q.qy * j.px + q.qx * j.py;
  return {(d_eta / j.p).imag(), (d_phi / j.p).imag() / (eta * eta)};
}

Trajectory integrate(const OscillatorState& state, const Configuration& start, double t0,
                     double t1, const IntegratorSettings& settings) {
  Trajectory tr;
  bool first = true;
  ode::State<2> prev{};
  run(state, start, t0, t1, settings, tr.stats, [&](double t, const ode::State<2>& y) {
    if (!first) tr.unwrapped_dphi += turn(prev, y);
    first = false;
    prev = y;
    tr.samples.push_back({t, {y[0], y[1]}});
  });
  return tr;
}

Endpoint advance(const OscillatorState& state, const Configuration& start, double t0, double t1,
                 const IntegratorSettings& settings) {
  Endpoint ep;
  bool first = true;
  ode::State<2> prev{};
  const auto y = run(state, start, t0, t1, settings, ep.stats, [&](double, const ode::State<2>& y) {
    if (!first) ep.unwrapped_dphi += turn(prev, y);
    first = false;
    prev = y;
  });
  ep.q = {y[0], y[1]};
  return ep;
}

double density_rate(const OscillatorState& state, const Configuration& q, double t) {
  const PolyJet j = state.jet(q.qx, q.qy, t);
  const double g2 = std::exp(-(q.qx * q.qx + q.qy * q.qy)) / std::numbers::pi;
  return 2.0 * g2 * (std::conj(j.p) * j.pt).real();
}

DensityGrid density_rate_grid(const OscillatorState& state, const GridSpec& grid, double t) {
  DensityGrid out(grid, t);
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) out.at(i, j) = density_rate(state, {grid.x(i), grid.y(j)}, t);
  return out;
}

Vec2 velocity_green(const DensityGrid& rate, double rho_at_x, const Configuration& q) {
  if (!(rho_at_x > 1e-300)) throw AtNode("Green velocity needs |psi|^2 > 0");
  const auto& g = rate.grid;
  const double dx = g.dx(), dy = g.dy();
  const int si = static_cast<int>(std::floor((q.qx - g.xmin) / dx));
  const int sj = static_cast<int>(std::floor((q.qy - g.ymin) / dy));
  double jx = 0.0, jy = 0.0;
  for (int j = 0; j < g.ny; ++j) {
    const double ry = g.y(j) - q.qy;
    for (int i = 0; i < g.nx; ++i) {
      if (i == si && j == sj) continue;
      const double rx = g.x(i) - q.qx;
      const double r2 = rx * rx + ry * ry;
      if (r2 == 0.0) continue;
      const double w = rate.at(i, j) / r2;
      jx += w * rx;
      jy += w * ry;
    }
  }
  const double k = g.cell_area() / (2.0 * std::numbers::pi * rho_at_x);
  return {jx * k, jy * k};
}

}  // namespace pilotwave
