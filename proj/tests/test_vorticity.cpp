#include <cmath>
#include <map>
#include <numbers>

#include "doctest.h"
#include "pilotwave/errors.hpp"
#include "pilotwave/guidance.hpp"
#include "pilotwave/vorticity.hpp"

using namespace pilotwave;
using std::numbers::pi;

namespace {

// Circulation of the guidance velocity around a circle, trapezoid rule.
double circulation(const OscillatorState& s, const Configuration& c, double r, double t,
                   int n = 20000) {
  double sum = 0.0;
  for (int k = 0; k < n; ++k) {
    const double a = 2 * pi * k / n;
    const Vec2 v = velocity_cartesian(s, {c.qx + r * std::cos(a), c.qy + r * std::sin(a)}, t);
    sum += -v[0] * std::sin(a) + v[1] * std::cos(a);
  }
  return sum * r * 2 * pi / n;
}

}  // namespace

TEST_CASE("total vorticity from the top shell") {
  CHECK(total_vorticity(OscillatorState::from_levels({{1, 0, 0.8}, {0, 1, 0.6}})).winding == 1);
  CHECK(total_vorticity(OscillatorState::from_levels({{1, 0, 0.6}, {0, 1, 0.8}})).winding == -1);
  const auto mono = total_vorticity(OscillatorState::from_levels({{3, 0, 1.0}}));
  CHECK(mono.winding == 3);
  CHECK(mono.category == VorticityCategory::Maximal);
  CHECK(mono.total() == doctest::Approx(6 * pi));
  CHECK_THROWS_AS(total_vorticity(OscillatorState::from_levels({{1, 0, 1.0}, {0, 1, 1.0}})),
                  Indeterminate);
  CHECK_THROWS_AS(total_vorticity(OscillatorState(2, {1.0, 0, 0, 0, 0, 0})), InvalidArgument);

  for (int k = 0; k < 100; ++k) {
    const auto s = random_state(2, 7000 + k);
    const auto vc = total_vorticity(s);
    // At eta = 25 a node can still lie outside the loop when a top-shell root
    // is within a few percent of the unit circle; far out the match is exact.
    CHECK(vc.winding == winding_number(s, 0.0, 1000.0));
    CHECK(total_vorticity(s.with_global_phase(1.234)).winding == vc.winding);
    CHECK(vc.winding % 2 == 0);
  }
}

TEST_CASE("classified state generation") {
  CHECK_THROWS_AS(generate_classified_states(3, VorticityCategory::Zero, 1, 1), ImpossibleCategory);
  const auto z = generate_classified_states(2, VorticityCategory::Zero, 300, 11);
  CHECK(std::abs(z.acceptance() - 0.66) < 0.05);
  for (const auto& s : z.states) CHECK(total_vorticity(s).winding == 0);
  const auto m3 = generate_classified_states(3, VorticityCategory::Maximal, 60, 12);
  CHECK(std::abs(m3.acceptance() - 0.06) < 0.02);
  const auto m4 = generate_classified_states(4, VorticityCategory::Maximal, 40, 13);
  CHECK(std::abs(m4.acceptance() - 0.008) < 0.004);
  for (const auto& s : m4.states) CHECK(std::abs(total_vorticity(s).winding) == 4);
}

TEST_CASE("m=1 node follows the closed-form path") {
  const auto s = OscillatorState::from_levels(
      {{0, 0, std::polar(0.5, 0.3)}, {1, 0, std::polar(0.7, 1.9)}, {0, 1, std::polar(0.45, -0.4)}});
  const auto d = angular_to_cartesian(s);
  const double d00 = std::abs(d.coeff(0, 0)), d10 = std::abs(d.coeff(1, 0)),
               d01 = std::abs(d.coeff(0, 1));
  const double t00 = std::arg(d.coeff(0, 0)), t10 = std::arg(d.coeff(1, 0)),
               t01 = std::arg(d.coeff(0, 1));
  for (int k = 0; k < 12; ++k) {
    const double t = 2 * pi * k / 12;
    const double qx = d00 / (std::sqrt(2.0) * d10) * std::sin(t01 - t00 - t) / std::sin(t10 - t01);
    const double qy = d00 / (std::sqrt(2.0) * d01) * std::sin(t10 - t00 - t) / std::sin(t01 - t10);
    const auto ns = find_nodes(s, t);
    REQUIRE(ns.nodes.size() == 1);
    CHECK(std::abs(ns.nodes[0].q.qx - qx) < 1e-8);
    CHECK(std::abs(ns.nodes[0].q.qy - qy) < 1e-8);
    CHECK(ns.nodes[0].charge == total_vorticity(s).winding);
  }
  const auto tr = track_nodes(s, 0.0, 2 * pi, 2 * pi / 200);
  CHECK(tr.events.empty());
  for (const auto& snap : tr.snapshots) CHECK(snap.nodes.size() == 1);
}

TEST_CASE("node census of random states") {
  const double r = 11.5;
  for (int k = 0; k < 100; ++k) {
    const auto s = random_state(3, 8000 + k);
    const auto ns = find_nodes(s, 0.0, GridSpec::square(12.0, 384));
    CHECK(ns.nodes.size() <= 9u);
    int inside = 0;
    for (const auto& n : ns.nodes) {
      CHECK(std::abs(n.charge) == 1);
      if (n.q.eta() < r) inside += n.charge;
    }
    // Argument principle on the loop of radius r.
    CHECK(inside == winding_number(s, 0.0, r));
  }

  const auto diag = OscillatorState::from_levels({{1, 1, 0.6}, {2, 2, 0.8}});
  // A real wave function has nodal lines, not isolated vortices.
  CHECK(find_nodes(diag, 0.0, GridSpec::square(6.0, 128)).nodes.empty());
}

TEST_CASE("circulation is quantized") {
  const auto s = random_state(2, 31);
  const auto ns = find_nodes(s, 0.4);
  REQUIRE(!ns.nodes.empty());
  const auto& n = ns.nodes.front();
  double nearest = 1.0;
  for (const auto& o : ns.nodes)
    if (&o != &n) nearest = std::min(nearest, std::hypot(o.q.qx - n.q.qx, o.q.qy - n.q.qy));
  const double c = circulation(s, n.q, 0.25 * nearest, 0.4);
  CHECK(std::abs(c - 2 * pi * n.charge) < 1e-3);

  // A small loop away from every node.
  Configuration free{n.q.qx + 0.5 * nearest, n.q.qy};
  double clear = 1e9;
  for (const auto& o : ns.nodes) clear = std::min(clear, std::hypot(o.q.qx - free.qx, o.q.qy - free.qy));
  CHECK(std::abs(circulation(s, free, 0.3 * clear, 0.4)) < 1e-3);
}

TEST_CASE("tracked node charge is conserved") {
  for (int k = 0; k < 3; ++k) {
    const auto s = random_state(2, 9100 + k);
    const int total = total_vorticity(s).winding;
    const auto tr = track_nodes(s, 0.0, 2 * pi, 2 * pi / 400, GridSpec::square(10.0, 256));
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
      int inside = 0;
      for (const auto& n : tr.snapshots[i].nodes)
        if (n.q.eta() < 9.5) inside += n.charge;
      const int loop = winding_number(s, tr.times[i], 9.5);
      CHECK(inside == loop);
      if (loop == total) CHECK(tr.snapshots[i].total_charge() == total);
    }
    std::map<double, int> per_time;
    for (const auto& e : tr.events) {
      if (e.kind == NodeEventKind::Creation) per_time[e.t] += e.charge;
      if (e.kind == NodeEventKind::Annihilation) per_time[e.t] -= e.charge;
    }
    for (const auto& [t, net] : per_time) CHECK(net == 0);
  }
}
