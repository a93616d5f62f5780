#include "pilotwave/vorticity.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "pilotwave/errors.hpp"
#include "pilotwave/rng.hpp"

namespace pilotwave {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double factorial(int n) { return std::tgamma(n + 1.0); }

// Replaces eigenvalues closer than tol by their cluster mean, so that a
// numerically split multiple root is tested against the unit circle once.
std::vector<cplx> cluster(std::vector<cplx> roots, double tol) {
  const std::size_t n = roots.size();
  std::vector<int> label(n, -1);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (label[i] >= 0) continue;
    label[i] = next;
    std::vector<std::size_t> stack{i};
    while (!stack.empty()) {
      const std::size_t a = stack.back();
      stack.pop_back();
      for (std::size_t b = 0; b < n; ++b)
        if (label[b] < 0 && std::abs(roots[a] - roots[b]) < tol) {
          label[b] = next;
          stack.push_back(b);
        }
    }
    ++next;
  }
  std::vector<cplx> mean(static_cast<std::size_t>(next), 0.0);
  std::vector<int> count(static_cast<std::size_t>(next), 0);
  for (std::size_t i = 0; i < n; ++i) {
    mean[label[i]] += roots[i];
    ++count[label[i]];
  }
  for (std::size_t i = 0; i < n; ++i) roots[i] = mean[label[i]] / double(count[label[i]]);
  return roots;
}

double phase_step(cplx a, cplx b) { return std::arg(b / a); }

struct NewtonResult {
  bool ok;
  Configuration q;
};

NewtonResult newton_node(const OscillatorState& s, Configuration q, double t) {
  for (int it = 0; it < 40; ++it) {
    const PolyJet j = s.jet(q.qx, q.qy, t);
    if (std::abs(j.p) <= 1e-13 * j.bound) return {true, q};
    const double a = j.px.real(), b = j.py.real(), c = j.px.imag(), d = j.py.imag();
    const double det = a * d - b * c;
    if (det == 0.0 || !std::isfinite(det)) return {false, q};
    const double fr = j.p.real(), fi = j.p.imag();
    const double dx = -(d * fr - b * fi) / det;
    const double dy = -(-c * fr + a * fi) / det;
    q.qx += dx;
    q.qy += dy;
    if (!std::isfinite(q.qx) || !std::isfinite(q.qy)) return {false, q};
    if (std::hypot(dx, dy) < 1e-15 * (1.0 + q.eta())) {
      const PolyJet k = s.jet(q.qx, q.qy, t);
      return {std::abs(k.p) <= 1e-10 * k.bound, q};
    }
  }
  return {false, q};
}

// Velocity of a node from P(x(t), t) = 0: J dx/dt = -dP/dt.
Configuration node_velocity(const OscillatorState& s, const Node& n) {
  const PolyJet j = s.jet(n.q.qx, n.q.qy, n.t);
  const double a = j.px.real(), b = j.py.real(), c = j.px.imag(), d = j.py.imag();
  const double det = a * d - b * c;
  if (det == 0.0) return {0.0, 0.0};
  const double fr = j.pt.real(), fi = j.pt.imag();
  return {-(d * fr - b * fi) / det, -(-c * fr + a * fi) / det};
}

int node_charge(const OscillatorState& s, const Node& n, double nearest) {
  const double r = std::min(1e-3, 0.3 * nearest);
  return winding_number(s, n.t, r, n.q, 64);
}

}  // namespace

std::string to_string(VorticityCategory c) {
  switch (c) {
    case VorticityCategory::Maximal: return "maximal";
    case VorticityCategory::Zero: return "zero";
    case VorticityCategory::Intermediate: return "intermediate";
    case VorticityCategory::Indeterminate: return "indeterminate";
  }
  return "indeterminate";
}

VorticityCategory category_from_string(const std::string& s) {
  if (s == "maximal") return VorticityCategory::Maximal;
  if (s == "zero") return VorticityCategory::Zero;
  if (s == "intermediate") return VorticityCategory::Intermediate;
  throw InvalidArgument("unknown vorticity category '" + s + "'");
}

std::string to_string(NodeEventKind k) {
  switch (k) {
    case NodeEventKind::Creation: return "creation";
    case NodeEventKind::Annihilation: return "annihilation";
    case NodeEventKind::Entered: return "entered";
    case NodeEventKind::Exited: return "exited";
  }
  return "creation";
}

double VorticityClass::total() const { return kTwoPi * winding; }

int NodeSet::total_charge() const {
  int s = 0;
  for (const auto& n : nodes) s += n.charge;
  return s;
}

std::vector<cplx> top_shell_roots(const OscillatorState& state) {
  const int m = state.cutoff();
  std::vector<cplx> a(static_cast<std::size_t>(m) + 1);
  double amax = 0.0;
  for (int k = 0; k <= m; ++k) {
    a[k] = state.coeff(k, m - k) / std::sqrt(factorial(k) * factorial(m - k));
    amax = std::max(amax, std::abs(a[k]));
  }
  if (amax == 0.0)
    throw InvalidArgument("top energy shell is empty; reduce the cutoff first");
  const double eps = 1e-14 * amax;
  int hi = m;
  while (std::abs(a[hi]) <= eps) --hi;
  int lo = 0;
  while (std::abs(a[lo]) <= eps) ++lo;

  std::vector<cplx> roots(static_cast<std::size_t>(lo), 0.0);
  const int n = hi - lo;
  if (n > 0) {
    Eigen::MatrixXcd comp = Eigen::MatrixXcd::Zero(n, n);
    for (int i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
    for (int i = 0; i < n; ++i) comp(i, n - 1) = -a[lo + i] / a[hi];
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(comp, false);
    if (es.info() != Eigen::Success) throw Indeterminate("companion eigenvalues did not converge");
    for (int i = 0; i < n; ++i) roots.push_back(es.eigenvalues()[i]);
  }
  return cluster(std::move(roots), 1e-8);
}

VorticityClass total_vorticity(const OscillatorState& state) {
  const int m = state.cutoff();
  int inside = 0;
  for (const auto& z : top_shell_roots(state)) {
    const double r = std::abs(z);
    if (std::abs(r - 1.0) < 1e-9)
      throw Indeterminate("top-shell root on the unit circle (|z| = " + std::to_string(r) + ")");
    if (r < 1.0) ++inside;
  }
  VorticityClass vc;
  vc.winding = 2 * inside - m;
  if (vc.winding == 0)
    vc.category = VorticityCategory::Zero;
  else if (std::abs(vc.winding) == m)
    vc.category = VorticityCategory::Maximal;
  else
    vc.category = VorticityCategory::Intermediate;
  return vc;
}

int winding_number(const OscillatorState& state, double t, double eta, const Configuration& center,
                   int samples) {
  for (int n = std::max(8, samples); n <= (1 << 20); n *= 2) {
    double total = 0.0;
    bool resolved = true;
    cplx first{}, prev{};
    for (int k = 0; k <= n; ++k) {
      cplx p;
      if (k == n) {
        p = first;
      } else {
        const double ph = kTwoPi * k / n;
        p = state.jet(center.qx + eta * std::cos(ph), center.qy + eta * std::sin(ph), t).p;
        if (std::abs(p) == 0.0 || !std::isfinite(std::abs(p)))
          throw Indeterminate("psi vanishes on the winding loop");
      }
      if (k == 0) {
        first = prev = p;
        continue;
      }
      const double d = phase_step(prev, p);
      if (std::abs(d) > 0.5 * std::numbers::pi) {
        resolved = false;
        break;
      }
      total += d;
      prev = p;
    }
    if (!resolved) continue;
    const double w = total / kTwoPi;
    const double r = std::round(w);
    if (std::abs(w - r) > 1e-3) throw Indeterminate("winding integral not close to an integer");
    return static_cast<int>(r);
  }
  throw Indeterminate("winding loop unresolved at 2^20 samples");
}

GridSpec default_node_box(const OscillatorState& state) {
  return GridSpec::square(default_half_width(state.cutoff()), 256);
}

NodeSet find_nodes(const OscillatorState& state, double t, const std::optional<GridSpec>& box) {
  const GridSpec g = box ? *box : default_node_box(state);
  g.validate();
  const int nx = g.nx, ny = g.ny;
  const double dx = g.dx(), dy = g.dy();
  // Corner values of P.
  std::vector<cplx> corner(static_cast<std::size_t>(nx + 1) * (ny + 1));
  auto cidx = [nx](int i, int j) { return static_cast<std::size_t>(j) * (nx + 1) + i; };
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      corner[cidx(i, j)] = state.jet(g.xmin + i * dx, g.ymin + j * dy, t).p;

  NodeSet out;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const cplx c0 = corner[cidx(i, j)], c1 = corner[cidx(i + 1, j)],
                 c2 = corner[cidx(i + 1, j + 1)], c3 = corner[cidx(i, j + 1)];
      const double w =
          phase_step(c0, c1) + phase_step(c1, c2) + phase_step(c2, c3) + phase_step(c3, c0);
      if (std::abs(w) < 0.5 * kTwoPi) continue;
      const auto r = newton_node(state, {g.x(i), g.y(j)}, t);
      if (!r.ok) continue;
      if (std::abs(r.q.qx - g.x(i)) > 3 * dx || std::abs(r.q.qy - g.y(j)) > 3 * dy) continue;
      const bool dup = std::any_of(out.nodes.begin(), out.nodes.end(), [&](const Node& n) {
        return std::hypot(n.q.qx - r.q.qx, n.q.qy - r.q.qy) < 1e-6;
      });
      if (!dup) out.nodes.push_back({r.q, 0, t});
    }
  }
  for (auto& n : out.nodes) {
    double nearest = 1.0;
    for (const auto& o : out.nodes)
      if (&o != &n) nearest = std::min(nearest, std::hypot(o.q.qx - n.q.qx, o.q.qy - n.q.qy));
    n.charge = node_charge(state, n, nearest);
  }
  std::sort(out.nodes.begin(), out.nodes.end(), [](const Node& a, const Node& b) {
    return a.q.qx != b.q.qx ? a.q.qx < b.q.qx : a.q.qy < b.q.qy;
  });
  return out;
}

NodeTrack track_nodes(const OscillatorState& state, double t0, double t1, double dt,
                      const std::optional<GridSpec>& box) {
  if (!(dt > 0)) throw InvalidArgument("dt must be positive");
  const GridSpec g = box ? *box : default_node_box(state);
  const double radius = 0.5;
  const double margin = 4 * std::max(g.dx(), g.dy());
  // True when the node, moved by `span` along its own velocity, sits at or
  // beyond the box edge.
  auto crosses_edge = [&](const Node& n, double span) {
    const Configuration v = node_velocity(state, n);
    for (double f : {0.0, 0.5, 1.0, 1.5}) {
      const double x = n.q.qx + f * span * v.qx, y = n.q.qy + f * span * v.qy;
      if (x - g.xmin < margin || g.xmax - x < margin || y - g.ymin < margin || g.ymax - y < margin)
        return true;
    }
    return false;
  };
  NodeTrack tr;
  const long steps = std::max(1L, std::lround(std::ceil((t1 - t0) / dt - 1e-9)));
  for (long k = 0; k <= steps; ++k) {
    const double t = k == steps ? t1 : t0 + k * dt;
    NodeSet cur = find_nodes(state, t, g);
    if (!tr.snapshots.empty()) {
      const auto& prev = tr.snapshots.back().nodes;
      struct Pair {
        double d;
        std::size_t a, b;
      };
      std::vector<Pair> pairs;
      for (std::size_t a = 0; a < prev.size(); ++a) {
        // Compare against the position predicted from the node's own velocity.
        const Configuration v = node_velocity(state, prev[a]);
        const double h = t - prev[a].t;
        const double px = prev[a].q.qx + h * v.qx, py = prev[a].q.qy + h * v.qy;
        for (std::size_t b = 0; b < cur.nodes.size(); ++b) {
          if (prev[a].charge != cur.nodes[b].charge) continue;
          const double d = std::hypot(px - cur.nodes[b].q.qx, py - cur.nodes[b].q.qy);
          if (d < radius) pairs.push_back({d, a, b});
        }
      }
      std::sort(pairs.begin(), pairs.end(), [](const Pair& x, const Pair& y) { return x.d < y.d; });
      std::vector<bool> used_a(prev.size()), used_b(cur.nodes.size());
      for (const auto& p : pairs) {
        if (used_a[p.a] || used_b[p.b]) continue;
        used_a[p.a] = used_b[p.b] = true;
      }
      int lost = 0, born = 0;
      for (std::size_t a = 0; a < prev.size(); ++a)
        if (!used_a[a]) {
          const bool edge = crosses_edge(prev[a], t - prev[a].t);
          if (!edge) lost += prev[a].charge;
          tr.events.push_back({t, prev[a].q,
                               edge ? NodeEventKind::Exited : NodeEventKind::Annihilation,
                               prev[a].charge});
          cur.events.push_back(tr.events.back());
        }
      for (std::size_t b = 0; b < cur.nodes.size(); ++b)
        if (!used_b[b]) {
          const bool edge = crosses_edge(cur.nodes[b], -(t - tr.times.back()));
          if (!edge) born += cur.nodes[b].charge;
          tr.events.push_back({t, cur.nodes[b].q,
                               edge ? NodeEventKind::Entered : NodeEventKind::Creation,
                               cur.nodes[b].charge});
          cur.events.push_back(tr.events.back());
        }
      if (lost != 0 || born != 0)
        throw TrackingLost("unpaired node event near T=" + std::to_string(t) +
                           " (net charge lost " + std::to_string(lost) + ", created " +
                           std::to_string(born) + ")");
    }
    tr.times.push_back(t);
    tr.snapshots.push_back(std::move(cur));
  }
  return tr;
}

ClassifiedStates generate_classified_states(int m, VorticityCategory category, int count,
                                            std::uint64_t seed, long max_attempts) {
  if (category != VorticityCategory::Maximal && category != VorticityCategory::Zero)
    throw InvalidArgument("category must be maximal or zero");
  if (category == VorticityCategory::Zero && m % 2 == 1)
    throw ImpossibleCategory("zero total vorticity is impossible for odd m = " + std::to_string(m));
  if (count < 0) throw InvalidArgument("count must be non-negative");
  ClassifiedStates out;
  for (std::uint64_t k = 0; static_cast<int>(out.states.size()) < count; ++k) {
    if (out.attempts >= max_attempts)
      throw InvalidArgument("attempt budget exhausted before reaching count");
    const std::uint64_t sub = sub_seed(seed, k);
    auto s = random_state(m, sub);
    ++out.attempts;
    if (is_fine_tuned(s)) {
      ++out.fine_tuned;
      continue;
    }
    VorticityClass vc;
    try {
      vc = total_vorticity(s);
    } catch (const Indeterminate&) {
      ++out.indeterminate;
      continue;
    }
    if (vc.category == category) {
      out.states.push_back(std::move(s));
      out.seeds.push_back(sub);
    }
  }
  return out;
}

}  // namespace pilotwave
