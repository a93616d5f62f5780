#include "pilotwave/oscillator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <tuple>

#include "pilotwave/errors.hpp"
#include "pilotwave/rng.hpp"

namespace pilotwave {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInvSqrtPi = std::numbers::inv_sqrtpi;

double factorial(int n) { return std::tgamma(n + 1.0); }

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Polynomial in z and zbar; key (p, q) is the monomial z^p zbar^q.
using ZPoly = std::map<std::pair<int, int>, double>;

ZPoly raise_d(const ZPoly& in) {
  // a_d^dagger (P chi00) = (z P - dP/dzbar) chi00
  ZPoly out;
  for (const auto& [pq, c] : in) {
    const auto [p, q] = pq;
    out[{p + 1, q}] += c;
    if (q > 0) out[{p, q - 1}] -= c * q;
  }
  return out;
}

ZPoly raise_g(const ZPoly& in) {
  // a_g^dagger (P chi00) = (zbar P - dP/dz) chi00
  ZPoly out;
  for (const auto& [pq, c] : in) {
    const auto [p, q] = pq;
    out[{p, q + 1}] += c;
    if (p > 0) out[{p - 1, q}] -= c * p;
  }
  return out;
}

// Normalized basis polynomials chi_{nd,ng} / chi_00, one per level.
const std::vector<ZPoly>& basis_polys() {
  static const std::vector<ZPoly> table = [] {
    std::vector<ZPoly> t(level_count(kMaxCutoff));
    std::vector<ZPoly> dpow(kMaxCutoff + 1);
    dpow[0] = ZPoly{{{0, 0}, 1.0}};
    for (int nd = 1; nd <= kMaxCutoff; ++nd) dpow[nd] = raise_d(dpow[nd - 1]);
    for (int nd = 0; nd <= kMaxCutoff; ++nd) {
      ZPoly p = dpow[nd];
      for (int ng = 0; nd + ng <= kMaxCutoff; ++ng) {
        if (ng > 0) p = raise_g(p);
        const double norm = 1.0 / std::sqrt(factorial(nd) * factorial(ng));
        ZPoly scaled;
        for (const auto& [pq, c] : p)
          if (c != 0.0) scaled[pq] = c * norm;
        t[level_index(nd, ng)] = std::move(scaled);
      }
    }
    return t;
  }();
  return table;
}

// (x + iy)^p (x - iy)^q expanded into x^a y^b.
std::map<std::pair<int, int>, cplx> cartesian_monomials(int p, int q) {
  static const cplx kI(0.0, 1.0);
  std::map<std::pair<int, int>, cplx> out;
  for (int j = 0; j <= p; ++j) {
    for (int k = 0; k <= q; ++k) {
      const cplx c = binomial(p, j) * binomial(q, k) * std::pow(kI, j) * std::pow(-kI, k);
      out[{p + q - j - k, j + k}] += c;
    }
  }
  return out;
}

void check_level(int n1, int n2, int m) {
  if (n1 < 0 || n2 < 0 || n1 + n2 > m)
    throw InvalidArgument("level (" + std::to_string(n1) + "," + std::to_string(n2) +
                          ") outside cutoff " + std::to_string(m));
}

void check_cutoff(int m) {
  if (m < 0 || m > kMaxCutoff)
    throw CutoffExceeded("cutoff " + std::to_string(m) + " outside [0, " +
                         std::to_string(kMaxCutoff) + "]");
}

double norm_sq(std::span<const cplx> v) {
  double s = 0.0;
  for (const auto& c : v) s += std::norm(c);
  return s;
}

std::vector<cplx> shell_phases(int m, double t) {
  std::vector<cplx> ph(static_cast<std::size_t>(m) + 1);
  for (int e = 0; e <= m; ++e) ph[e] = std::polar(1.0, -e * t);
  return ph;
}

// Closed-form shell blocks for m <= 4: rows are angular levels (nd, ng),
// entries (nx, ny, D).
struct TableEntry {
  int nd, ng, nx, ny;
  cplx d;
};

const std::vector<TableEntry>& transform_table() {
  static const std::vector<TableEntry> t = [] {
    const double s2 = std::numbers::sqrt2, s6 = std::sqrt(6.0);
    const cplx i(0.0, 1.0);
    return std::vector<TableEntry>{
        {0, 0, 0, 0, 1.0},
        {1, 0, 1, 0, s2 / 2}, {1, 0, 0, 1, i * (s2 / 2)},
        {0, 1, 1, 0, s2 / 2}, {0, 1, 0, 1, -i * (s2 / 2)},
        {2, 0, 2, 0, 0.5}, {2, 0, 1, 1, i * (s2 / 2)}, {2, 0, 0, 2, -0.5},
        {1, 1, 2, 0, s2 / 2}, {1, 1, 0, 2, s2 / 2},
        {0, 2, 2, 0, 0.5}, {0, 2, 1, 1, -i * (s2 / 2)}, {0, 2, 0, 2, -0.5},
        {3, 0, 3, 0, s2 / 4}, {3, 0, 2, 1, i * (s6 / 4)}, {3, 0, 1, 2, -s6 / 4},
        {3, 0, 0, 3, -i * (s2 / 4)},
        {2, 1, 3, 0, s6 / 4}, {2, 1, 2, 1, i * (s2 / 4)}, {2, 1, 1, 2, s2 / 4},
        {2, 1, 0, 3, i * (s6 / 4)},
        {1, 2, 3, 0, s6 / 4}, {1, 2, 2, 1, -i * (s2 / 4)}, {1, 2, 1, 2, s2 / 4},
        {1, 2, 0, 3, -i * (s6 / 4)},
        {0, 3, 3, 0, s2 / 4}, {0, 3, 2, 1, -i * (s6 / 4)}, {0, 3, 1, 2, -s6 / 4},
        {0, 3, 0, 3, i * (s2 / 4)},
        {4, 0, 4, 0, 0.25}, {4, 0, 3, 1, i * 0.5}, {4, 0, 2, 2, -s6 / 4},
        {4, 0, 1, 3, -i * 0.5}, {4, 0, 0, 4, 0.25},
        {3, 1, 4, 0, 0.5}, {3, 1, 3, 1, i * 0.5}, {3, 1, 1, 3, i * 0.5}, {3, 1, 0, 4, -0.5},
        {2, 2, 4, 0, s6 / 4}, {2, 2, 2, 2, 0.5}, {2, 2, 0, 4, s6 / 4},
        {1, 3, 4, 0, 0.5}, {1, 3, 3, 1, -i * 0.5}, {1, 3, 1, 3, -i * 0.5}, {1, 3, 0, 4, -0.5},
        {0, 4, 4, 0, 0.25}, {0, 4, 3, 1, -i * 0.5}, {0, 4, 2, 2, -s6 / 4},
        {0, 4, 1, 3, i * 0.5}, {0, 4, 0, 4, 0.25},
    };
  }();
  return t;
}

}  // namespace

// ---------------------------------------------------------------------------

double Configuration::eta() const { return std::hypot(qx, qy); }

double Configuration::phi() const {
  const double a = std::atan2(qy, qx);
  return a >= kPi ? a - 2.0 * kPi : a;
}

Configuration Configuration::polar(double eta, double phi) {
  return {eta * std::cos(phi), eta * std::sin(phi)};
}

std::pair<int, int> level_at(std::size_t index) {
  int e = 0;
  while (level_count(e) <= index) ++e;
  const auto start = static_cast<std::size_t>(e) * static_cast<std::size_t>(e + 1) / 2;
  const int n2 = static_cast<int>(index - start);
  return {e - n2, n2};
}

// ---------------------------------------------------------------------------

CartesianCoeffs::CartesianCoeffs(int m, std::vector<cplx> coeffs) : m_(m), d_(std::move(coeffs)) {
  check_cutoff(m);
  if (d_.size() != level_count(m))
    throw InvalidArgument("expected " + std::to_string(level_count(m)) + " coefficients");
  if (std::abs(norm_sq(d_) - 1.0) > 1e-12)
    throw InvalidArgument("Cartesian coefficients are not normalized");
}

cplx CartesianCoeffs::coeff(int nx, int ny) const {
  if (nx < 0 || ny < 0 || nx + ny > m_) return 0.0;
  return d_[level_index(nx, ny)];
}

double CartesianCoeffs::norm_squared() const { return norm_sq(d_); }

// ---------------------------------------------------------------------------

OscillatorState::OscillatorState(int m, std::vector<cplx> coeffs) : m_(m), c_(std::move(coeffs)) {
  check_cutoff(m);
  if (c_.size() != level_count(m))
    throw InvalidArgument("expected " + std::to_string(level_count(m)) + " coefficients, got " +
                          std::to_string(c_.size()));
  for (const auto& c : c_)
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
      throw InvalidArgument("non-finite coefficient");
  if (std::abs(norm_sq(c_) - 1.0) > 1e-12)
    throw InvalidArgument("state is not normalized (norm^2 = " + std::to_string(norm_sq(c_)) + ")");
  build_terms();
}

OscillatorState OscillatorState::normalized(int m, std::vector<cplx> coeffs) {
  const double n = std::sqrt(norm_sq(coeffs));
  if (!(n > 0.0) || !std::isfinite(n)) throw InvalidArgument("cannot normalize a zero state");
  for (auto& c : coeffs) c /= n;
  return OscillatorState(m, std::move(coeffs));
}

OscillatorState OscillatorState::from_levels(
    const std::vector<std::tuple<int, int, cplx>>& levels) {
  int m = 0;
  for (const auto& [nd, ng, c] : levels) {
    check_level(nd, ng, kMaxCutoff);
    m = std::max(m, nd + ng);
  }
  std::vector<cplx> c(level_count(m));
  for (const auto& [nd, ng, v] : levels) c[level_index(nd, ng)] += v;
  return normalized(m, std::move(c));
}

cplx OscillatorState::coeff(int nd, int ng) const {
  if (nd < 0 || ng < 0 || nd + ng > m_) return 0.0;
  return c_[level_index(nd, ng)];
}

double OscillatorState::norm_squared() const { return norm_sq(c_); }

OscillatorState OscillatorState::with_global_phase(double alpha) const {
  auto c = c_;
  const cplx ph = std::polar(1.0, alpha);
  for (auto& v : c) v *= ph;
  return normalized(m_, std::move(c));
}

OscillatorState OscillatorState::mirrored() const {
  std::vector<cplx> c(c_.size());
  for (int e = 0; e <= m_; ++e)
    for (int ng = 0; ng <= e; ++ng) c[level_index(ng, e - ng)] = c_[level_index(e - ng, ng)];
  return normalized(m_, std::move(c));
}

OscillatorState OscillatorState::conjugated() const {
  auto c = c_;
  for (auto& v : c) v = std::conj(v);
  return normalized(m_, std::move(c));
}

OscillatorState OscillatorState::reduced() const {
  int top = 0;
  for (std::size_t i = 0; i < c_.size(); ++i)
    if (c_[i] != 0.0) top = std::max(top, level_at(i).first + level_at(i).second);
  std::vector<cplx> c(c_.begin(), c_.begin() + static_cast<std::ptrdiff_t>(level_count(top)));
  return normalized(top, std::move(c));
}

void OscillatorState::build_terms() {
  std::map<std::tuple<int, int, int>, cplx> acc;
  const auto& polys = basis_polys();
  for (int nd = 0; nd <= m_; ++nd) {
    for (int ng = 0; nd + ng <= m_; ++ng) {
      const cplx c = c_[level_index(nd, ng)];
      if (c == 0.0) continue;
      for (const auto& [pq, pc] : polys[level_index(nd, ng)]) {
        for (const auto& [ab, mc] : cartesian_monomials(pq.first, pq.second))
          acc[{nd + ng, ab.first, ab.second}] += c * pc * mc;
      }
    }
  }
  terms_.clear();
  for (const auto& [k, v] : acc) {
    if (std::abs(v) < 1e-15) continue;
    terms_.push_back({std::get<0>(k), std::get<1>(k), std::get<2>(k), v});
  }
}

PolyJet OscillatorState::jet(double x, double y, double t) const {
  double xp[kMaxCutoff + 1], yp[kMaxCutoff + 1];
  xp[0] = yp[0] = 1.0;
  for (int k = 1; k <= m_; ++k) {
    xp[k] = xp[k - 1] * x;
    yp[k] = yp[k - 1] * y;
  }
  cplx ph[kMaxCutoff + 1];
  const cplx w = std::polar(1.0, -t);
  ph[0] = 1.0;
  for (int e = 1; e <= m_; ++e) ph[e] = ph[e - 1] * w;

  // Hot path for every trajectory step: real arithmetic only, since
  // std::complex multiplies and std::abs (hypot) dominate otherwise.
  double pr = 0, pi = 0, xr = 0, xi = 0, yr = 0, yi = 0, tr = 0, ti = 0, bound = 0;
  for (const auto& term : terms_) {
    const cplx& w = ph[term.shell];
    const double cr = term.c.real() * w.real() - term.c.imag() * w.imag();
    const double ci = term.c.real() * w.imag() + term.c.imag() * w.real();
    const double mono = xp[term.ax] * yp[term.ay];
    const double vr = cr * mono, vi = ci * mono;
    pr += vr;
    pi += vi;
    tr += term.shell * vi;
    ti -= term.shell * vr;
    bound += std::sqrt(vr * vr + vi * vi);
    if (term.ax > 0) {
      const double d = term.ax * xp[term.ax - 1] * yp[term.ay];
      xr += cr * d;
      xi += ci * d;
    }
    if (term.ay > 0) {
      const double d = term.ay * xp[term.ax] * yp[term.ay - 1];
      yr += cr * d;
      yi += ci * d;
    }
  }
  PolyJet j{{pr, pi}, {xr, xi}, {yr, yi}, {tr, ti}, bound};
  return j;
}

std::vector<cplx> OscillatorState::monomial_coefficients(double t) const {
  const auto n = static_cast<std::size_t>(m_) + 1;
  std::vector<cplx> k(n * n, 0.0);
  for (const auto& term : terms_)
    k[static_cast<std::size_t>(term.ax) * n + static_cast<std::size_t>(term.ay)] +=
        term.c * std::polar(1.0, -term.shell * t);
  return k;
}

// ---------------------------------------------------------------------------

std::vector<double> radial_poly_coefficients(int nd, int ng) {
  check_level(nd, ng, kMaxCutoff);
  std::vector<double> out(static_cast<std::size_t>(nd + ng) + 1, 0.0);
  for (const auto& [pq, c] : basis_polys()[level_index(nd, ng)]) out[pq.first + pq.second] += c;
  return out;
}

double eval_radial_poly(int nd, int ng, double eta) {
  const auto c = radial_poly_coefficients(nd, ng);
  double r = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) r = r * eta + *it;
  return r;
}

double eval_radial_poly_derivative(int nd, int ng, double eta) {
  const auto c = radial_poly_coefficients(nd, ng);
  double r = 0.0;
  for (std::size_t k = c.size(); k-- > 1;) r = r * eta + static_cast<double>(k) * c[k];
  return r;
}

// ---------------------------------------------------------------------------

std::vector<cplx> shell_transform(int shell) {
  check_cutoff(shell);
  const int n = shell + 1;
  const cplx i(0.0, 1.0);
  std::vector<cplx> t(static_cast<std::size_t>(n * n), 0.0);
  const double scale = std::pow(2.0, -0.5 * shell);
  for (int ng = 0; ng <= shell; ++ng) {
    const int nd = shell - ng;
    const double norm = scale / std::sqrt(factorial(nd) * factorial(ng));
    // (ax + i ay)^nd (ax - i ay)^ng, ax/ay raising operators.
    for (int j = 0; j <= nd; ++j) {
      for (int k = 0; k <= ng; ++k) {
        const int a = j + k;
        const int b = shell - a;
        const cplx c = binomial(nd, j) * binomial(ng, k) * std::pow(i, nd - j) *
                       std::pow(-i, ng - k);
        t[static_cast<std::size_t>(b * n + ng)] +=
            norm * c * std::sqrt(factorial(a) * factorial(b));
      }
    }
  }
  return t;
}

CartesianCoeffs angular_to_cartesian(const OscillatorState& state, TransformPath path) {
  const int m = state.cutoff();
  std::vector<cplx> d(level_count(m), 0.0);
  if (path == TransformPath::Tabulated) {
    if (m > 4) throw CutoffExceeded("tabulated transform covers m <= 4, got m = " + std::to_string(m));
    for (const auto& e : transform_table())
      if (e.nd + e.ng <= m) d[level_index(e.nx, e.ny)] += e.d * state.coeff(e.nd, e.ng);
    return CartesianCoeffs(m, std::move(d));
  }
  for (int e = 0; e <= m; ++e) {
    const auto t = shell_transform(e);
    const int n = e + 1;
    for (int ny = 0; ny <= e; ++ny) {
      cplx s = 0.0;
      for (int ng = 0; ng <= e; ++ng) s += t[ny * n + ng] * state.coeff(e - ng, ng);
      d[level_index(e - ny, ny)] = s;
    }
  }
  return CartesianCoeffs(m, std::move(d));
}

OscillatorState cartesian_to_angular(const CartesianCoeffs& coeffs) {
  const int m = coeffs.cutoff();
  std::vector<cplx> c(level_count(m), 0.0);
  for (int e = 0; e <= m; ++e) {
    const auto t = shell_transform(e);
    const int n = e + 1;
    for (int ng = 0; ng <= e; ++ng) {
      cplx s = 0.0;
      for (int ny = 0; ny <= e; ++ny) s += std::conj(t[ny * n + ng]) * coeffs.coeff(e - ny, ny);
      c[level_index(e - ng, ng)] = s;
    }
  }
  return OscillatorState::normalized(m, std::move(c));
}

// ---------------------------------------------------------------------------

cplx eval_psi(const OscillatorState& state, const Configuration& q, double t) {
  const double g = kInvSqrtPi * std::exp(-0.5 * (q.qx * q.qx + q.qy * q.qy));
  return g * state.jet(q.qx, q.qy, t).p;
}

cplx eval_psi_angular(const OscillatorState& state, const Configuration& q, double t) {
  const double eta = q.eta(), phi = q.phi();
  cplx s = 0.0;
  for (int nd = 0; nd <= state.cutoff(); ++nd) {
    for (int ng = 0; nd + ng <= state.cutoff(); ++ng) {
      const cplx c = state.coeff(nd, ng);
      if (c == 0.0) continue;
      s += c * std::polar(1.0, -(nd + ng) * t + (nd - ng) * phi) * eval_radial_poly(nd, ng, eta);
    }
  }
  return s * kInvSqrtPi * std::exp(-0.5 * eta * eta);
}

cplx eval_psi_hermite(const CartesianCoeffs& coeffs, const Configuration& q, double t) {
  const int m = coeffs.cutoff();
  const auto ph = shell_phases(m, t);
  cplx s = 0.0;
  for (int nx = 0; nx <= m; ++nx) {
    for (int ny = 0; nx + ny <= m; ++ny) {
      const cplx d = coeffs.coeff(nx, ny);
      if (d == 0.0) continue;
      const double norm = std::sqrt(std::pow(2.0, nx + ny) * factorial(nx) * factorial(ny));
      s += d * ph[nx + ny] * std::hermite(nx, q.qx) * std::hermite(ny, q.qy) / norm;
    }
  }
  return s * kInvSqrtPi * std::exp(-0.5 * (q.qx * q.qx + q.qy * q.qy));
}

std::pair<cplx, cplx> eval_grad_psi(const OscillatorState& state, const Configuration& q,
                                    double t) {
  const double eta = q.eta();
  const double g = kInvSqrtPi * std::exp(-0.5 * eta * eta);
  const PolyJet j = state.jet(q.qx, q.qy, t);
  const double c = eta > 0 ? q.qx / eta : 1.0, s = eta > 0 ? q.qy / eta : 0.0;
  const cplx d_eta = g * (c * j.px + s * j.py - eta * j.p);
  const cplx d_phi = g * (-q.qy * j.px + q.qx * j.py);
  return {d_eta, d_phi};
}

// ---------------------------------------------------------------------------

OscillatorState random_state(int m, std::uint64_t seed) {
  if (m < 1) throw InvalidArgument("random_state needs m >= 1");
  check_cutoff(m);
  Rng rng(seed);
  std::vector<cplx> c(level_count(m));
  for (auto& v : c) {
    const double mag = rng.uniform();
    const double phase = rng.uniform(0.0, 2.0 * kPi);
    v = std::polar(mag, phase);
  }
  return OscillatorState::normalized(m, std::move(c));
}

bool is_fine_tuned(const OscillatorState& state, double tol) {
  std::vector<cplx> nz;
  for (const auto& c : state.coeffs())
    if (std::abs(c) > tol) nz.push_back(c);
  for (std::size_t i = 0; i < nz.size(); ++i) {
    for (std::size_t j = i + 1; j < nz.size(); ++j) {
      if (std::abs(std::abs(nz[i]) - std::abs(nz[j])) < tol) return true;
      const double d = std::remainder(std::arg(nz[i]) - std::arg(nz[j]), kPi);
      if (std::abs(std::abs(d) - 0.5 * kPi) < tol) return true;
    }
  }
  return false;
}

double default_half_width(int m) { return m <= 4 ? 8.0 : 8.0 * std::sqrt((m + 1) / 5.0); }

// ---------------------------------------------------------------------------

nlohmann::json state_to_json(const OscillatorState& state, const std::string& basis) {
  nlohmann::json j;
  j["basis"] = basis;
  j["m"] = state.cutoff();
  auto arr = nlohmann::json::array();
  std::span<const cplx> c = state.coeffs();
  CartesianCoeffs d;
  if (basis == "cartesian") {
    d = angular_to_cartesian(state);
    c = d.coeffs();
  } else if (basis != "angular") {
    throw InvalidArgument("unknown basis '" + basis + "'");
  }
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i] == 0.0) continue;
    const auto [n1, n2] = level_at(i);
    arr.push_back({n1, n2, c[i].real(), c[i].imag()});
  }
  j["coeffs"] = arr;
  return j;
}

OscillatorState state_from_json(const nlohmann::json& j) {
  try {
    const std::string basis = j.value("basis", "angular");
    const int m = j.at("m").get<int>();
    check_cutoff(m);
    std::vector<cplx> c(level_count(m), 0.0);
    for (const auto& e : j.at("coeffs")) {
      if (!e.is_array() || e.size() != 4) throw InvalidArgument("coefficient entries are [n1, n2, re, im]");
      const int n1 = e[0].get<int>(), n2 = e[1].get<int>();
      check_level(n1, n2, m);
      c[level_index(n1, n2)] += cplx(e[2].get<double>(), e[3].get<double>());
    }
    const double n = std::sqrt(norm_sq(c));
    if (!(n > 0.0)) throw InvalidArgument("state has zero norm");
    for (auto& v : c) v /= n;
    if (basis == "angular") return OscillatorState(m, std::move(c));
    if (basis == "cartesian") return cartesian_to_angular(CartesianCoeffs(m, std::move(c)));
    throw InvalidArgument("unknown basis '" + basis + "'");
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed state JSON: ") + e.what());
  }
}

OscillatorState load_state(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open state file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("cannot parse " + path.string() + ": " + e.what());
  }
  return state_from_json(j);
}

void save_state(const OscillatorState& state, const std::filesystem::path& path,
                const std::string& basis) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << state_to_json(state, basis).dump(2) << "\n";
}

}  // namespace pilotwave
