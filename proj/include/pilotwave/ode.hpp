#pragma once

// Embedded Runge-Kutta 4(5) integrator with Cash-Karp coefficients.
//
// The right-hand side is any callable `rhs(t, y) -> State`. An optional
// `guard(t, y)` predicate lets callers refuse a proposed step (used as a
// node guard); a refused step is halved without counting toward the error
// controller.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "pilotwave/errors.hpp"

namespace pilotwave::ode {

template <std::size_t N>
using State = std::array<double, N>;

struct Settings {
  double rtol = 1e-8;
  double atol = 1e-10;
  double max_step = 2.0 * std::numbers::pi / 1000.0;
  double initial_step = 0.0;  // 0: pick from max_step
  int max_halvings = 60;      // consecutive guard refusals before StepUnderflow
  long max_steps = 50'000'000;
};

struct Stats {
  long steps = 0;
  long rejections = 0;
  long guard_refusals = 0;
};

namespace detail {

// Cash-Karp tableau.
inline constexpr double a2 = 1.0 / 5.0, a3 = 3.0 / 10.0, a4 = 3.0 / 5.0, a5 = 1.0, a6 = 7.0 / 8.0;
inline constexpr double b21 = 1.0 / 5.0;
inline constexpr double b31 = 3.0 / 40.0, b32 = 9.0 / 40.0;
inline constexpr double b41 = 3.0 / 10.0, b42 = -9.0 / 10.0, b43 = 6.0 / 5.0;
inline constexpr double b51 = -11.0 / 54.0, b52 = 5.0 / 2.0, b53 = -70.0 / 27.0, b54 = 35.0 / 27.0;
inline constexpr double b61 = 1631.0 / 55296.0, b62 = 175.0 / 512.0, b63 = 575.0 / 13824.0,
                        b64 = 44275.0 / 110592.0, b65 = 253.0 / 4096.0;
inline constexpr double c1 = 37.0 / 378.0, c3 = 250.0 / 621.0, c4 = 125.0 / 594.0,
                        c6 = 512.0 / 1771.0;
inline constexpr double dc1 = c1 - 2825.0 / 27648.0, dc3 = c3 - 18575.0 / 48384.0,
                        dc4 = c4 - 13525.0 / 55296.0, dc5 = -277.0 / 14336.0,
                        dc6 = c6 - 0.25;

template <std::size_t N>
std::string describe(double t, const State<N>& y) {
  std::ostringstream os;
  os.precision(17);
  os << "t=" << t << " y=(";
  for (std::size_t i = 0; i < N; ++i) os << (i ? "," : "") << y[i];
  os << ")";
  return os.str();
}

}  // namespace detail

/// One Cash-Karp trial step. Returns the 5th-order solution; `err` receives
/// the embedded error estimate.
template <std::size_t N, class Rhs>
State<N> cash_karp_step(Rhs& rhs, double t, const State<N>& y, const State<N>& k1, double h,
                        State<N>& err) {
  using namespace detail;
  State<N> tmp{};
  for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * b21 * k1[i];
  const State<N> k2 = rhs(t + a2 * h, tmp);
  for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * (b31 * k1[i] + b32 * k2[i]);
  const State<N> k3 = rhs(t + a3 * h, tmp);
  for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * (b41 * k1[i] + b42 * k2[i] + b43 * k3[i]);
  const State<N> k4 = rhs(t + a4 * h, tmp);
  for (std::size_t i = 0; i < N; ++i)
    tmp[i] = y[i] + h * (b51 * k1[i] + b52 * k2[i] + b53 * k3[i] + b54 * k4[i]);
  const State<N> k5 = rhs(t + a5 * h, tmp);
  for (std::size_t i = 0; i < N; ++i)
    tmp[i] = y[i] + h * (b61 * k1[i] + b62 * k2[i] + b63 * k3[i] + b64 * k4[i] + b65 * k5[i]);
  const State<N> k6 = rhs(t + a6 * h, tmp);
  State<N> out{};
  for (std::size_t i = 0; i < N; ++i) {
    out[i] = y[i] + h * (c1 * k1[i] + c3 * k3[i] + c4 * k4[i] + c6 * k6[i]);
    err[i] = h * (dc1 * k1[i] + dc3 * k3[i] + dc4 * k4[i] + dc5 * k5[i] + dc6 * k6[i]);
  }
  return out;
}

struct NoGuard {
  template <class S>
  bool operator()(double, const S&) const {
    return false;
  }
};

/// Integrate from t0 to t1 (either direction). `observer(t, y)` is called at
/// t0 and after every accepted step. Throws StepUnderflow when the step size
/// collapses or the guard keeps refusing.
template <std::size_t N, class Rhs, class Observer, class Guard = NoGuard>
State<N> integrate(Rhs&& rhs, State<N> y, double t0, double t1, const Settings& s, Stats& stats,
                   Observer&& observer, Guard&& guard = Guard{}) {
  observer(t0, y);
  if (t1 == t0) return y;
  const double dir = t1 > t0 ? 1.0 : -1.0;
  const double span = std::abs(t1 - t0);
  double h = s.initial_step > 0 ? s.initial_step : std::min(s.max_step, span);
  h = std::min({h, s.max_step, span});
  double t = t0;
  int halvings = 0;
  State<N> k1 = rhs(t, y);
  const double tiny = 1e-14 * std::max(1.0, std::abs(t1) + std::abs(t0));

  while (dir * (t1 - t) > tiny) {
    if (stats.steps + stats.rejections > s.max_steps)
      throw StepUnderflow("step budget exhausted at " + detail::describe<N>(t, y));
    const double remaining = std::abs(t1 - t);
    const bool last = h >= remaining;
    const double hs = dir * (last ? remaining : h);
    State<N> err{};
    const State<N> trial = cash_karp_step<N>(rhs, t, y, k1, hs, err);

    double errnorm = 0.0;
    bool finite = true;
    for (std::size_t i = 0; i < N; ++i) {
      if (!std::isfinite(trial[i])) finite = false;
      const double scale = s.atol + s.rtol * std::max(std::abs(y[i]), std::abs(trial[i]));
      errnorm = std::max(errnorm, std::abs(err[i]) / scale);
    }

    if (finite && guard(t + hs, trial)) {
      ++stats.guard_refusals;
      if (++halvings > s.max_halvings)
        throw StepUnderflow("node guard refused " + std::to_string(s.max_halvings) +
                            " halvings near " + detail::describe<N>(t, y));
      h *= 0.5;
      continue;
    }
    if (!finite || errnorm > 1.0) {
      ++stats.rejections;
      const double factor = finite ? std::max(0.1, 0.9 * std::pow(errnorm, -0.25)) : 0.1;
      h = std::abs(hs) * factor;
      if (h < 1e-15 * std::max(1.0, std::abs(t)))
        throw StepUnderflow("step size underflow near " + detail::describe<N>(t, y));
      continue;
    }

    halvings = 0;
    ++stats.steps;
    t = last ? t1 : t + hs;
    y = trial;
    observer(t, y);
    if (!last || dir * (t1 - t) > tiny) k1 = rhs(t, y);
    const double grow = errnorm > 1.89e-4 ? 0.9 * std::pow(errnorm, -0.2) : 5.0;
    h = std::min(std::abs(hs) * std::clamp(grow, 0.2, 5.0), s.max_step);
    if (last) break;
  }
  return y;
}

/// Integrate without recording intermediate states.
template <std::size_t N, class Rhs, class Guard = NoGuard>
State<N> advance(Rhs&& rhs, const State<N>& y0, double t0, double t1, const Settings& s,
                 Stats& stats, Guard&& guard = Guard{}) {
  return integrate<N>(std::forward<Rhs>(rhs), y0, t0, t1, s, stats, [](double, const State<N>&) {},
                      std::forward<Guard>(guard));
}

}  // namespace pilotwave::ode
