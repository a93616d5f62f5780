#include "pilotwave/density.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pilotwave/errors.hpp"
#include "pilotwave/parallel.hpp"
#include "pilotwave/rng.hpp"

namespace pilotwave {

namespace {

double mc_slope(double left, double right) {
  if (left * right <= 0.0) return 0.0;
  const double s = left > 0 ? 1.0 : -1.0;
  return s * std::min({2.0 * std::abs(left), 2.0 * std::abs(right), 0.5 * std::abs(left + right)});
}

}  // namespace

CallbackVelocity::CallbackVelocity(GridSpec grid, Fn fn, unsigned workers)
    : FaceVelocity(grid), fn_(std::move(fn)), workers_(workers) {
  grid.validate();
}

void CallbackVelocity::faces(double t, std::vector<double>& u, std::vector<double>& v) const {
  const auto& g = grid();
  u.resize(static_cast<std::size_t>(g.nx + 1) * g.ny);
  v.resize(static_cast<std::size_t>(g.nx) * (g.ny + 1));
  parallel_for(
      static_cast<std::size_t>(g.ny + 1),
      [&](std::size_t jj) {
        const int j = static_cast<int>(jj);
        if (j < g.ny)
          for (int i = 0; i <= g.nx; ++i)
            u[static_cast<std::size_t>(j) * (g.nx + 1) + i] = fn_(g.xmin + i * g.dx(), g.y(j), t)[0];
        for (int i = 0; i < g.nx; ++i)
          v[static_cast<std::size_t>(j) * g.nx + i] = fn_(g.x(i), g.ymin + j * g.dy(), t)[1];
      },
      workers_);
}

StateVelocity::StateVelocity(const OscillatorState& state, GridSpec grid)
    : FaceVelocity(grid), state_(state) {
  grid.validate();
}

void StateVelocity::faces(double t, std::vector<double>& u, std::vector<double>& v) const {
  const auto& g = grid();
  const int m = state_.cutoff(), n = m + 1;
  const auto K = state_.monomial_coefficients(t);
  u.resize(static_cast<std::size_t>(g.nx + 1) * g.ny);
  v.resize(static_cast<std::size_t>(g.nx) * (g.ny + 1));

  // Row contraction: c[a] = sum_b K_ab y^b and e[a] = sum_b b K_ab y^(b-1),
  // kept as separate real and imaginary parts.
  std::vector<double> cr(n), ci(n), er(n), ei(n);
  const auto contract = [&](double y) {
    for (int a = 0; a < n; ++a) {
      double r0 = 0, i0 = 0, r1 = 0, i1 = 0;
      for (int b = m; b >= 0; --b) {
        const cplx k = K[static_cast<std::size_t>(a * n + b)];
        r0 = r0 * y + k.real();
        i0 = i0 * y + k.imag();
        if (b > 0) {
          r1 = r1 * y + b * k.real();
          i1 = i1 * y + b * k.imag();
        }
      }
      cr[a] = r0, ci[a] = i0, er[a] = r1, ei[a] = i1;
    }
  };
  const auto im_ratio = [](double dr, double di, double pr, double pi) {
    const double nn = pr * pr + pi * pi;
    return nn == 0.0 ? 0.0 : (di * pr - dr * pi) / nn;
  };

  for (int j = 0; j < g.ny; ++j) {
    contract(g.y(j));
    double* row = &u[static_cast<std::size_t>(j) * (g.nx + 1)];
    for (int i = 0; i <= g.nx; ++i) {
      const double x = g.xmin + i * g.dx();
      double pr = 0, pi = 0, dr = 0, di = 0;
      for (int a = m; a >= 0; --a) {
        dr = dr * x + pr;
        di = di * x + pi;
        pr = pr * x + cr[a];
        pi = pi * x + ci[a];
      }
      row[i] = im_ratio(dr, di, pr, pi);
    }
  }
  for (int j = 0; j <= g.ny; ++j) {
    contract(g.ymin + j * g.dy());
    double* row = &v[static_cast<std::size_t>(j) * g.nx];
    for (int i = 0; i < g.nx; ++i) {
      const double x = g.x(i);
      double pr = 0, pi = 0, dr = 0, di = 0;
      for (int a = m; a >= 0; --a) {
        pr = pr * x + cr[a];
        pi = pi * x + ci[a];
        dr = dr * x + er[a];
        di = di * x + ei[a];
      }
      row[i] = im_ratio(dr, di, pr, pi);
    }
  }
}

DensityGrid evolve_fv(const DensityGrid& rho0, const FaceVelocity& field, double t0, double t1,
                      const FVSettings& settings, FVStats* stats) {
  return evolve_fv(std::vector<DensityGrid>{rho0}, field, t0, t1, settings, stats).front();
}

std::vector<DensityGrid> evolve_fv(const std::vector<DensityGrid>& rho0, const FaceVelocity& field,
                                   double t0, double t1, const FVSettings& settings, FVStats* stats) {
  if (rho0.empty()) return {};
  const GridSpec g = field.grid();
  for (const auto& d : rho0) {
    const auto& dg = d.grid;
    if (dg.nx != g.nx || dg.ny != g.ny || dg.xmin != g.xmin || dg.xmax != g.xmax || dg.ymin != g.ymin ||
        dg.ymax != g.ymax || d.rho.size() != g.size())
      throw InvalidArgument("velocity field grid does not match the density grid");
  }
  if (!(settings.cfl > 0) || settings.cfl > 0.9) throw InvalidArgument("cfl must be in (0, 0.9]");
  if (!(t1 >= t0)) throw InvalidArgument("evolve_fv needs t1 >= t0");

  const int nx = g.nx, ny = g.ny;
  const double dx = g.dx(), dy = g.dy(), h = std::min(dx, dy);
  std::vector<double> u, v;

  double dt_target = settings.dt;
  if (dt_target <= 0) {
    field.faces(t0, u, v);
    double vmax = 0.0;
    for (double s : u) vmax = std::max(vmax, std::abs(s));
    for (double s : v) vmax = std::max(vmax, std::abs(s));
    const double factor = settings.cap_factor > 0 ? std::min(settings.cap_factor, settings.cfl) : settings.cfl;
    dt_target = vmax > 0 ? factor * h / vmax : (t1 - t0);
  }
  const long steps = t1 > t0 ? std::max(1L, static_cast<long>(std::ceil((t1 - t0) / dt_target - 1e-9))) : 0;
  const double dt = steps ? (t1 - t0) / steps : 0.0;
  FVStats local;
  FVStats& st = stats ? *stats : local;
  st.dt = dt;
  st.outflux.assign(rho0.size(), 0.0);

  std::vector<DensityGrid> all = rho0;
  // Density with one ring of zero ghost cells: P(i, j) holds cell (i-1, j-1).
  const int W = nx + 2;
  std::vector<double> P(static_cast<std::size_t>(W) * (ny + 2), 0.0);
  const std::size_t nu = static_cast<std::size_t>(nx + 1) * ny, nv = static_cast<std::size_t>(nx) * (ny + 1);
  std::vector<double> sx(g.size()), sy(g.size()), lo(g.size()), hi(g.size()), fd(nu), gd(nv), F(nu), G(nv);
  const double cap = settings.cap_factor > 0 ? settings.cap_factor * h / dt : 0.0;
  const auto U = [&](int i, int j) -> double& { return u[static_cast<std::size_t>(j) * (nx + 1) + i]; };
  const auto V = [&](int i, int j) -> double& { return v[static_cast<std::size_t>(j) * nx + i]; };

  for (long n = 0; n < steps; ++n) {
    const double t = t0 + n * dt;
    field.faces(t + 0.5 * dt, u, v);
    long capped = 0;
    double vmax_x = 0.0, vmax_y = 0.0;
    for (double& s : u) {
      if (cap > 0 && std::abs(s) > cap) {
        s = std::copysign(cap, s);
        ++capped;
      }
      vmax_x = std::max(vmax_x, std::abs(s));
    }
    for (double& s : v) {
      if (cap > 0 && std::abs(s) > cap) {
        s = std::copysign(cap, s);
        ++capped;
      }
      vmax_y = std::max(vmax_y, std::abs(s));
    }
    const double courant = std::max(vmax_x * dt / dx, vmax_y * dt / dy);
    if (courant > settings.cfl)
      throw CFLViolated("face Courant number " + std::to_string(courant) + " exceeds cfl " +
                        std::to_string(settings.cfl));

    for (std::size_t di = 0; di < all.size(); ++di) {
    std::vector<double>& r = all[di].rho;
    for (int j = 0; j < ny; ++j)
      std::copy_n(&r[static_cast<std::size_t>(j) * nx], nx, &P[static_cast<std::size_t>(j + 1) * W + 1]);
    for (int j = 0; j < ny; ++j) {
      const double* up = &P[static_cast<std::size_t>(j + 2) * W + 1];
      const double* mid = &P[static_cast<std::size_t>(j + 1) * W + 1];
      const double* dn = &P[static_cast<std::size_t>(j) * W + 1];
      for (int i = 0; i < nx; ++i) {
        const std::size_t k = static_cast<std::size_t>(j) * nx + i;
        const double c = mid[i];
        sx[k] = mc_slope(c - mid[i - 1], mid[i + 1] - c);
        sy[k] = mc_slope(c - dn[i], up[i] - c);
        const double a = std::min({dn[i - 1], dn[i], dn[i + 1], mid[i - 1], c, mid[i + 1], up[i - 1], up[i], up[i + 1]});
        const double b = std::max({dn[i - 1], dn[i], dn[i + 1], mid[i - 1], c, mid[i + 1], up[i - 1], up[i], up[i + 1]});
        lo[k] = std::max(a, 0.0);
        hi[k] = b;
      }
    }
    for (int j = 0; j < ny; ++j) {
      const double* mid = &P[static_cast<std::size_t>(j + 1) * W + 1];
      for (int i = 0; i <= nx; ++i) {
        const double s = U(i, j);
        fd[static_cast<std::size_t>(j) * (nx + 1) + i] = s > 0 ? s * mid[i - 1] : s * mid[i];
      }
    }
    for (int j = 0; j <= ny; ++j) {
      const double* below = &P[static_cast<std::size_t>(j) * W + 1];
      const double* above = &P[static_cast<std::size_t>(j + 1) * W + 1];
      for (int i = 0; i < nx; ++i) {
        const double s = V(i, j);
        gd[static_cast<std::size_t>(j) * nx + i] = s > 0 ? s * below[i] : s * above[i];
      }
    }

    // Half-step predictors on each face from the upwind cell, including the
    // transverse flux difference across that cell (the corner transport).
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i <= nx; ++i) {
        const double s = U(i, j);
        const int I = s > 0 ? i - 1 : i;
        double val = 0.0;
        if (I >= 0 && I < nx) {
          const std::size_t k = static_cast<std::size_t>(j) * nx + I;
          const double ux = (U(I + 1, j) - U(I, j)) / dx;
          const double gt = (gd[k + nx] - gd[k]) / dy;
          const double sign = s > 0 ? 1.0 : -1.0;
          val = r[k] + 0.5 * sign * (1.0 - std::abs(s) * dt / dx) * sx[k] - 0.5 * dt * (r[k] * ux + gt);
          val = std::clamp(val, lo[k], hi[k]);
        }
        F[static_cast<std::size_t>(j) * (nx + 1) + i] = s * val;
      }
    for (int j = 0; j <= ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const double s = V(i, j);
        const int J = s > 0 ? j - 1 : j;
        double val = 0.0;
        if (J >= 0 && J < ny) {
          const std::size_t k = static_cast<std::size_t>(J) * nx + i;
          const std::size_t f = static_cast<std::size_t>(J) * (nx + 1) + i;
          const double vy = (V(i, J + 1) - V(i, J)) / dy;
          const double ft = (fd[f + 1] - fd[f]) / dx;
          const double sign = s > 0 ? 1.0 : -1.0;
          val = r[k] + 0.5 * sign * (1.0 - std::abs(s) * dt / dy) * sy[k] - 0.5 * dt * (r[k] * vy + ft);
          val = std::clamp(val, lo[k], hi[k]);
        }
        G[static_cast<std::size_t>(j) * nx + i] = s * val;
      }

    double out = 0.0;
    for (int j = 0; j < ny; ++j)
      out += (F[static_cast<std::size_t>(j) * (nx + 1) + nx] - F[static_cast<std::size_t>(j) * (nx + 1)]) * dy;
    for (int i = 0; i < nx; ++i)
      out += (G[static_cast<std::size_t>(ny) * nx + i] - G[static_cast<std::size_t>(i)]) * dx;
    st.outflux[di] += out * dt;

    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const std::size_t k = static_cast<std::size_t>(j) * nx + i;
        const std::size_t fx = static_cast<std::size_t>(j) * (nx + 1) + i;
        double val = r[k] - dt / dx * (F[fx + 1] - F[fx]) - dt / dy * (G[k + nx] - G[k]);
        if (val < 0 && val > -1e-12) val = 0.0;
        r[k] = val;
      }
    }

    ++st.steps;
    st.capped_faces += capped;
    st.max_capped_fraction = std::max(st.max_capped_fraction, static_cast<double>(capped) / (nu + nv));
    st.max_courant = std::max(st.max_courant, courant);
  }
  st.boundary_outflux = st.outflux.front();
  for (auto& d : all) d.t = t1;
  return all;
}

DensityGrid born_density(const OscillatorState& state, double t, const GridSpec& grid) {
  DensityGrid d(grid, t);
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) d.at(i, j) = std::norm(eval_psi(state, {grid.x(i), grid.y(j)}, t));
  return d;
}

BacktrackResult evolve_backtrack(const std::function<double(double, double)>& f0,
                                 const OscillatorState& state, double t, const GridSpec& grid,
                                 const IntegratorSettings& settings, unsigned workers) {
  grid.validate();
  const auto vals = parallel_map(
      grid.size(),
      [&](std::size_t k) -> double {
        const int i = static_cast<int>(k % grid.nx), j = static_cast<int>(k / grid.nx);
        const Configuration x{grid.x(i), grid.y(j)};
        const double psi2 = std::norm(eval_psi(state, x, t));
        try {
          const auto x0 = advance(state, x, t, 0.0, settings).q;
          return f0(x0.qx, x0.qy) * psi2;
        } catch (const StepUnderflow&) {
          return -1.0;
        } catch (const AtNode&) {
          return -1.0;
        }
      },
      workers);
  BacktrackResult r{DensityGrid(grid, t), 0};
  for (std::size_t k = 0; k < vals.size(); ++k) {
    if (vals[k] < 0) {
      ++r.masked;
    } else {
      r.rho.rho[k] = vals[k];
    }
  }
  if (r.masked > static_cast<long>(0.01 * static_cast<double>(grid.size())))
    throw BuildFailed("backtracking masked " + std::to_string(r.masked) + " of " +
                      std::to_string(grid.size()) + " points");
  return r;
}

DensityGrid initial_density(const NonequilibriumSpec& spec, const GridSpec& grid) {
  if (spec.kind == NonequilibriumSpec::Kind::CustomGrid) {
    const auto& c = spec.custom.grid;
    if (c.nx != grid.nx || c.ny != grid.ny || c.xmin != grid.xmin || c.xmax != grid.xmax ||
        c.ymin != grid.ymin || c.ymax != grid.ymax)
      throw InvalidArgument("custom initial density is on a different grid");
    return spec.custom;
  }
  if (!(spec.wx > 0) || !(spec.wy > 0) || !std::isfinite(spec.wx) || !std::isfinite(spec.wy))
    throw InvalidArgument("widening factors must be finite and > 0");
  DensityGrid d(grid);
  const double sx2 = spec.wx * spec.wx / 2, sy2 = spec.wy * spec.wy / 2;
  const double norm = 1.0 / (2 * std::numbers::pi * std::sqrt(sx2 * sy2));
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      const double x = grid.x(i), y = grid.y(j);
      d.at(i, j) = norm * std::exp(-x * x / (2 * sx2) - y * y / (2 * sy2));
    }
  return d;
}

OscillatorState nine_mode_state(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<cplx> d(static_cast<std::size_t>(level_count(4)), 0.0);
  for (int ny = 0; ny <= 2; ++ny)
    for (int nx = 0; nx <= 2; ++nx)
      d[static_cast<std::size_t>(level_index(nx, ny))] =
          std::polar(1.0 / 3.0, rng.uniform(0.0, 2 * std::numbers::pi));
  return cartesian_to_angular(CartesianCoeffs(4, std::move(d)));
}

double reference_speed(const OscillatorState& state, const GridSpec& grid, int samples) {
  const StateVelocity field(state, grid);
  std::vector<double> u, v, speeds;
  const double period = 2 * std::numbers::pi;
  for (int s = 0; s < samples; ++s) {
    const double t = period * s / samples;
    field.faces(t, u, v);
    const auto psi2 = born_density(state, t, grid);
    const double peak = *std::max_element(psi2.rho.begin(), psi2.rho.end());
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i) {
        if (psi2.at(i, j) < 1e-3 * peak) continue;
        speeds.push_back(std::abs(u[static_cast<std::size_t>(j) * (grid.nx + 1) + i]));
        speeds.push_back(std::abs(v[static_cast<std::size_t>(j) * grid.nx + i]));
      }
  }
  if (speeds.empty()) return 0.0;
  const auto k = static_cast<std::size_t>(0.99 * static_cast<double>(speeds.size() - 1));
  std::nth_element(speeds.begin(), speeds.begin() + static_cast<std::ptrdiff_t>(k), speeds.end());
  return speeds[k];
}

RelaxationResult relaxation_run(const OscillatorState& state, const NonequilibriumSpec& noneq,
                                int periods, const RelaxationSettings& settings) {
  if (periods < 0) throw InvalidArgument("periods must be >= 0");
  const auto& g = settings.grid;
  settings.coarse.validate(g);
  FVSettings fv = settings.fv;
  if (fv.dt <= 0) {
    const double vref = reference_speed(state, g, settings.speed_samples);
    const double h = std::min(g.dx(), g.dy());
    const double factor = fv.cap_factor > 0 ? fv.cap_factor : fv.cfl;
    fv.dt = vref > 0 ? factor * h / vref : 2 * std::numbers::pi / 100;
  }
  const StateVelocity field(state, g);
  const double period = 2 * std::numbers::pi;

  RelaxationResult res;
  std::vector<DensityGrid> rhos{initial_density(noneq, g)};
  if (settings.equilibrium_control) rhos.push_back(born_density(state, 0.0, g));
  const auto record = [&](double t) {
    res.times.push_back(t);
    // The Born density is periodic with the wave function.
    const auto psi2 = born_density(state, t, g);
    res.hbar.push_back(coarse_grained_H(rhos[0], psi2, settings.coarse));
    if (settings.equilibrium_control) res.control_hbar.push_back(coarse_grained_H(rhos[1], psi2, settings.coarse));
    if (settings.keep_frames) res.frames.push_back(rhos[0]);
  };
  record(0.0);
  for (int p = 0; p < periods; ++p) {
    FVStats st;
    rhos = evolve_fv(rhos, field, p * period, (p + 1) * period, fv, &st);
    res.stats.steps += st.steps;
    res.stats.dt = st.dt;
    res.stats.capped_faces += st.capped_faces;
    res.stats.max_capped_fraction = std::max(res.stats.max_capped_fraction, st.max_capped_fraction);
    res.stats.max_courant = std::max(res.stats.max_courant, st.max_courant);
    res.stats.boundary_outflux += st.boundary_outflux;
    record((p + 1) * period);
  }
  return res;
}

Vec2 classical_phase_velocity(double q, double p) {
  return {p, -(4 * q * q * q - 3 * q * q - 2 * q - 1)};
}

}  // namespace pilotwave
