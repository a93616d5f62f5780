#include "pilotwave/drift_field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "pilotwave/errors.hpp"
#include "pilotwave/parallel.hpp"
#include "pilotwave/rng.hpp"

namespace pilotwave {

double PolarGrid::eta(int i) const {
  return n_eta == 1 ? eta_min : eta_min + (eta_max - eta_min) * i / (n_eta - 1);
}

double PolarGrid::phi(int j) const { return 2.0 * std::numbers::pi * j / n_phi; }

void PolarGrid::validate() const {
  if (n_eta < 1 || n_phi < 4) throw InvalidArgument("polar grid needs n_eta >= 1 and n_phi >= 4");
  if (!(eta_min > 0) || eta_max < eta_min) throw InvalidArgument("polar grid needs 0 < eta_min <= eta_max");
}

std::string to_string(DriftType t) {
  switch (t) {
    case DriftType::Type0: return "type0";
    case DriftType::Type1: return "type1";
    case DriftType::Type2: return "type2";
    case DriftType::Unclassified: return "unclassified";
  }
  return "unclassified";
}

double DriftField::masked_fraction() const {
  if (masked.empty()) return 0.0;
  return std::count(masked.begin(), masked.end(), 1) / static_cast<double>(masked.size());
}

DriftField build_drift_field(const OscillatorState& state, const PolarGrid& grid,
                             const DriftSettings& settings) {
  grid.validate();
  struct Cell {
    double d_eta, d_phi;
    bool ok;
  };
  const auto cells = parallel_map(
      grid.size(),
      [&](std::size_t k) -> Cell {
        const int i = static_cast<int>(k / grid.n_phi), j = static_cast<int>(k % grid.n_phi);
        const double eta = grid.eta(i);
        const auto start = Configuration::polar(eta, grid.phi(j));
        try {
          const auto ep = advance(state, start, 0.0, settings.period, settings.integrator);
          return {ep.q.eta() - eta, ep.unwrapped_dphi, true};
        } catch (const StepUnderflow&) {
          return {0.0, 0.0, false};
        } catch (const AtNode&) {
          return {0.0, 0.0, false};
        }
      },
      settings.workers);

  DriftField f;
  f.grid = grid;
  f.d_eta.resize(grid.size());
  f.d_phi.resize(grid.size());
  f.masked.resize(grid.size());
  for (std::size_t k = 0; k < cells.size(); ++k) {
    f.d_eta[k] = cells[k].d_eta;
    f.d_phi[k] = cells[k].d_phi;
    f.masked[k] = cells[k].ok ? 0 : 1;
  }
  if (f.masked_fraction() > settings.max_masked)
    throw BuildFailed("drift field masked fraction " + std::to_string(f.masked_fraction()) +
                      " exceeds " + std::to_string(settings.max_masked));
  return f;
}

DriftClassification classify(const DriftField& field, double threshold) {
  const auto& g = field.grid;
  DriftClassification c;
  c.ring_average.assign(static_cast<std::size_t>(g.n_phi), 0.0);
  for (int j = 0; j < g.n_phi; ++j) {
    double sum = 0.0;
    int n = 0;
    for (int i = 0; i < g.n_eta; ++i) {
      if (field.masked[g.index(i, j)]) continue;
      sum += field.d_phi[g.index(i, j)];
      ++n;
    }
    c.ring_average[j] = n ? sum / n : 0.0;
  }

  // Signed samples, skipping near-zero values.
  std::vector<int> idx;
  for (int j = 0; j < g.n_phi; ++j)
    if (std::abs(c.ring_average[j]) > threshold) idx.push_back(j);
  const double dphi = 2.0 * std::numbers::pi / g.n_phi;
  for (std::size_t k = 0; k < idx.size() && idx.size() > 1; ++k) {
    const int a = idx[k], b = idx[(k + 1) % idx.size()];
    const double va = c.ring_average[a], vb = c.ring_average[b];
    if ((va > 0) == (vb > 0)) continue;
    ++c.sign_changes;
    int gap = b - a;
    if (gap <= 0) gap += g.n_phi;
    const double frac = va / (va - vb);
    double phi = (a + frac * gap) * dphi;
    phi = std::fmod(phi, 2.0 * std::numbers::pi);
    // Decreasing a(phi) through zero draws the flow in from both sides.
    c.axes.push_back({phi, va > 0});
  }
  switch (c.sign_changes) {
    case 0: c.type = DriftType::Type0; break;
    case 4: c.type = DriftType::Type1; break;
    case 8: c.type = DriftType::Type2; break;
    default: c.type = DriftType::Unclassified;
  }

  bool pos = false, neg = false;
  for (std::size_t k = 0; k < field.d_phi.size(); ++k) {
    if (field.masked[k]) continue;
    if (field.d_phi[k] > 0) pos = true;
    if (field.d_phi[k] < 0) neg = true;
  }
  c.uniform_sign = pos && !neg ? 1 : (neg && !pos ? -1 : 0);
  return c;
}

RadialBalance radial_balance(const DriftField& field) {
  const auto& g = field.grid;
  double in = 0.0, out = 0.0, total = 0.0;
  for (int i = 0; i < g.n_eta; ++i)
    for (int j = 0; j < g.n_phi; ++j) {
      const auto k = g.index(i, j);
      if (field.masked[k]) continue;
      const double w = g.eta(i);
      total += w;
      if (field.d_eta[k] < -1e-12) in += w;
      if (field.d_eta[k] > 1e-12) out += w;
    }
  if (total == 0.0) return {};
  return {in / total, out / total};
}

double LongDriftResult::median_shift() const {
  std::vector<double> d;
  for (std::size_t k = 0; k < eta_final.size(); ++k)
    if (std::isfinite(eta_final[k])) d.push_back(eta_final[k] - eta_initial[k]);
  if (d.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  if (d.size() % 2) return *mid;
  const double hi = *mid;
  return 0.5 * (hi + *std::max_element(d.begin(), mid));
}

LongDriftResult long_drift(const OscillatorState& state, int n_points, double eta_lo, double eta_hi,
                           int periods, std::uint64_t seed, const DriftSettings& settings) {
  if (n_points < 0 || periods < 0) throw InvalidArgument("n_points and periods must be >= 0");
  if (!(eta_lo > 0) || !(eta_hi > eta_lo)) throw InvalidArgument("need 0 < eta_lo < eta_hi");
  LongDriftResult r;
  Rng rng(seed);
  for (int k = 0; k < n_points; ++k) {
    r.eta_initial.push_back(rng.uniform(eta_lo, eta_hi));
    r.phi_initial.push_back(rng.uniform(0.0, 2.0 * std::numbers::pi));
  }
  r.eta_final = parallel_map(
      static_cast<std::size_t>(n_points),
      [&](std::size_t k) {
        Configuration q = Configuration::polar(r.eta_initial[k], r.phi_initial[k]);
        try {
          for (int p = 0; p < periods; ++p)
            q = advance(state, q, 0.0, settings.period, settings.integrator).q;
        } catch (const StepUnderflow&) {
          return std::numeric_limits<double>::quiet_NaN();
        } catch (const AtNode&) {
          return std::numeric_limits<double>::quiet_NaN();
        }
        return q.eta();
      },
      settings.workers);
  for (double e : r.eta_final)
    if (!std::isfinite(e)) ++r.failed;
  return r;
}

}  // namespace pilotwave
