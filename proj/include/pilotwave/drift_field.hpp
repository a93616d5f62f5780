#pragma once

// One-period displacement ("drift") fields on a polar grid far from the bulk
// of |psi|^2, their classification by the structure of the angular drift, and
// long-time radial transport.

#include <cstdint>
#include <string>
#include <vector>

#include "pilotwave/guidance.hpp"
#include "pilotwave/oscillator.hpp"

namespace pilotwave {

struct PolarGrid {
  double eta_min = 4.0;
  double eta_max = 20.0;
  int n_eta = 100;
  int n_phi = 100;

  /// eta_i spans [eta_min, eta_max] inclusive; phi_j = 2*pi*j/n_phi.
  double eta(int i) const;
  double phi(int j) const;
  std::size_t size() const { return static_cast<std::size_t>(n_eta) * n_phi; }
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(i) * n_phi + j; }
  void validate() const;
};

enum class DriftType { Type0, Type1, Type2, Unclassified };

std::string to_string(DriftType t);

struct DriftField {
  PolarGrid grid;
  std::vector<double> d_eta;  // final - initial eta over one period
  std::vector<double> d_phi;  // continuous (unwrapped) angle change
  std::vector<std::uint8_t> masked;

  double masked_fraction() const;
};

struct DriftSettings {
  /// Step cap 2*pi/100: far-field trajectories are smooth and rtol governs
  /// accuracy, so the tighter trajectory default only costs time here.
  IntegratorSettings integrator = [] {
    IntegratorSettings s;
    s.max_step = 2.0 * 3.14159265358979323846 / 100;
    return s;
  }();
  double period = 2.0 * 3.14159265358979323846;
  unsigned workers = 0;
  /// Masked-cell fraction above which the build throws BuildFailed.
  double max_masked = 0.01;
};

/// Integrates every grid point through one period starting at T = 0. Cells
/// whose integration fails are masked.
DriftField build_drift_field(const OscillatorState& state, const PolarGrid& grid = {},
                             const DriftSettings& settings = {});

struct Axis {
  double phi;
  bool attractive;
};

struct DriftClassification {
  DriftType type = DriftType::Unclassified;
  int sign_changes = 0;
  std::vector<double> ring_average;  // a(phi_j): mean d_phi over unmasked eta
  std::vector<Axis> axes;
  /// +1 / -1 when every unmasked cell drifts anticlockwise / clockwise, else 0.
  int uniform_sign = 0;
};

/// Counts sign changes of the ring-averaged angular drift around the circle,
/// ignoring values with |a| <= threshold. Each axis is a line through the
/// centre and crosses the circle twice: 0 changes is type 0, 4 is type 1
/// (one attractive and one repulsive axis), 8 is type 2.
DriftClassification classify(const DriftField& field, double threshold = 1e-6);

struct RadialBalance {
  double inward = 0.0;
  double outward = 0.0;
};

/// Area-weighted fractions of unmasked cells with d_eta < 0 and d_eta > 0.
RadialBalance radial_balance(const DriftField& field);

struct LongDriftResult {
  std::vector<double> eta_initial;
  std::vector<double> eta_final;  // NaN for failed trajectories
  std::vector<double> phi_initial;
  int failed = 0;

  /// Median of eta_final - eta_initial over successful trajectories.
  double median_shift() const;
};

/// Places n points uniformly in eta in (eta_lo, eta_hi) with uniform angle
/// and evolves each for `periods` wave-function periods.
LongDriftResult long_drift(const OscillatorState& state, int n_points, double eta_lo, double eta_hi,
                           int periods, std::uint64_t seed, const DriftSettings& settings = {});

}  // namespace pilotwave
