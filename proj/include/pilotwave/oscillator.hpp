#pragma once

// States of the two-dimensional isotropic harmonic oscillator in rescaled
// units (Qx, Qy, T). A state is stored in the angular basis chi_{nd,ng},
// simultaneous eigenstates of energy (nd+ng) and angular momentum (nd-ng):
//
//   psi = sum C_{nd,ng} exp[-i(nd+ng)T + i(nd-ng)phi] f_{nd,ng}(eta) chi_00(eta)
//
// with chi_00 = pi^{-1/2} exp(-eta^2/2). The zero-point energy is dropped, so
// every state is 2*pi periodic in T.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace pilotwave {

using cplx = std::complex<double>;

/// A point of configuration space, Cartesian with polar accessors.
struct Configuration {
  double qx = 0.0;
  double qy = 0.0;

  double eta() const;
  /// Angle from the Qx axis in [-pi, pi).
  double phi() const;
  static Configuration polar(double eta, double phi);
};

/// Levels (n1, n2) are stored shell by shell: shell E = n1 + n2 starts at
/// E(E+1)/2 and is ordered by increasing n2.
constexpr std::size_t level_index(int n1, int n2) {
  const auto e = static_cast<std::size_t>(n1 + n2);
  return e * (e + 1) / 2 + static_cast<std::size_t>(n2);
}
constexpr std::size_t level_count(int m) {
  const auto n = static_cast<std::size_t>(m + 1);
  return n * (n + 1) / 2;
}
/// Inverse of level_index.
std::pair<int, int> level_at(std::size_t index);

/// Largest cutoff for which basis polynomials are generated.
inline constexpr int kMaxCutoff = 16;

/// Expansion coefficients D_{nx,ny} in the Cartesian (Hermite) basis.
class CartesianCoeffs {
 public:
  CartesianCoeffs() = default;
  CartesianCoeffs(int m, std::vector<cplx> coeffs);

  int cutoff() const { return m_; }
  cplx coeff(int nx, int ny) const;
  std::span<const cplx> coeffs() const { return d_; }
  double norm_squared() const;

 private:
  int m_ = 0;
  std::vector<cplx> d_;
};

/// Value and first derivatives of the Gaussian-stripped wave function
/// P = psi / chi_00 at one point. `bound` is sum |term|, the size P would
/// have without cancellation; |p| / bound measures closeness to a node.
struct PolyJet {
  cplx p;
  cplx px;
  cplx py;
  cplx pt;
  double bound;
};

class OscillatorState {
 public:
  /// Coefficients in level order; throws InvalidArgument unless the norm is
  /// 1 within 1e-12 and the vector has level_count(m) entries.
  OscillatorState(int m, std::vector<cplx> coeffs);

  /// Rescales `coeffs` to unit norm first.
  static OscillatorState normalized(int m, std::vector<cplx> coeffs);
  /// Sparse construction: {(nd, ng, C), ...}; cutoff inferred, normalized.
  static OscillatorState from_levels(const std::vector<std::tuple<int, int, cplx>>& levels);

  int cutoff() const { return m_; }
  cplx coeff(int nd, int ng) const;
  std::span<const cplx> coeffs() const { return c_; }
  double norm_squared() const;

  OscillatorState with_global_phase(double alpha) const;
  /// Reflection phi -> -phi (swaps nd and ng).
  OscillatorState mirrored() const;
  OscillatorState conjugated() const;
  /// Drops empty top shells so that the top shell is populated.
  OscillatorState reduced() const;

  /// P and its first derivatives at (x, y, T) with P = psi / chi_00.
  PolyJet jet(double x, double y, double t) const;

  /// K with P(x, y, T) = sum_{a,b} K[a * (m + 1) + b] x^a y^b.
  std::vector<cplx> monomial_coefficients(double t) const;

 private:
  struct Term {
    int shell;
    int ax;  // power of Qx
    int ay;  // power of Qy
    cplx c;  // C_{nd,ng} times the monomial coefficient
  };
  void build_terms();

  int m_ = 0;
  std::vector<cplx> c_;
  std::vector<Term> terms_;
};

/// Radial polynomial f_{nd,ng}(eta).
double eval_radial_poly(int nd, int ng, double eta);
/// d f_{nd,ng} / d eta.
double eval_radial_poly_derivative(int nd, int ng, double eta);
/// Coefficients of f_{nd,ng} in powers of eta (index = power).
std::vector<double> radial_poly_coefficients(int nd, int ng);

enum class TransformPath {
  Generated,  // expansion of the raising operators, any m <= kMaxCutoff
  Tabulated,  // closed-form table, m <= 4
};

CartesianCoeffs angular_to_cartesian(const OscillatorState& state,
                                     TransformPath path = TransformPath::Generated);
OscillatorState cartesian_to_angular(const CartesianCoeffs& coeffs);

/// Matrix mapping shell-E angular coefficients (ordered by ng) to Cartesian
/// coefficients (ordered by ny). Row-major (E+1) x (E+1).
std::vector<cplx> shell_transform(int shell);

/// psi at a configuration and rescaled time.
cplx eval_psi(const OscillatorState& state, const Configuration& q, double t);
/// Same value summed directly over the angular basis with f_{nd,ng}.
cplx eval_psi_angular(const OscillatorState& state, const Configuration& q, double t);
/// Same value from Cartesian coefficients and Hermite polynomials.
cplx eval_psi_hermite(const CartesianCoeffs& coeffs, const Configuration& q, double t);

/// (d psi / d eta, d psi / d phi).
std::pair<cplx, cplx> eval_grad_psi(const OscillatorState& state, const Configuration& q,
                                    double t);

/// Magnitudes uniform on [0,1] normalized to unit norm, phases uniform on
/// [0, 2pi), for every level with nd+ng <= m.
OscillatorState random_state(int m, std::uint64_t seed);

/// Flags measure-zero coincidences among nonzero coefficients: equal
/// magnitudes or phases differing by exactly pi/2 (within tol).
bool is_fine_tuned(const OscillatorState& state, double tol = 1e-9);

/// Half-width L of the default square domain [-L, L]^2.
double default_half_width(int m);

// JSON state files: {"basis": "angular"|"cartesian", "m": m,
//                    "coeffs": [[n1, n2, re, im], ...]}
nlohmann::json state_to_json(const OscillatorState& state, const std::string& basis = "angular");
OscillatorState state_from_json(const nlohmann::json& j);
OscillatorState load_state(const std::filesystem::path& path);
void save_state(const OscillatorState& state, const std::filesystem::path& path,
                const std::string& basis = "angular");

}  // namespace pilotwave
