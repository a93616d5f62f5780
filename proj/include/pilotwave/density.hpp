#pragma once

// Evolution of probability densities under guidance velocity fields: a
// finite-volume corner-transport-upwind scheme with an MC limiter and the
// backtracking method along trajectories.

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "pilotwave/entropy.hpp"
#include "pilotwave/grid.hpp"
#include "pilotwave/guidance.hpp"
#include "pilotwave/oscillator.hpp"

namespace pilotwave {

/// Normal velocities on the faces of a grid. x-faces: (nx + 1) * ny values,
/// index j * (nx + 1) + i, face i at x = xmin + i * dx. y-faces: nx * (ny + 1)
/// values, index j * nx + i, face j at y = ymin + j * dy.
class FaceVelocity {
 public:
  explicit FaceVelocity(GridSpec grid) : grid_(grid) {}
  virtual ~FaceVelocity() = default;

  const GridSpec& grid() const { return grid_; }
  virtual void faces(double t, std::vector<double>& u, std::vector<double>& v) const = 0;

 private:
  GridSpec grid_;
};

/// Any velocity law given pointwise.
class CallbackVelocity : public FaceVelocity {
 public:
  using Fn = std::function<Vec2(double x, double y, double t)>;
  CallbackVelocity(GridSpec grid, Fn fn, unsigned workers = 0);
  void faces(double t, std::vector<double>& u, std::vector<double>& v) const override;

 private:
  Fn fn_;
  unsigned workers_;
};

/// Guidance velocity of an oscillator state. P is a polynomial in x and y,
/// so each face row contracts the y powers once and evaluates a short
/// polynomial in x per face. Faces where psi vanishes exactly get 0.
class StateVelocity : public FaceVelocity {
 public:
  StateVelocity(const OscillatorState& state, GridSpec grid);
  void faces(double t, std::vector<double>& u, std::vector<double>& v) const override;

 private:
  OscillatorState state_;
};

struct FVSettings {
  /// Time step; 0 picks min(cap_factor, cfl) * min(dx, dy) / max face speed
  /// at t0, so the cap does not bind at t0.
  double dt = 0.0;
  double cfl = 0.5;
  /// Face speeds are clipped to cap_factor * min(dx, dy) / dt; <= 0 disables.
  double cap_factor = 0.1;
};

struct FVStats {
  long steps = 0;
  double dt = 0.0;
  long capped_faces = 0;
  double max_capped_fraction = 0.0;  // worst single step
  double max_courant = 0.0;          // after capping
  double boundary_outflux = 0.0;     // mass that left through the edges
  std::vector<double> outflux;       // the same, per density when several are evolved
};

/// Conservative CTU update with MC-limited slopes from t0 to t1 in equal
/// steps no longer than settings.dt. Mass changes only through the
/// boundary (outflow; nothing flows in). Throws CFLViolated when a capped
/// face Courant number exceeds settings.cfl.
DensityGrid evolve_fv(const DensityGrid& rho0, const FaceVelocity& field, double t0, double t1,
                      const FVSettings& settings = {}, FVStats* stats = nullptr);

/// Several densities through the same velocity field; faces are evaluated
/// once per step.
std::vector<DensityGrid> evolve_fv(const std::vector<DensityGrid>& rho0, const FaceVelocity& field,
                                   double t0, double t1, const FVSettings& settings = {},
                                   FVStats* stats = nullptr);

/// |psi(x, t)|^2 sampled at cell centres.
DensityGrid born_density(const OscillatorState& state, double t, const GridSpec& grid);

struct BacktrackResult {
  DensityGrid rho;
  long masked = 0;
};

/// rho(x, t) = f0(x0) |psi(x, t)|^2 where x0 is x integrated back to T = 0.
/// Masked points (integration failures) get rho = 0; more than 1% masked
/// throws BuildFailed.
BacktrackResult evolve_backtrack(const std::function<double(double, double)>& f0,
                                 const OscillatorState& state, double t, const GridSpec& grid,
                                 const IntegratorSettings& settings = {}, unsigned workers = 0);

/// Nonequilibrium initial conditions: Gaussian `widened` by (wx, wy) relative
/// to the ground-state width 1/sqrt(2), or an explicit grid.
struct NonequilibriumSpec {
  enum class Kind { Widened, CustomGrid } kind = Kind::Widened;
  double wx = 1.0;
  double wy = 1.0;
  DensityGrid custom;

  static NonequilibriumSpec widened(double w) { return {Kind::Widened, w, w, {}}; }
  static NonequilibriumSpec from_grid(DensityGrid g) { return {Kind::CustomGrid, 1.0, 1.0, std::move(g)}; }
};

DensityGrid initial_density(const NonequilibriumSpec& spec, const GridSpec& grid);

/// Equal-weight superposition of the nine Cartesian modes nx, ny in {0,1,2}
/// with uniformly random phases.
OscillatorState nine_mode_state(std::uint64_t seed);

struct RelaxationSettings {
  GridSpec grid = GridSpec::square(8.0, 256);
  CoarseGrain coarse;
  FVSettings fv;
  /// Used when fv.dt == 0: dt = cap_factor * h / v99, with v99 the 99th
  /// percentile face speed where |psi|^2 exceeds 1e-3 of its peak.
  int speed_samples = 8;
  bool keep_frames = false;
  /// Also evolve rho = |psi(0)|^2 through the same steps.
  bool equilibrium_control = false;
};

struct RelaxationResult {
  std::vector<double> times;  // one sample per period, starting at 0
  std::vector<double> hbar;
  std::vector<double> control_hbar;  // empty unless requested
  std::vector<DensityGrid> frames;
  FVStats stats;
};

RelaxationResult relaxation_run(const OscillatorState& state, const NonequilibriumSpec& noneq,
                                int periods, const RelaxationSettings& settings = {});

/// Reference speed used to pick the relaxation time step.
double reference_speed(const OscillatorState& state, const GridSpec& grid, int samples = 8);

/// Hamiltonian flow (q', p') = (p, -V'(q)) for V = q^4 - q^3 - q^2 - q.
Vec2 classical_phase_velocity(double q, double p);

}  // namespace pilotwave
