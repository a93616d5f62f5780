#pragma once

// Nodes of oscillator states and their quantized vorticity.
//
// The total vorticity of a state is fixed by its top energy shell: with
// g(z) = sum_k C_{k,m-k} z^k / sqrt(k!(m-k)!), the state carries
// 2*pi*(2*#roots inside the unit disk - m).

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pilotwave/grid.hpp"
#include "pilotwave/oscillator.hpp"

namespace pilotwave {

enum class VorticityCategory { Maximal, Zero, Intermediate, Indeterminate };

std::string to_string(VorticityCategory c);
VorticityCategory category_from_string(const std::string& s);

struct VorticityClass {
  int winding = 0;  // total vorticity in units of 2*pi
  VorticityCategory category = VorticityCategory::Indeterminate;

  double total() const;
};

/// Roots of the top-shell polynomial g(z), with multiplicity. Coefficients
/// that vanish at the high end lower the degree (roots at infinity).
std::vector<cplx> top_shell_roots(const OscillatorState& state);

/// Total vorticity from the root count. Throws InvalidArgument if the top
/// shell is empty and Indeterminate if a root lies within 1e-9 of |z| = 1.
VorticityClass total_vorticity(const OscillatorState& state);

/// Winding number of psi around the circle of radius `eta` about `center`.
/// Starts from `samples` points and doubles (up to 2^20) while any phase step
/// exceeds pi/2. Throws Indeterminate when unresolved or psi vanishes on the loop.
int winding_number(const OscillatorState& state, double t, double eta,
                   const Configuration& center = {}, int samples = 4096);

struct Node {
  Configuration q;
  int charge = 0;  // vorticity in units of 2*pi
  double t = 0.0;
};

enum class NodeEventKind { Creation, Annihilation, Entered, Exited };

std::string to_string(NodeEventKind k);

struct NodeEvent {
  double t;
  Configuration q;
  NodeEventKind kind;
  int charge;
};

struct NodeSet {
  std::vector<Node> nodes;
  std::vector<NodeEvent> events;

  int total_charge() const;
};

/// Search box used when none is given: the state's default square domain at
/// 256 x 256 cells.
GridSpec default_node_box(const OscillatorState& state);

/// Nodes inside `box` at time t. Cells with nonzero discrete winding seed a
/// Newton iteration on (Re psi, Im psi); roots closer than 1e-6 are merged.
/// Each charge comes from a winding integral of radius 1e-3.
NodeSet find_nodes(const OscillatorState& state, double t, const std::optional<GridSpec>& box = {});

struct NodeTrack {
  std::vector<double> times;
  std::vector<NodeSet> snapshots;
  std::vector<NodeEvent> events;
};

/// Follows nodes from t0 to t1 in steps of dt by nearest-neighbour matching of
/// same-charge nodes between scans. Unmatched nodes near the box edge are
/// logged as entering/leaving; the rest as pair creations/annihilations.
/// Throws TrackingLost when the interior events of a step carry net charge.
NodeTrack track_nodes(const OscillatorState& state, double t0, double t1, double dt,
                      const std::optional<GridSpec>& box = {});

struct ClassifiedStates {
  std::vector<OscillatorState> states;
  std::vector<std::uint64_t> seeds;  // sub-seed that produced each state
  long attempts = 0;
  long fine_tuned = 0;
  long indeterminate = 0;

  double acceptance() const { return attempts ? double(states.size()) / attempts : 0.0; }
};

/// Rejection-samples random_state(m) until `count` states fall in `category`
/// (Maximal or Zero). Throws ImpossibleCategory for Zero with odd m.
ClassifiedStates generate_classified_states(int m, VorticityCategory category, int count,
                                            std::uint64_t seed, long max_attempts = 100'000'000);

}  // namespace pilotwave
