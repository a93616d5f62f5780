#pragma once

// Entropy functionals on discrete distributions and density grids.
// Natural logarithms throughout.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pilotwave/grid.hpp"

namespace pilotwave {

/// -sum p log p with 0 log 0 = 0. Throws InvalidArgument unless p >= 0 and
/// sums to 1 within 1e-12.
double discrete_entropy(const std::vector<double>& p);

/// Column-stochastic matrix acting as p' = T p.
using TransitionMatrix = Eigen::MatrixXd;

/// Throws InvalidArgument unless T is square with entries in [0,1] and unit
/// column sums (within 1e-12).
void validate_transition(const TransitionMatrix& t);

/// True if every entry is within tol of 0 or 1 and T is a permutation.
bool is_permutation(const TransitionMatrix& t, double tol = 1e-12);

struct ConservationCheck {
  bool entropy_conserved = true;  // |S(Tp) - S(p)| <= 1e-9 for every sample
  bool permutation = false;
  double max_deviation = 0.0;
  int trials = 0;
};

/// Samples the n point masses followed by `trials` Dirichlet(1) distributions
/// and compares S(Tp) with S(p). The two flags agree for every valid T.
ConservationCheck check_entropy_conservation(const TransitionMatrix& t, int trials = 100,
                                             std::uint64_t seed = 0);

/// Both tests pass: T conserves the entropy of every sampled p and is a
/// permutation. Throws InvalidArgument when trials < 100.
bool is_entropy_conserving(const TransitionMatrix& t, int trials = 100, std::uint64_t seed = 0);

/// Random distribution with Dirichlet(1) weights.
std::vector<double> random_distribution(int n, std::uint64_t seed);

enum class TransitionFamily {
  Permutation,  // a random 0/1 permutation
  ManyToOne,    // a permutation with one column redirected onto another's target
  Mixing,       // (1 - eps) P + eps J / n with eps in [1e-3, 0.501)
};
std::string to_string(TransitionFamily f);

/// Random member of one family of column-stochastic matrices.
TransitionMatrix random_transition(int n, TransitionFamily family, std::uint64_t seed);

/// -integral rho log rho.
double differential_entropy(const DensityGrid& rho);

/// -integral rho log(rho / m). Throws SupportMismatch where rho > 1e-12 but
/// m < 1e-300, InvalidArgument if the grids differ.
double jaynes_entropy(const DensityGrid& rho, const DensityGrid& m);

/// Rectangular cells, each a block of whole grid cells.
struct CoarseGrain {
  int nx = 32;
  int ny = 32;

  /// Throws InvalidArgument unless the counts divide the grid's.
  void validate(const GridSpec& g) const;
};

/// Cell averages of `fine` over the coarse cells.
DensityGrid coarse_grain(const DensityGrid& fine, const CoarseGrain& cg);

/// H = integral rhobar log(rhobar / psi2bar) over the coarse cells; >= 0 and
/// zero at equilibrium.
double coarse_grained_H(const DensityGrid& rho, const DensityGrid& psi2, const CoarseGrain& cg = {});

/// Fine-grained H on the grid itself (coarse cells = grid cells).
double fine_grained_H(const DensityGrid& rho, const DensityGrid& psi2);

}  // namespace pilotwave
