#include "pilotwave/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "pilotwave/errors.hpp"
#include "pilotwave/rng.hpp"

namespace pilotwave {

namespace {

double entropy_unchecked(const Eigen::VectorXd& p) {
  double s = 0.0;
  for (double x : p)
    if (x > 0) s -= x * std::log(x);
  return s;
}

void require_same_grid(const DensityGrid& a, const DensityGrid& b) {
  const auto &g = a.grid, &h = b.grid;
  if (g.nx != h.nx || g.ny != h.ny || g.xmin != h.xmin || g.xmax != h.xmax || g.ymin != h.ymin ||
      g.ymax != h.ymax || a.rho.size() != g.size() || b.rho.size() != h.size())
    throw InvalidArgument("density grids are not aligned");
}

}  // namespace

double discrete_entropy(const std::vector<double>& p) {
  double sum = 0.0;
  for (double x : p) {
    if (!(x >= 0)) throw InvalidArgument("negative or NaN probability");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw InvalidArgument("probabilities sum to " + std::to_string(sum));
  return entropy_unchecked(Eigen::Map<const Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size())));
}

void validate_transition(const TransitionMatrix& t) {
  if (t.rows() != t.cols() || t.rows() == 0) throw InvalidArgument("transition matrix must be square");
  for (Eigen::Index j = 0; j < t.cols(); ++j) {
    for (Eigen::Index i = 0; i < t.rows(); ++i)
      if (!(t(i, j) >= -1e-12 && t(i, j) <= 1 + 1e-12))
        throw InvalidArgument("transition entry outside [0,1]");
    if (std::abs(t.col(j).sum() - 1.0) > 1e-12) throw InvalidArgument("column does not sum to 1");
  }
}

bool is_permutation(const TransitionMatrix& t, double tol) {
  if (t.rows() != t.cols()) return false;
  std::vector<int> row_hits(static_cast<std::size_t>(t.rows()), 0);
  for (Eigen::Index j = 0; j < t.cols(); ++j) {
    int ones = 0;
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
      const double v = t(i, j);
      if (std::abs(v - 1.0) <= tol) {
        ++ones;
        ++row_hits[static_cast<std::size_t>(i)];
      } else if (std::abs(v) > tol) {
        return false;
      }
    }
    if (ones != 1) return false;
  }
  for (int h : row_hits)
    if (h != 1) return false;
  return true;
}

std::vector<double> random_distribution(int n, std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("distribution needs n >= 1");
  Rng rng(seed);
  std::vector<double> p(static_cast<std::size_t>(n));
  double sum = 0.0;
  for (auto& x : p) sum += x = -std::log(rng.open_uniform());
  for (auto& x : p) x /= sum;
  return p;
}

std::string to_string(TransitionFamily f) {
  switch (f) {
    case TransitionFamily::Permutation: return "permutation";
    case TransitionFamily::ManyToOne: return "many-to-one";
    case TransitionFamily::Mixing: return "mixing";
  }
  return "unknown";
}

TransitionMatrix random_transition(int n, TransitionFamily family, std::uint64_t seed) {
  if (n < 2) throw InvalidArgument("transition matrix needs n >= 2");
  Rng rng(seed);
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng.engine());
  TransitionMatrix t = TransitionMatrix::Zero(n, n);
  for (int j = 0; j < n; ++j) t(perm[static_cast<std::size_t>(j)], j) = 1.0;
  if (family == TransitionFamily::ManyToOne) {
    t.col(0) = t.col(1);
  } else if (family == TransitionFamily::Mixing) {
    const double eps = 1e-3 + 0.5 * rng.uniform();
    t = (1 - eps) * t + eps * TransitionMatrix::Constant(n, n, 1.0 / n);
  }
  return t;
}

ConservationCheck check_entropy_conservation(const TransitionMatrix& t, int trials, std::uint64_t seed) {
  validate_transition(t);
  const auto n = t.rows();
  ConservationCheck c;
  c.permutation = is_permutation(t);
  auto test = [&](const Eigen::VectorXd& p) {
    const double d = std::abs(entropy_unchecked(t * p) - entropy_unchecked(p));
    c.max_deviation = std::max(c.max_deviation, d);
    if (d > 1e-9) c.entropy_conserved = false;
    ++c.trials;
  };
  for (Eigen::Index k = 0; k < n; ++k) test(Eigen::VectorXd::Unit(n, k));
  for (int k = 0; k < trials; ++k) {
    const auto p = random_distribution(static_cast<int>(n), sub_seed(seed, static_cast<std::uint64_t>(k)));
    test(Eigen::Map<const Eigen::VectorXd>(p.data(), n));
  }
  return c;
}

bool is_entropy_conserving(const TransitionMatrix& t, int trials, std::uint64_t seed) {
  if (trials < 100) throw InvalidArgument("entropy conservation check needs >= 100 trials");
  const auto c = check_entropy_conservation(t, trials, seed);
  return c.entropy_conserved && c.permutation;
}

double differential_entropy(const DensityGrid& rho) {
  double s = 0.0;
  for (double r : rho.rho)
    if (r > 0) s -= r * std::log(r);
  return s * rho.grid.cell_area();
}

double jaynes_entropy(const DensityGrid& rho, const DensityGrid& m) {
  require_same_grid(rho, m);
  double s = 0.0;
  for (std::size_t k = 0; k < rho.rho.size(); ++k) {
    const double r = rho.rho[k];
    if (r <= 0) continue;
    if (m.rho[k] < 1e-300) {
      if (r > 1e-12) throw SupportMismatch("density is positive where the reference vanishes");
      continue;
    }
    s -= r * std::log(r / m.rho[k]);
  }
  return s * rho.grid.cell_area();
}

void CoarseGrain::validate(const GridSpec& g) const {
  if (nx < 1 || ny < 1 || g.nx % nx != 0 || g.ny % ny != 0)
    throw InvalidArgument("coarse grain " + std::to_string(nx) + "x" + std::to_string(ny) +
                          " does not divide grid " + std::to_string(g.nx) + "x" + std::to_string(g.ny));
}

DensityGrid coarse_grain(const DensityGrid& fine, const CoarseGrain& cg) {
  cg.validate(fine.grid);
  const auto& g = fine.grid;
  DensityGrid out({g.xmin, g.xmax, g.ymin, g.ymax, cg.nx, cg.ny}, fine.t);
  const int bx = g.nx / cg.nx, by = g.ny / cg.ny;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) out.at(i / bx, j / by) += fine.at(i, j);
  for (auto& v : out.rho) v /= bx * by;
  return out;
}

double coarse_grained_H(const DensityGrid& rho, const DensityGrid& psi2, const CoarseGrain& cg) {
  require_same_grid(rho, psi2);
  const auto r = coarse_grain(rho, cg), p = coarse_grain(psi2, cg);
  double h = 0.0;
  for (std::size_t k = 0; k < r.rho.size(); ++k) {
    const double a = r.rho[k];
    if (a <= 0) continue;
    if (p.rho[k] < 1e-300) {
      if (a > 1e-12) throw SupportMismatch("density is positive where |psi|^2 vanishes");
      continue;
    }
    h += a * std::log(a / p.rho[k]);
  }
  return h * r.grid.cell_area();
}

double fine_grained_H(const DensityGrid& rho, const DensityGrid& psi2) {
  return coarse_grained_H(rho, psi2, {rho.grid.nx, rho.grid.ny});
}

}  // namespace pilotwave
