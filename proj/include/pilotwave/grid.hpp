#pragma once

#include <cstddef>
#include <numeric>
#include <vector>

#include "pilotwave/errors.hpp"

namespace pilotwave {

/// Uniform cell-centred rectangular grid. Values are stored row-major with
/// x varying fastest: index = j * nx + i.
struct GridSpec {
  double xmin = -8.0, xmax = 8.0;
  double ymin = -8.0, ymax = 8.0;
  int nx = 256, ny = 256;

  static GridSpec square(double half_width, int n) {
    return {-half_width, half_width, -half_width, half_width, n, n};
  }
  double dx() const { return (xmax - xmin) / nx; }
  double dy() const { return (ymax - ymin) / ny; }
  double x(int i) const { return xmin + (i + 0.5) * dx(); }
  double y(int j) const { return ymin + (j + 0.5) * dy(); }
  double cell_area() const { return dx() * dy(); }
  std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(i);
  }
  void validate() const {
    if (nx < 1 || ny < 1 || !(xmax > xmin) || !(ymax > ymin))
      throw InvalidArgument("degenerate grid");
  }
};

/// Cell averages of a probability density (per unit area) at time t.
struct DensityGrid {
  GridSpec grid;
  std::vector<double> rho;
  double t = 0.0;

  DensityGrid() = default;
  DensityGrid(GridSpec g, double time = 0.0) : grid(g), rho(g.size(), 0.0), t(time) {
    g.validate();
  }
  double& at(int i, int j) { return rho[grid.index(i, j)]; }
  double at(int i, int j) const { return rho[grid.index(i, j)]; }
  double mass() const { return std::accumulate(rho.begin(), rho.end(), 0.0) * grid.cell_area(); }
};

}  // namespace pilotwave
