#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <vector>

#include "sdg/game.hpp"

namespace sdg {

/// Tensor grid over the (at most two) state dimensions of a small game.
struct Grid2D {
  int dims = 2;
  std::array<double, 2> lower{-1.0, -1.0};
  std::array<double, 2> upper{1.0, 1.0};
  std::array<int, 2> nodes{161, 161};
  /// Backward Euler steps over [t0, T].
  int time_steps = 2000;
  /// Every `store_stride`-th time slice is kept (t0 and T always are).
  int store_stride = 20;

  double spacing(int d) const { return (upper[d] - lower[d]) / (nodes[d] - 1); }
  int node_count() const { return dims == 1 ? nodes[0] : nodes[0] * nodes[1]; }
  /// Same box with every spacing halved.
  Grid2D refined() const;
};

struct PdeSolution {
  Grid2D grid;
  double lambda = 0.0;
  double t0 = 0.0;
  double horizon = 0.0;
  double time_step = 0.0;
  double solver_tolerance = 0.0;
  bool factorized = false;
  /// Node lies in X_s (1) or not (0).
  std::vector<unsigned char> inside;
  std::vector<double> slice_times;
  std::vector<std::vector<double>> slices;
  /// xi one time step later than each stored slice (empty for the T slice).
  std::vector<std::vector<double>> companions;

  Vec node(int index) const;
  int index(int i, int j) const { return i + grid.nodes[0] * j; }

  /// Bilinear in space, linear in time between stored slices.
  double xi(const Vec& x, double t) const;
  double value(const Vec& x, double t) const;
  /// Stored slice closest to t.
  int slice_at(double t) const;
};

/// Backward-in-time implicit solve of the linear Dirichlet problem for xi on
/// the grid. Nodes outside X_s carry exp(-eta/lambda), the outer edge of the
/// box exp(-psi/lambda). Diffusion must be diagonal.
PdeSolution solve_dirichlet(const GameSpec& spec, const Grid2D& grid, double lambda);

struct ControlPair {
  Vec u;
  Vec v;
};

/// u* = -R_u^-1 G_u' dJ/dx and v* = R_v^-1 G_v' dJ/dx with dJ/dx from central
/// differences of the interpolated J. Throws StencilOutOfDomain when the
/// stencil touches a node outside X_s or leaves the grid.
ControlPair controls_from_solution(const PdeSolution& sol, const GameSpec& spec, const Vec& x, double t);

/// Exit probability through xi = 1 - (1 - exp(-eta/lambda)) P. Requires V = 0
/// and psi = 0.
double exit_probability_reference(const GameSpec& spec, const Grid2D& grid, const Vec& x, double t,
                                  double lambda = 1.0);
double exit_probability_reference(const PdeSolution& sol, const GameSpec& spec, const Vec& x, double t);

struct ResidualStats {
  double rms = 0.0;
  double max_abs = 0.0;
  int nodes = 0;
};

/// Residual of the HJI equation for J = -lambda log xi on the stored slice
/// nearest t, using the companion slice for dJ/dt and central differences in
/// space. Only nodes with an interior stencil and region(x) true are counted.
ResidualStats hji_residual(const PdeSolution& sol, const GameSpec& spec, double t,
                           const std::function<bool(const Vec&)>& region);

/// Rows "t,x[,y],xi" for every stored slice.
void write_csv(const PdeSolution& sol, std::ostream& out);

}  // namespace sdg
