#include "sdg/pde_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "sdg/error.hpp"

namespace sdg {
namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

void check_grid(const GameSpec& spec, const Grid2D& grid) {
  if (grid.dims != 1 && grid.dims != 2) throw Error(ErrorKind::kInvalidArgument, "grid must have 1 or 2 dimensions");
  if (spec.state_dim != grid.dims) {
    throw Error(ErrorKind::kInvalidArgument, "grid dimension must equal the state dimension");
  }
  for (int d = 0; d < grid.dims; ++d) {
    if (grid.nodes[d] < 3 || !(grid.upper[d] > grid.lower[d])) {
      throw Error(ErrorKind::kInvalidArgument, "grid needs at least 3 nodes per axis and a nonempty range");
    }
  }
  if (grid.time_steps < 1 || grid.store_stride < 1) {
    throw Error(ErrorKind::kInvalidArgument, "grid needs positive time_steps and store_stride");
  }
}

/// Fraction of the segment a -> b (a inside, b outside) at which X_s is left.
double crossing_fraction(const SafeSet& set, const Vec& a, const Vec& b) {
  double lo = 0.0;
  double hi = 1.0;
  Vec p(a.size());
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    p = a + mid * (b - a);
    if (set.contains(p)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return std::max(hi, 1e-8);
}

struct Stencil {
  int centre = 0;
  // per dimension: left then right neighbour; -1 marks a boundary crossing
  std::array<std::array<int, 2>, 2> nb{};
  std::array<std::array<double, 2>, 2> arm{};
};

class Assembler {
 public:
  Assembler(const GameSpec& spec, const Grid2D& grid, double lambda, double k)
      : spec_(spec), grid_(grid), lambda_(lambda), k_(k) {}

  bool on_edge(int i, int j) const {
    if (i == 0 || i == grid_.nodes[0] - 1) return true;
    return grid_.dims == 2 && (j == 0 || j == grid_.nodes[1] - 1);
  }

  Vec node(int i, int j) const {
    Vec x(grid_.dims);
    x[0] = grid_.lower[0] + i * grid_.spacing(0);
    if (grid_.dims == 2) x[1] = grid_.lower[1] + j * grid_.spacing(1);
    return x;
  }

  /// Unknown stencils, computed once since they depend only on geometry.
  void prepare(const std::vector<unsigned char>& inside) {
    const int nx = grid_.nodes[0];
    const int ny = grid_.dims == 2 ? grid_.nodes[1] : 1;
    stencils_.clear();
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        const int p = i + nx * j;
        if (!inside[static_cast<std::size_t>(p)] || on_edge(i, j)) continue;
        Stencil s;
        s.centre = p;
        const Vec x = node(i, j);
        for (int d = 0; d < grid_.dims; ++d) {
          const int stride = d == 0 ? 1 : nx;
          for (int side = 0; side < 2; ++side) {
            const int q = side == 0 ? p - stride : p + stride;
            const double h = grid_.spacing(d);
            if (inside[static_cast<std::size_t>(q)]) {
              s.nb[d][side] = q;
              s.arm[d][side] = h;
            } else {
              Vec y = x;
              y[d] += side == 0 ? -h : h;
              s.nb[d][side] = -1;
              s.arm[d][side] = h * crossing_fraction(*spec_.safe_set, x, y);
            }
          }
        }
        stencils_.push_back(s);
      }
    }
  }

  /// Matrix I - k (L - V/lambda) at time t and the boundary part of the
  /// right-hand side (crossing values).
  void assemble(double t, const std::vector<double>& dirichlet, SpMat& a, Vec& boundary_rhs) const {
    const int n = grid_.node_count();
    std::vector<Triplet> trip;
    trip.reserve(static_cast<std::size_t>(n) * 5);
    boundary_rhs = Vec::Zero(n);
    std::vector<bool> unknown(static_cast<std::size_t>(n), false);
    for (const auto& s : stencils_) unknown[static_cast<std::size_t>(s.centre)] = true;
    for (int p = 0; p < n; ++p) {
      if (!unknown[static_cast<std::size_t>(p)]) {
        trip.emplace_back(p, p, 1.0);
        boundary_rhs[p] = dirichlet[static_cast<std::size_t>(p)];
      }
    }
    const double exit_value = std::exp(-spec_.failure_weight / lambda_);
    Vec f(spec_.state_dim);
    const int nx = grid_.nodes[0];
    for (const auto& s : stencils_) {
      const int i = s.centre % nx;
      const int j = s.centre / nx;
      const Vec x = node(i, j);
      spec_.drift(x, t, f);
      const Mat sigma = spec_.sigma(x, t);
      const Mat cov = sigma * sigma.transpose();
      const double v = spec_.zero_state_cost ? 0.0 : spec_.state_cost(x, t);
      double diag = 1.0 + k_ * v / lambda_;
      for (int d = 0; d < grid_.dims; ++d) {
        const double hl = s.arm[d][0];
        const double hr = s.arm[d][1];
        const double a_d = 0.5 * cov(d, d);
        double cl = a_d * 2.0 / (hl * (hl + hr));
        double cr = a_d * 2.0 / (hr * (hl + hr));
        if (f[d] > 0.0) {
          cr += f[d] / hr;
        } else {
          cl += -f[d] / hl;
        }
        diag += k_ * (cl + cr);
        const double coeff[2] = {cl, cr};
        for (int side = 0; side < 2; ++side) {
          const int q = s.nb[d][side];
          if (q >= 0) {
            trip.emplace_back(s.centre, q, -k_ * coeff[side]);
          } else {
            boundary_rhs[s.centre] += k_ * coeff[side] * exit_value;
          }
        }
      }
      trip.emplace_back(s.centre, s.centre, diag);
    }
    a.resize(n, n);
    a.setFromTriplets(trip.begin(), trip.end());
    a.makeCompressed();
  }

  const std::vector<Stencil>& stencils() const { return stencils_; }

 private:
  const GameSpec& spec_;
  const Grid2D& grid_;
  double lambda_;
  double k_;
  std::vector<Stencil> stencils_;
};

void require_positive(const Vec& xi, double t) {
  for (int p = 0; p < xi.size(); ++p) {
    if (!(xi[p] > 0.0) || !std::isfinite(xi[p])) {
      std::ostringstream msg;
      msg << "xi lost positivity at t = " << t;
      throw Error(ErrorKind::kUnstableSolve, msg.str());
    }
  }
}

/// Bilinear weights of the cell containing x. Returns false if x is off-grid.
bool cell(const PdeSolution& sol, const Vec& x, std::array<int, 4>& idx, std::array<double, 4>& w) {
  const Grid2D& g = sol.grid;
  std::array<int, 2> base{0, 0};
  std::array<double, 2> frac{0.0, 0.0};
  for (int d = 0; d < g.dims; ++d) {
    const double s = (x[d] - g.lower[d]) / g.spacing(d);
    if (!(s >= -1e-12) || !(s <= g.nodes[d] - 1 + 1e-12)) return false;
    int b = static_cast<int>(std::floor(s));
    b = std::clamp(b, 0, g.nodes[d] - 2);
    base[d] = b;
    frac[d] = std::clamp(s - b, 0.0, 1.0);
  }
  if (g.dims == 1) {
    idx = {base[0], base[0] + 1, base[0], base[0] + 1};
    w = {1.0 - frac[0], frac[0], 0.0, 0.0};
    return true;
  }
  const int nx = g.nodes[0];
  idx = {base[0] + nx * base[1], base[0] + 1 + nx * base[1], base[0] + nx * (base[1] + 1),
         base[0] + 1 + nx * (base[1] + 1)};
  w = {(1.0 - frac[0]) * (1.0 - frac[1]), frac[0] * (1.0 - frac[1]), (1.0 - frac[0]) * frac[1], frac[0] * frac[1]};
  return true;
}

double interpolate(const std::vector<double>& field, const std::array<int, 4>& idx, const std::array<double, 4>& w) {
  double acc = 0.0;
  for (int c = 0; c < 4; ++c) {
    if (w[c] != 0.0) acc += w[c] * field[static_cast<std::size_t>(idx[c])];
  }
  return acc;
}

Mat spd_inverse(const Mat& r) { return r.llt().solve(Mat::Identity(r.rows(), r.cols())); }

}  // namespace

Grid2D Grid2D::refined() const {
  Grid2D g = *this;
  for (int d = 0; d < dims; ++d) g.nodes[d] = 2 * (nodes[d] - 1) + 1;
  return g;
}

Vec PdeSolution::node(int index) const {
  Vec x(grid.dims);
  const int nx = grid.nodes[0];
  x[0] = grid.lower[0] + (index % nx) * grid.spacing(0);
  if (grid.dims == 2) x[1] = grid.lower[1] + (index / nx) * grid.spacing(1);
  return x;
}

int PdeSolution::slice_at(double t) const {
  int best = 0;
  for (int s = 1; s < static_cast<int>(slice_times.size()); ++s) {
    if (std::abs(slice_times[static_cast<std::size_t>(s)] - t) <
        std::abs(slice_times[static_cast<std::size_t>(best)] - t)) {
      best = s;
    }
  }
  return best;
}

double PdeSolution::xi(const Vec& x, double t) const {
  std::array<int, 4> idx{};
  std::array<double, 4> w{};
  if (x.size() != grid.dims || !cell(*this, x, idx, w)) {
    throw Error(ErrorKind::kInvalidArgument, "query point lies outside the grid");
  }
  if (!(t >= t0 - 1e-12) || !(t <= horizon + 1e-12)) {
    throw Error(ErrorKind::kInvalidArgument, "query time lies outside [t0, T]");
  }
  const auto upper = std::lower_bound(slice_times.begin(), slice_times.end(), t - 1e-12);
  const std::size_t hi = std::min<std::size_t>(static_cast<std::size_t>(upper - slice_times.begin()),
                                               slice_times.size() - 1);
  if (hi == 0 || std::abs(slice_times[hi] - t) <= 1e-12) return interpolate(slices[hi], idx, w);
  const std::size_t lo = hi - 1;
  const double a = (t - slice_times[lo]) / (slice_times[hi] - slice_times[lo]);
  return (1.0 - a) * interpolate(slices[lo], idx, w) + a * interpolate(slices[hi], idx, w);
}

double PdeSolution::value(const Vec& x, double t) const { return -lambda * std::log(xi(x, t)); }

PdeSolution solve_dirichlet(const GameSpec& spec, const Grid2D& grid, double lambda) {
  check_grid(spec, grid);
  if (!(lambda > 0.0)) throw Error(ErrorKind::kInvalidArgument, "lambda must be positive");
  PdeSolution sol;
  sol.grid = grid;
  sol.lambda = lambda;
  sol.t0 = spec.t0;
  sol.horizon = spec.horizon;
  sol.time_step = (spec.horizon - spec.t0) / grid.time_steps;

  Assembler assembler(spec, grid, lambda, sol.time_step);
  const int n = grid.node_count();
  sol.inside.resize(static_cast<std::size_t>(n));
  std::vector<double> dirichlet(static_cast<std::size_t>(n));
  Vec xi(n);
  const double exit_value = std::exp(-spec.failure_weight / lambda);
  const int nx = grid.nodes[0];
  for (int p = 0; p < n; ++p) {
    const Vec x = assembler.node(p % nx, p / nx);
    const bool in = spec.safe_set->contains(x);
    sol.inside[static_cast<std::size_t>(p)] = in ? 1 : 0;
    dirichlet[static_cast<std::size_t>(p)] = in ? std::exp(-spec.terminal_cost(x) / lambda) : exit_value;
    xi[p] = dirichlet[static_cast<std::size_t>(p)];
  }
  assembler.prepare(sol.inside);

  // Each entry of the triple comes with its successor slice for d/dt.
  std::vector<double> times;
  std::vector<std::vector<double>> kept;
  std::vector<std::vector<double>> next;
  auto keep = [&](int step, const Vec& cur, const Vec* later) {
    times.push_back(spec.t0 + step * sol.time_step);
    kept.emplace_back(cur.data(), cur.data() + cur.size());
    next.push_back(later ? std::vector<double>(later->data(), later->data() + later->size()) : std::vector<double>{});
  };
  keep(grid.time_steps, xi, nullptr);

  SpMat a;
  Vec boundary_rhs;
  Eigen::SparseLU<SpMat> lu;
  const bool reuse = spec.time_invariant;
  sol.factorized = reuse;
  sol.solver_tolerance = 0.0;
  if (reuse) {
    assembler.assemble(spec.t0, dirichlet, a, boundary_rhs);
    lu.compute(a);
    if (lu.info() != Eigen::Success) throw Error(ErrorKind::kUnstableSolve, "sparse factorization failed");
  }
  std::vector<bool> unknown(static_cast<std::size_t>(n), false);
  for (const auto& s : assembler.stencils()) unknown[static_cast<std::size_t>(s.centre)] = true;

  Vec rhs(n);
  for (int step = grid.time_steps - 1; step >= 0; --step) {
    const double t = spec.t0 + step * sol.time_step;
    if (!reuse) {
      assembler.assemble(t, dirichlet, a, boundary_rhs);
      lu.compute(a);
      if (lu.info() != Eigen::Success) throw Error(ErrorKind::kUnstableSolve, "sparse factorization failed");
    }
    for (int p = 0; p < n; ++p) rhs[p] = unknown[static_cast<std::size_t>(p)] ? xi[p] + boundary_rhs[p] : boundary_rhs[p];
    Vec updated = lu.solve(rhs);
    if (lu.info() != Eigen::Success) throw Error(ErrorKind::kUnstableSolve, "sparse solve failed");
    sol.solver_tolerance = std::max(sol.solver_tolerance, (a * updated - rhs).lpNorm<Eigen::Infinity>());
    require_positive(updated, t);
    if (step % grid.store_stride == 0) keep(step, updated, &xi);
    xi.swap(updated);
  }
  std::reverse(times.begin(), times.end());
  std::reverse(kept.begin(), kept.end());
  std::reverse(next.begin(), next.end());
  sol.slice_times = std::move(times);
  sol.slices = std::move(kept);
  sol.companions = std::move(next);
  return sol;
}

ControlPair controls_from_solution(const PdeSolution& sol, const GameSpec& spec, const Vec& x, double t) {
  const Grid2D& g = sol.grid;
  if (x.size() != g.dims) throw Error(ErrorKind::kInvalidArgument, "state dimension does not match the grid");
  Vec grad(g.dims);
  for (int d = 0; d < g.dims; ++d) {
    const double h = g.spacing(d);
    double side_value[2];
    for (int side = 0; side < 2; ++side) {
      Vec y = x;
      y[d] += side == 0 ? -h : h;
      std::array<int, 4> idx{};
      std::array<double, 4> w{};
      if (!cell(sol, y, idx, w)) throw Error(ErrorKind::kStencilOutOfDomain, "difference stencil leaves the grid");
      for (int c = 0; c < 4; ++c) {
        if (w[c] != 0.0 && !sol.inside[static_cast<std::size_t>(idx[c])]) {
          throw Error(ErrorKind::kStencilOutOfDomain, "difference stencil touches a node outside the safe set");
        }
      }
      side_value[side] = sol.value(y, t);
    }
    grad[d] = (side_value[1] - side_value[0]) / (2.0 * h);
  }
  ControlPair out;
  out.u = -spd_inverse(spec.control_weight_u(x, t)) * spec.gain_u(x, t).transpose() * grad;
  out.v = spd_inverse(spec.control_weight_v(x, t)) * spec.gain_v(x, t).transpose() * grad;
  return out;
}

double exit_probability_reference(const PdeSolution& sol, const GameSpec& spec, const Vec& x, double t) {
  const double gap = 1.0 - std::exp(-spec.failure_weight / sol.lambda);
  return (1.0 - sol.xi(x, t)) / gap;
}

double exit_probability_reference(const GameSpec& spec, const Grid2D& grid, const Vec& x, double t, double lambda) {
  if (!spec.zero_state_cost) throw Error(ErrorKind::kInvalidArgument, "exit probability needs V = 0");
  if (spec.terminal_cost(x) != 0.0) throw Error(ErrorKind::kInvalidArgument, "exit probability needs psi = 0");
  return exit_probability_reference(solve_dirichlet(spec, grid, lambda), spec, x, t);
}

ResidualStats hji_residual(const PdeSolution& sol, const GameSpec& spec, double t,
                           const std::function<bool(const Vec&)>& region) {
  const int s = sol.slice_at(t);
  const auto& cur = sol.slices[static_cast<std::size_t>(s)];
  const auto& later = sol.companions[static_cast<std::size_t>(s)];
  if (later.empty()) throw Error(ErrorKind::kInvalidArgument, "no companion slice at the terminal time");
  const double ts = sol.slice_times[static_cast<std::size_t>(s)];
  const Grid2D& g = sol.grid;
  const int nx = g.nodes[0];
  const int ny = g.dims == 2 ? g.nodes[1] : 1;
  auto jv = [&](const std::vector<double>& f, int p) { return -sol.lambda * std::log(f[static_cast<std::size_t>(p)]); };

  ResidualStats stats;
  double sum_sq = 0.0;
  Vec drift(g.dims);
  for (int j = 0; j < ny; ++j) {
    if (g.dims == 2 && (j == 0 || j == ny - 1)) continue;
    for (int i = 1; i < nx - 1; ++i) {
      const int p = i + nx * j;
      bool interior = sol.inside[static_cast<std::size_t>(p)] != 0;
      for (int d = 0; d < g.dims && interior; ++d) {
        const int stride = d == 0 ? 1 : nx;
        interior = sol.inside[static_cast<std::size_t>(p - stride)] && sol.inside[static_cast<std::size_t>(p + stride)];
      }
      if (!interior) continue;
      const Vec x = sol.node(p);
      if (!region(x)) continue;
      Vec grad(g.dims);
      Vec second(g.dims);
      for (int d = 0; d < g.dims; ++d) {
        const int stride = d == 0 ? 1 : nx;
        const double h = g.spacing(d);
        const double jl = jv(cur, p - stride);
        const double jc = jv(cur, p);
        const double jr = jv(cur, p + stride);
        grad[d] = (jr - jl) / (2.0 * h);
        second[d] = (jr - 2.0 * jc + jl) / (h * h);
      }
      const double dt_j = (jv(later, p) - jv(cur, p)) / sol.time_step;
      spec.drift(x, ts, drift);
      const Mat sigma = spec.sigma(x, ts);
      const Mat cov = sigma * sigma.transpose();
      const Mat gu = spec.gain_u(x, ts);
      const Mat gv = spec.gain_v(x, ts);
      const Mat m = gu * spd_inverse(spec.control_weight_u(x, ts)) * gu.transpose() -
                    gv * spd_inverse(spec.control_weight_v(x, ts)) * gv.transpose();
      double rhs = (spec.zero_state_cost ? 0.0 : spec.state_cost(x, ts)) + drift.dot(grad);
      for (int d = 0; d < g.dims; ++d) rhs += 0.5 * cov(d, d) * second[d];
      rhs -= 0.5 * grad.dot(m * grad);
      const double r = dt_j + rhs;
      sum_sq += r * r;
      stats.max_abs = std::max(stats.max_abs, std::abs(r));
      ++stats.nodes;
    }
  }
  stats.rms = stats.nodes ? std::sqrt(sum_sq / stats.nodes) : 0.0;
  return stats;
}

void write_csv(const PdeSolution& sol, std::ostream& out) {
  const auto precision = out.precision(17);
  out << (sol.grid.dims == 2 ? "t,x,y,xi\n" : "t,x,xi\n");
  for (std::size_t s = 0; s < sol.slices.size(); ++s) {
    for (int p = 0; p < sol.grid.node_count(); ++p) {
      const Vec x = sol.node(p);
      out << sol.slice_times[s];
      for (int d = 0; d < x.size(); ++d) out << ',' << x[d];
      out << ',' << sol.slices[s][static_cast<std::size_t>(p)] << '\n';
    }
  }
  out.precision(precision);
}

}  // namespace sdg
