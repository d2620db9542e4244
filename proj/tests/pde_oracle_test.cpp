#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "sdg/error.hpp"
#include "sdg/path_integral.hpp"
#include "sdg/pde_oracle.hpp"
#include "sdg/scenarios.hpp"

namespace sdg {
namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

Grid2D grid_with(int nodes, int time_steps = 2000, double half_width = 1.0) {
  Grid2D g;
  g.nodes = {nodes, nodes};
  g.lower = {-half_width, -half_width};
  g.upper = {half_width, half_width};
  g.time_steps = time_steps;
  return g;
}

// Pursuit-evasion solution on [-2, 2]^2, wide enough that the box edge does
// not bias comparisons with unbounded rollouts. Shared by the tests below.
const PdeSolution& pe_solution() {
  static const GameSpec spec = build_pe_spec({});
  static const PdeSolution sol = solve_dirichlet(spec, grid_with(121, 2000, 2.0), 2.0);
  return sol;
}

TEST(SolveDirichlet, ConstantBoundaryDataGivesConstant) {
  GameSpec spec = build_pe_spec({});
  const double c = 0.7;
  spec.failure_weight = c;
  spec.terminal_cost = [c](const Vec&) { return c; };
  const PdeSolution sol = solve_dirichlet(spec, grid_with(41, 200), 2.0);
  for (const auto& slice : sol.slices) {
    for (std::size_t i = 0; i < slice.size(); ++i) EXPECT_NEAR(slice[i], std::exp(-c / 2.0), 1e-6);
  }
}

TEST(SolveDirichlet, MaximumPrinciple) {
  const PdeSolution& sol = pe_solution();
  for (const auto& slice : sol.slices) {
    for (std::size_t i = 0; i < slice.size(); ++i) {
      EXPECT_GT(slice[i], 0.0);
      EXPECT_LE(slice[i], 1.0 + 1e-12);
    }
  }
}

TEST(SolveDirichlet, LargerEtaLowersXi) {
  PursuitEvasionParams p;
  p.eta = 0.4;
  const GameSpec heavier = build_pe_spec(p);
  const PdeSolution sol = solve_dirichlet(heavier, grid_with(41, 400), 2.0);
  const GameSpec base_spec = build_pe_spec({});
  const PdeSolution base = solve_dirichlet(base_spec, grid_with(41, 400), 2.0);
  const auto& a = sol.slices.front();
  const auto& b = base.slices.front();
  int interior = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!sol.inside[i]) continue;
    const Vec x = sol.node(static_cast<int>(i));
    if (std::abs(x[0]) >= 1.0 || std::abs(x[1]) >= 1.0) continue;
    ++interior;
    EXPECT_LT(a[i], b[i]);
  }
  EXPECT_GT(interior, 1000);
}

TEST(SolveDirichlet, GridRefinementChangesXiByUnderOnePercent) {
  const GameSpec spec = build_pe_spec({});
  const double coarse = solve_dirichlet(spec, grid_with(61, 2000, 2.0), 2.0).xi(spec.x0, 0.0);
  const double fine = pe_solution().xi(spec.x0, 0.0);
  EXPECT_LE(std::abs(coarse / fine - 1.0), 0.01);
}

TEST(SolveDirichlet, MatchesDirectMonteCarlo) {
  const GameSpec spec = build_pe_spec({});
  GameSpec bridged = spec;
  bridged.exit_monitoring = GameSpec::ExitMonitoring::kBrownianBridge;
  const XiEstimate mc = estimate_xi(bridged, spec.x0, 0.0, 2.0, 400000, 0.01, {41, 0, 0, 0});
  EXPECT_LE(std::abs(mc.value / pe_solution().xi(spec.x0, 0.0) - 1.0), 0.02);
}

TEST(SolveDirichlet, RejectsHigherDimensions) {
  const GameSpec spec = build_unicycle_spec({});
  try {
    solve_dirichlet(spec, grid_with(21), 2.0);
    FAIL() << "expected InvalidArgument";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidArgument);
  }
}

TEST(ControlsFromSolution, RadiallyOutward) {
  const GameSpec spec = build_pe_spec({});
  for (const Vec& x : {v2(0.3, 0.0), v2(0.0, -0.25), v2(0.2, 0.2), v2(-0.3, 0.1)}) {
    const ControlPair c = controls_from_solution(pe_solution(), spec, x, 0.0);
    const double cosine = c.u.dot(x) / (c.u.norm() * x.norm());
    EXPECT_GT(cosine, 0.99) << x.transpose();
    EXPECT_LE((c.v - c.u / 2.0).norm(), 1e-14 * c.u.norm());
  }
}

TEST(ControlsFromSolution, StencilNearDiskIsRejected) {
  const GameSpec spec = build_pe_spec({});
  try {
    controls_from_solution(pe_solution(), spec, v2(0.11, 0.0), 0.0);
    FAIL() << "expected StencilOutOfDomain";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kStencilOutOfDomain);
  }
}

TEST(ExitProbability, FarFromDiskWithShortHorizonIsZero) {
  PursuitEvasionParams p;
  p.horizon = 0.05;
  p.x0 = v2(0.8, 0.8);
  const GameSpec spec = build_pe_spec(p);
  Grid2D g = grid_with(81, 200);
  EXPECT_LE(exit_probability_reference(spec, g, v2(0.8, 0.8), 0.0), 1e-3);
}

TEST(ExitProbability, MonotoneTowardTheDisk) {
  const GameSpec spec = build_pe_spec({});
  const PdeSolution& sol = pe_solution();
  double previous = 0.0;
  for (double r : {0.9, 0.7, 0.5, 0.35, 0.25, 0.18, 0.13, 0.105}) {
    const double p = exit_probability_reference(sol, spec, v2(r, 0.0), 0.0);
    EXPECT_GE(p, previous) << "r = " << r;
    previous = p;
  }
  EXPECT_GT(previous, 0.9);
}

TEST(ExitProbability, MatchesDirectExitFraction) {
  GameSpec spec = build_pe_spec({});
  spec.exit_monitoring = GameSpec::ExitMonitoring::kBrownianBridge;
  const RolloutBatch batch = sample_batch(spec, spec.x0, 0.0, 400000, 0.005, {43, 0, 0, 0});
  EXPECT_NEAR(batch.exit_fraction(), exit_probability_reference(pe_solution(), spec, spec.x0, 0.0), 0.01);
}

TEST(ExitProbability, RequiresZeroCosts) {
  const GameSpec spec = build_unicycle_spec({});
  EXPECT_THROW(exit_probability_reference(spec, grid_with(21), spec.x0, 0.0), Error);
}

// With R_u = 5 I and R_v = 10 I the scenario noise satisfies the lambda
// identity exactly and J = -lambda log xi solves the HJI equation.
TEST(HjiResidual, ShrinksUnderRefinement) {
  PursuitEvasionParams p;
  p.agent_weight = 5.0;
  const GameSpec spec = build_pe_spec(p);
  auto region = [](const Vec& x) {
    const double r = x.norm();
    return r >= 0.25 && r <= 0.75;
  };
  double previous = 0.0;
  for (int nodes : {41, 81, 161}) {
    const PdeSolution sol = solve_dirichlet(spec, grid_with(nodes), 2.0);
    const ResidualStats stats = hji_residual(sol, spec, 1.0, region);
    ASSERT_GT(stats.nodes, 0);
    if (previous > 0.0) EXPECT_LE(stats.rms / previous, 0.6) << nodes << " nodes";
    previous = stats.rms;
  }
}

TEST(WriteCsv, OneRowPerNodeAndSlice) {
  const GameSpec spec = build_pe_spec({});
  const PdeSolution sol = solve_dirichlet(spec, grid_with(11, 20), 2.0);
  std::ostringstream out;
  write_csv(sol, out);
  std::istringstream in(out.str());
  std::string line;
  int rows = 0;
  std::getline(in, line);
  EXPECT_EQ(line, "t,x,y,xi");
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, static_cast<int>(sol.slices.size()) * 121);
}

}  // namespace
}  // namespace sdg
