#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "sdg/error.hpp"
#include "sdg/scenarios.hpp"
#include "sdg/sde.hpp"

namespace sdg {
namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

// dx = -x dt + 0.5 dw on a box far wider than the paths reach.
GameSpec ou_spec() {
  LinearGameParams p;
  p.drift = -Mat::Identity(1, 1);
  p.gain_u = Mat::Ones(1, 1);
  p.gain_v = Mat::Ones(1, 1);
  p.sigma = 0.5 * Mat::Ones(1, 1);
  p.ru = Mat::Ones(1, 1);
  p.rv = 2.0 * Mat::Ones(1, 1);
  p.state_weight = Mat::Zero(1, 1);
  p.terminal_weight = Mat::Zero(1, 1);
  p.box_lower = Vec::Constant(1, -100.0);
  p.box_upper = Vec::Constant(1, 100.0);
  p.x0 = Vec::Ones(1);
  p.horizon = 1.0;
  return build_linear_spec(p);
}

TEST(EmStep, IdentityWithoutDynamics) {
  GameSpec spec = build_pe_spec({});
  spec.constant_diffusion = Mat::Zero(2, 2);
  const Vec x = v2(0.3, 0.3);
  const Vec next = em_step(spec, x, 0.0, Vec::Zero(2), Vec::Zero(2), {Vec::Ones(2), 0.01});
  EXPECT_EQ(next, x);
}

TEST(EmStep, RelativeDynamicsOneStep) {
  GameSpec spec = build_pe_spec({});
  spec.constant_diffusion = Mat::Zero(2, 2);
  const Vec next = em_step(spec, v2(0.3, 0.3), 0.0, v2(1.0, 0.0), v2(0.0, 0.0), {Vec::Zero(2), 0.01});
  EXPECT_NEAR(next[0], 0.31, 1e-15);
  EXPECT_NEAR(next[1], 0.30, 1e-15);
}

TEST(EmStep, UnicycleDriftMatchesFineIntegration) {
  const GameSpec spec = build_unicycle_spec({});
  const Vec x = (Vec(4) << -0.4, -0.4, 1.0, 0.0).finished();
  const double h = 0.01;
  const Vec em = em_step(spec, x, 0.0, Vec::Zero(2), Vec::Zero(2), {Vec::Zero(2), h});

  // Classical RK4 with 100 substeps.
  auto f = [&](const Vec& y) {
    Vec out(4);
    spec.drift(y, 0.0, out);
    return out;
  };
  Vec y = x;
  const int sub = 100;
  const double dt = h / sub;
  for (int i = 0; i < sub; ++i) {
    const Vec k1 = f(y), k2 = f(y + 0.5 * dt * k1), k3 = f(y + 0.5 * dt * k2), k4 = f(y + dt * k3);
    y += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  EXPECT_LE((em - y).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(EmStep, NonFiniteStateFailsFast) {
  GameSpec spec = build_pe_spec({});
  spec.drift = [](const Vec&, double, Vec& out) { out.setConstant(std::numeric_limits<double>::quiet_NaN()); };
  try {
    em_step(spec, v2(0.3, 0.3), 0.0, Vec::Zero(2), Vec::Zero(2), {Vec::Zero(2), 0.01});
    FAIL() << "expected NonFiniteState";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNonFiniteState);
  }
}

TEST(RolloutUncontrolled, TruncatedFinalStep) {
  const GameSpec spec = build_pe_spec({});
  const Trajectory traj = rollout_uncontrolled(spec, v2(0.5, 0.5), 1.996, 0.01, {1, 0, 0, 0});
  ASSERT_EQ(traj.states.size(), 2u);
  EXPECT_EQ(traj.exit_kind, ExitKind::kHorizonEnd);
  EXPECT_NEAR(traj.times.back() - traj.times.front(), 0.004, 1e-12);
  EXPECT_NEAR(traj.first_step, 0.004, 1e-12);
  EXPECT_NEAR(traj.exit_time, 2.0, 1e-12);
}

TEST(RolloutUncontrolled, RemainderStepLandsOnHorizon) {
  GameSpec spec = build_pe_spec({});
  spec.horizon = 0.025;
  const Trajectory traj = rollout_uncontrolled(spec, v2(0.5, 0.5), 0.0, 0.01, {1, 0, 0, 0});
  ASSERT_EQ(traj.times.size(), 4u);
  EXPECT_NEAR(traj.times[3] - traj.times[2], 0.005, 1e-12);
  EXPECT_EQ(traj.times.back(), 0.025);
}

TEST(RolloutUncontrolled, Deterministic) {
  const GameSpec spec = build_pe_spec({});
  const Trajectory a = rollout_uncontrolled(spec, spec.x0, 0.0, 0.01, {5, 1, 2, 3});
  const Trajectory b = rollout_uncontrolled(spec, spec.x0, 0.0, 0.01, {5, 1, 2, 3});
  ASSERT_EQ(a.states.size(), b.states.size());
  for (std::size_t k = 0; k < a.states.size(); ++k) EXPECT_EQ(a.states[k], b.states[k]);
  EXPECT_EQ(a.exit_kind, b.exit_kind);
}

TEST(RolloutUncontrolled, ExitConsistency) {
  const GameSpec spec = build_pe_spec({});
  int exits = 0;
  for (std::uint64_t i = 0; i < 300; ++i) {
    const Trajectory traj = rollout_uncontrolled(spec, spec.x0, 0.0, 0.01, {9, 0, 0, i});
    ASSERT_EQ(traj.exit_index + 1, static_cast<int>(traj.states.size()));
    if (traj.exit_kind == ExitKind::kBoundaryExit) {
      ++exits;
      EXPECT_FALSE(spec.safe_set->contains(traj.states.back()));
      for (int k = 0; k < traj.exit_index; ++k) EXPECT_TRUE(spec.safe_set->contains(traj.states[k]));
    } else {
      EXPECT_NEAR(traj.exit_time, spec.horizon, 1e-12);
      for (const Vec& s : traj.states) EXPECT_TRUE(spec.safe_set->contains(s));
    }
  }
  EXPECT_GT(exits, 0);
  EXPECT_LT(exits, 300);
}

TEST(RolloutUncontrolled, AntitheticPartnerMirrorsNoise) {
  GameSpec spec = build_pe_spec({});
  const Trajectory a = rollout_uncontrolled(spec, v2(2.0, 2.0), 0.0, 0.01, {4, 0, 0, 0});
  const Trajectory b = rollout_uncontrolled(spec, v2(2.0, 2.0), 0.0, 0.01, {4, 0, 0, 0}, -1.0);
  // f = 0: the mirrored path is the reflection of the first about x.
  ASSERT_EQ(a.states.size(), b.states.size());
  for (std::size_t k = 0; k < a.states.size(); ++k) {
    EXPECT_NEAR((a.states[k] + b.states[k] - 2.0 * v2(2.0, 2.0)).norm(), 0.0, 1e-12);
  }
}

TEST(RolloutUncontrolled, ExitFractionStableUnderStepRefinement) {
  const GameSpec spec = build_pe_spec({});
  auto fraction = [&](double h) {
    int exits = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
      exits += simulate_rollout_cost(spec, spec.x0, 0.0, h, {21, 0, 0, static_cast<std::uint64_t>(i)}).exit_kind ==
               ExitKind::kBoundaryExit;
    }
    return static_cast<double>(exits) / n;
  };
  EXPECT_NEAR(fraction(0.01), fraction(0.005), 0.02);
}

TEST(RolloutUncontrolled, SummaryMatchesStoredPath) {
  const GameSpec spec = build_unicycle_spec({});
  for (std::uint64_t i = 0; i < 20; ++i) {
    const RngStreamKey key{3, 0, 0, i};
    const Trajectory traj = rollout_uncontrolled(spec, spec.x0, 0.0, 0.01, key);
    const RolloutSummary s = simulate_rollout_cost(spec, spec.x0, 0.0, 0.01, key);
    EXPECT_EQ(s.exit_kind, traj.exit_kind);
    EXPECT_EQ(s.exit_time, traj.exit_time);
    EXPECT_EQ(s.first_noise_push, traj.first_noise_push);
  }
}

TEST(RolloutControlled, ZeroPoliciesWithoutNoiseStayPut) {
  GameSpec spec = build_pe_spec({});
  spec.constant_diffusion = Mat::Zero(2, 2);
  const Policy zero = [](const Vec&, double) { return Vec::Zero(2); };
  const Trajectory traj = rollout_controlled(spec, v2(0.3, 0.3), 0.0, 0.01, zero, zero, {1, 0, 0, 0});
  EXPECT_EQ(traj.exit_kind, ExitKind::kHorizonEnd);
  for (const Vec& s : traj.states) EXPECT_EQ(s, v2(0.3, 0.3));
  EXPECT_EQ(traj.agent_controls.size() + 1, traj.states.size());
}

TEST(RolloutControlled, ZeroPoliciesReproduceUncontrolledPaths) {
  const GameSpec spec = build_pe_spec({});
  const Policy zero = [](const Vec&, double) { return Vec::Zero(2); };
  for (std::uint64_t i = 0; i < 50; ++i) {
    const RngStreamKey key{8, 0, 0, i};
    const Trajectory a = rollout_controlled(spec, spec.x0, 0.0, 0.01, zero, zero, key);
    const Trajectory b = rollout_uncontrolled(spec, spec.x0, 0.0, 0.01, key);
    EXPECT_EQ(a.exit_kind, b.exit_kind);
    EXPECT_EQ(a.exit_time, b.exit_time);
  }
}

// Euler-Maruyama moments of an Ornstein-Uhlenbeck process converge at O(h).
TEST(StrongOrder, OrnsteinUhlenbeckMoments) {
  const GameSpec spec = ou_spec();
  const double exact_mean = std::exp(-1.0);
  const double exact_var = 0.25 * (1.0 - std::exp(-2.0)) / 2.0;
  auto errors = [&](double h) {
    const int n = 200000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const Trajectory traj = rollout_uncontrolled(spec, spec.x0, 0.0, h, {31, 0, 0, static_cast<std::uint64_t>(i)});
      const double x = traj.states.back()[0];
      sum += x;
      sum2 += x * x;
    }
    const double mean = sum / n;
    return std::pair{std::abs(mean - exact_mean), std::abs(sum2 / n - mean * mean - exact_var)};
  };
  const auto [mean_coarse, var_coarse] = errors(0.1);
  const auto [mean_fine, var_fine] = errors(0.05);
  EXPECT_NEAR(mean_coarse / mean_fine, 2.0, 1.0);
  EXPECT_NEAR(var_coarse / var_fine, 2.0, 1.0);
}

}  // namespace
}  // namespace sdg
