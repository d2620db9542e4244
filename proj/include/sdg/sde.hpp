#pragma once

#include <functional>
#include <vector>

#include "sdg/game.hpp"
#include "sdg/rng.hpp"

namespace sdg {

enum class ExitKind { kBoundaryExit, kHorizonEnd };

/// One discretized sample path. `states[exit_index]` is the first state
/// outside X_s for a boundary exit, or the state at T otherwise.
struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> states;
  /// Controls applied over [times[k], times[k+1]); empty for uncontrolled paths.
  std::vector<Vec> agent_controls;
  std::vector<Vec> adversary_controls;
  ExitKind exit_kind = ExitKind::kHorizonEnd;
  double exit_time = 0.0;
  int exit_index = 0;
  /// Sigma^(2) dw over the first step.
  Vec first_noise_push;
  double first_step = 0.0;
  /// The path crossed the monitored truncation of an unbounded safe set.
  bool truncation_hit = false;
};

using Policy = std::function<Vec(const Vec& x, double t)>;

/// Length of the step taken from `t` toward `horizon` with nominal step `h`.
/// The final step is shortened to land exactly on the horizon.
inline double step_length(double t, double horizon, double h) {
  const double remaining = horizon - t;
  return remaining <= h * (1.0 + 1e-9) ? remaining : h;
}

/// x + f h + G_u u h + G_v v h + Sigma dw, with h = dw.step.
Vec em_step(const GameSpec& spec, const Vec& x, double t, const Vec& u, const Vec& v, const NoiseIncrement& dw);

/// Path of dx = f dt + Sigma dw from (x, t) until exit or T. A negative
/// `noise_sign` mirrors every increment of the stream (antithetic partner).
Trajectory rollout_uncontrolled(const GameSpec& spec, const Vec& x, double t, double h, const RngStreamKey& key,
                                double noise_sign = 1.0);

/// Closed-loop path under two state-feedback policies evaluated every step.
Trajectory rollout_controlled(const GameSpec& spec, const Vec& x, double t, double h, const Policy& policy_u,
                              const Policy& policy_v, const RngStreamKey& key);

/// What the path-integral estimator keeps from one uncontrolled rollout.
struct RolloutSummary {
  double cost = 0.0;
  Vec first_noise_push;
  double first_step = 0.0;
  ExitKind exit_kind = ExitKind::kHorizonEnd;
  double exit_time = 0.0;
  bool truncation_hit = false;
};

/// Same path as rollout_uncontrolled for the same key, reduced on the fly to
/// its trajectory cost without storing states.
RolloutSummary simulate_rollout_cost(const GameSpec& spec, const Vec& x, double t, double h,
                                     const RngStreamKey& key, double noise_sign = 1.0);

}  // namespace sdg
