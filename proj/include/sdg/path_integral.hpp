#pragma once

#include <vector>

#include "sdg/game.hpp"
#include "sdg/parallel.hpp"
#include "sdg/rng.hpp"
#include "sdg/sde.hpp"

namespace sdg {

/// Independent rollouts, or mirrored pairs (dw, -dw) sharing one stream.
enum class Sampling { kIndependent, kAntithetic };

/// Uncontrolled rollouts from one (x, t): the raw material of the
/// exponentiated value and of the saddle-point controls.
struct RolloutBatch {
  Vec origin;
  double t = 0.0;
  double step = 0.0;
  /// Length of the first step (shorter than `step` only near the horizon).
  double first_step = 0.0;
  std::vector<double> costs;
  /// Sigma^(2) dw over the first step, one column per rollout.
  Mat first_noise;
  std::vector<ExitKind> exit_kinds;
  int truncation_hits = 0;
  Sampling sampling = Sampling::kIndependent;

  int size() const { return static_cast<int>(costs.size()); }
  int exit_count() const;
  double exit_fraction() const { return size() ? static_cast<double>(exit_count()) / size() : 0.0; }
};

struct XiEstimate {
  double value = 0.0;
  double log_value = 0.0;
  double std_error = 0.0;
  double ess = 0.0;
  /// ess < 1% of the sample count.
  bool low_ess = false;
};

struct SaddleControls {
  Vec u_star;
  Vec v_star;
  XiEstimate xi;
  double ess = 0.0;
  /// Weighted mean of the first-step noise pushes.
  Vec weighted_noise;
};

/// S(tau) = phi(x(t_f)) + sum_k V(x_k, t_k) dt_k (left Riemann sum).
double trajectory_cost(const GameSpec& spec, const Trajectory& traj);

/// N rollouts; rollout i draws from `key` with rollout_index = i, or with
/// rollout_index = i / 2 and the sign of i mirrored when antithetic.
RolloutBatch sample_batch(const GameSpec& spec, const Vec& x, double t, int n, double h, const RngStreamKey& key,
                          const ExecutionPolicy& exec = {}, Sampling sampling = Sampling::kIndependent);

/// E[exp(-S/lambda)] with the weights shifted by min S.
XiEstimate xi_from_batch(const RolloutBatch& batch, double lambda, const ExecutionPolicy& exec = {});

/// Saddle-point controls from the weighted first-step noise of a batch.
SaddleControls saddle_from_batch(const GameSpec& spec, const RolloutBatch& batch, double lambda,
                                 const ExecutionPolicy& exec = {});

/// Agent control of the adversary-free problem from a batch.
Vec single_agent_from_batch(const GameSpec& spec, const RolloutBatch& batch, double lambda,
                            const ExecutionPolicy& exec = {});

XiEstimate estimate_xi(const GameSpec& spec, const Vec& x, double t, double lambda, int n, double h,
                       const RngStreamKey& key, const ExecutionPolicy& exec = {},
                       Sampling sampling = Sampling::kIndependent);

SaddleControls estimate_saddle_controls(const GameSpec& spec, const Vec& x, double t, double lambda, int n, double h,
                                        const RngStreamKey& key, const ExecutionPolicy& exec = {},
                                        Sampling sampling = Sampling::kIndependent);

/// J = -lambda log xi.
double value_from_xi(const XiEstimate& xi, double lambda);

}  // namespace sdg
