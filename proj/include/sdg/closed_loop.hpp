#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sdg/game.hpp"
#include "sdg/parallel.hpp"
#include "sdg/path_integral.hpp"
#include "sdg/sde.hpp"

namespace sdg {

/// How a player picks its control at each decision instant.
struct PolicyHandle {
  enum class Kind {
    kPathIntegralSaddle,  // u* or v* from the path-integral estimator
    kZero,
    kSingleAgentPI,  // agent only: ignores the adversary when planning
    kFixed,
  };

  Kind kind = Kind::kZero;
  int rollouts = 1000;
  double step = 0.01;
  Sampling sampling = Sampling::kAntithetic;
  /// Perturbations of PI policies: control = gain_scale * estimate + offset.
  double gain_scale = 1.0;
  Vec offset;
  Policy fixed;

  static PolicyHandle saddle(int rollouts, double step) {
    PolicyHandle p;
    p.kind = Kind::kPathIntegralSaddle;
    p.rollouts = rollouts;
    p.step = step;
    return p;
  }
  static PolicyHandle zero() { return {}; }
  static PolicyHandle single_agent(int rollouts, double step) {
    PolicyHandle p = saddle(rollouts, step);
    p.kind = Kind::kSingleAgentPI;
    return p;
  }
  static PolicyHandle fixed_policy(Policy f) {
    PolicyHandle p;
    p.kind = Kind::kFixed;
    p.fixed = std::move(f);
    return p;
  }

  bool uses_path_integral() const {
    return kind == Kind::kPathIntegralSaddle || kind == Kind::kSingleAgentPI;
  }
};

/// A game together with its certified lambda values.
struct GameContext {
  const GameSpec* spec = nullptr;
  double lambda = 0.0;
  /// c in Sigma Sigma' = c lambda M from the certificate.
  double noise_scale = 1.0;
  std::optional<double> single_agent_lambda;
};

/// Resolves lambda (and the adversary-free lambda when supplied) on default probes.
GameContext make_context(const GameSpec& spec);

struct TrialSettings {
  double step = 0.01;
  double decision_interval = 0.01;
  std::optional<Vec> x_start;
  std::optional<double> t_start;
  /// Keep states and controls of every step (needed for CSV export).
  bool record_path = true;
};

/// Terms of the realized cost of one trial.
struct CostLedger {
  double terminal = 0.0;        // phi(x(t_f))
  double running = 0.0;         // sum_k L(x_k, u_k, v_k, t_k) dt_k
  double state_integral = 0.0;  // int V dt
  double agent_energy = 0.0;    // int u'R_u u/2 dt
  double adversary_energy = 0.0;      // int v'R_v v/2 dt
  double adversary_raw_energy = 0.0;  // int v'v dt
  ExitKind exit_kind = ExitKind::kHorizonEnd;
  double exit_time = 0.0;
  int decisions = 0;
  int low_ess_decisions = 0;
  int truncation_hits = 0;

  double cost() const { return terminal + running; }
  /// phi + int (u'R_u u/2 + V) dt, the performance index bounded by the
  /// disturbance-attenuation inequality.
  double performance() const { return terminal + agent_energy + state_integral; }
};

struct TrialResult {
  Trajectory trajectory;
  CostLedger ledger;
};

/// One receding-horizon game from (x0, t0): controls are re-estimated every
/// decision interval, held, and applied to the true system until exit.
TrialResult run_trial(const GameContext& ctx, const PolicyHandle& policy_u, const PolicyHandle& policy_v,
                      const TrialSettings& settings, std::uint64_t master_seed, std::uint64_t trial_index,
                      const ExecutionPolicy& exec = {});

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

/// 95% Wilson score interval.
Interval wilson_interval(int successes, int trials, double z = 1.959963984540054);

struct MeanStat {
  double mean = 0.0;
  double std_dev = 0.0;
  double std_error = 0.0;
};

MeanStat mean_stat(const std::vector<double>& values);

struct GameOutcome {
  int trials = 0;
  int failures = 0;
  double p_fail = 0.0;
  Interval p_fail_ci;
  MeanStat cost;
  MeanStat performance;
  MeanStat control_energy_u;
  MeanStat control_energy_v;
  MeanStat adversary_energy_raw;
  int low_ess_decisions = 0;
  int truncation_hits = 0;
  std::vector<TrialResult> results;

  int survivals() const { return trials - failures; }
  /// The adversary fails exactly when the agent survives.
  double p_fail_adversary() const { return trials ? 1.0 - p_fail : 0.0; }
};

GameOutcome summarize(std::vector<TrialResult> results);

/// Independent trials with trial indices 0..trials-1.
GameOutcome estimate_failure_probability(const GameContext& ctx, const PolicyHandle& policy_u,
                                         const PolicyHandle& policy_v, int trials, const TrialSettings& settings,
                                         std::uint64_t master_seed, const ExecutionPolicy& exec = {});

struct Theorem3Entry {
  double adversary_scale = 1.0;
  double delta = 0.0;  // declared energy bound
  MeanStat measured_energy;
  double lhs = 0.0;
  double rhs = 0.0;
  double difference = 0.0;  // lhs - rhs
  double std_error = 0.0;
  bool holds = false;  // difference >= -2 std_error
};

struct Theorem3Report {
  double gamma2 = 0.0;
  MeanStat saddle_performance;
  MeanStat delta_gamma;
  std::vector<Theorem3Entry> entries;
};

/// Empirical check of the disturbance-attenuation bound for adversaries
/// v = scale * v*_gamma. A declared delta below the measured energy of its
/// adversary raises EnergyBoundViolated; without a declaration delta is set to
/// the measured energy.
Theorem3Report theorem3_check(const GameContext& ctx, double gamma2, const std::vector<double>& adversary_scales,
                              const std::vector<std::optional<double>>& declared_deltas, int rollouts, int trials,
                              const TrialSettings& settings, std::uint64_t master_seed,
                              const ExecutionPolicy& exec = {});

/// Mean realized cost-to-go under the given policies, comparable to
/// J(x, t) = -lambda log xi(x, t) when both play the saddle point.
MeanStat empirical_game_value(const GameContext& ctx, const PolicyHandle& policy_u, const PolicyHandle& policy_v,
                              int trials, const TrialSettings& settings, std::uint64_t master_seed,
                              const ExecutionPolicy& exec = {});

}  // namespace sdg
