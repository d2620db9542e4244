#include "sdg/closed_loop.hpp"

#include <cmath>
#include <sstream>

#include "sdg/error.hpp"

namespace sdg {
namespace {

int steps_per_decision(const TrialSettings& s) {
  if (!(s.step > 0.0) || !(s.decision_interval > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "step and decision interval must be positive");
  }
  const double ratio = s.decision_interval / s.step;
  const long k = std::lround(ratio);
  if (k < 1 || std::abs(ratio - static_cast<double>(k)) > 1e-9 * ratio) {
    throw Error(ErrorKind::kInvalidArgument, "decision interval must be a positive multiple of the step");
  }
  return static_cast<int>(k);
}

Vec perturbed(const PolicyHandle& p, Vec c) {
  if (p.gain_scale != 1.0) c *= p.gain_scale;
  if (p.offset.size() == c.size()) c += p.offset;
  return c;
}

Vec call_fixed(const PolicyHandle& p, const Vec& x, double t, int dim, const char* who) {
  if (!p.fixed) throw Error(ErrorKind::kPolicyFailure, std::string(who) + " fixed policy is empty");
  Vec c;
  try {
    c = p.fixed(x, t);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorKind::kPolicyFailure, std::string(who) + " policy failed: " + e.what());
  }
  if (c.size() != dim || !c.allFinite()) {
    throw Error(ErrorKind::kPolicyFailure, std::string(who) + " policy returned an invalid control");
  }
  return c;
}

struct DecisionOutput {
  Vec u;
  Vec v;
  bool low_ess = false;
};

DecisionOutput decide(const GameContext& ctx, const PolicyHandle& pu, const PolicyHandle& pv, const Vec& x,
                      double t, const RngStreamKey& key, const ExecutionPolicy& exec) {
  const GameSpec& spec = *ctx.spec;
  DecisionOutput out;
  std::optional<RolloutBatch> batch_u, batch_v;
  if (pu.uses_path_integral()) batch_u = sample_batch(spec, x, t, pu.rollouts, pu.step, key, exec, pu.sampling);
  if (pv.uses_path_integral()) {
    if (pv.kind == PolicyHandle::Kind::kSingleAgentPI) {
      throw Error(ErrorKind::kInvalidArgument, "the adversary has no adversary-free policy");
    }
    if (batch_u && pu.rollouts == pv.rollouts && pu.step == pv.step && pu.sampling == pv.sampling) {
      batch_v = batch_u;
    } else {
      batch_v = sample_batch(spec, x, t, pv.rollouts, pv.step, key, exec, pv.sampling);
    }
  }

  switch (pu.kind) {
    case PolicyHandle::Kind::kPathIntegralSaddle: {
      const SaddleControls sc = saddle_from_batch(spec, *batch_u, ctx.lambda, exec);
      out.u = perturbed(pu, sc.u_star);
      out.low_ess = out.low_ess || sc.xi.low_ess;
      break;
    }
    case PolicyHandle::Kind::kSingleAgentPI: {
      if (!ctx.single_agent_lambda) {
        throw Error(ErrorKind::kNoValidLambda, "no adversary-free lambda for this game");
      }
      out.u = perturbed(pu, single_agent_from_batch(spec, *batch_u, *ctx.single_agent_lambda, exec));
      break;
    }
    case PolicyHandle::Kind::kZero:
      out.u = Vec::Zero(spec.agent_dim);
      break;
    case PolicyHandle::Kind::kFixed:
      out.u = call_fixed(pu, x, t, spec.agent_dim, "agent");
      break;
  }
  switch (pv.kind) {
    case PolicyHandle::Kind::kPathIntegralSaddle: {
      const SaddleControls sc = saddle_from_batch(spec, *batch_v, ctx.lambda, exec);
      out.v = perturbed(pv, sc.v_star);
      out.low_ess = out.low_ess || sc.xi.low_ess;
      break;
    }
    case PolicyHandle::Kind::kZero:
      out.v = Vec::Zero(spec.adversary_dim);
      break;
    case PolicyHandle::Kind::kFixed:
      out.v = call_fixed(pv, x, t, spec.adversary_dim, "adversary");
      break;
    case PolicyHandle::Kind::kSingleAgentPI:
      break;
  }
  return out;
}

}  // namespace

GameContext make_context(const GameSpec& spec) {
  spec.validate();
  const auto probes = default_probes(spec, 32, 0x5eedULL);
  GameContext ctx;
  ctx.spec = &spec;
  const LambdaCertificate cert = resolve_lambda(spec, probes);
  ctx.lambda = cert.lambda;
  ctx.noise_scale = cert.noise_scale;
  if (spec.single_agent_lambda) ctx.single_agent_lambda = resolve_single_agent_lambda(spec, probes).lambda;
  return ctx;
}

TrialResult run_trial(const GameContext& ctx, const PolicyHandle& policy_u, const PolicyHandle& policy_v,
                      const TrialSettings& settings, std::uint64_t master_seed, std::uint64_t trial_index,
                      const ExecutionPolicy& exec) {
  const GameSpec& spec = *ctx.spec;
  const int hold = steps_per_decision(settings);
  const double h = settings.step;
  Vec x = settings.x_start.value_or(spec.x0);
  const double t_start = settings.t_start.value_or(spec.t0);
  if (!spec.safe_set->contains(x) || !(t_start < spec.horizon)) {
    throw Error(ErrorKind::kInvalidArgument, "trial must start inside X_s before the horizon");
  }

  TrialResult result;
  Trajectory& traj = result.trajectory;
  CostLedger& ledger = result.ledger;
  WienerStream system_noise({master_seed, trial_index, 0, kSystemStream}, spec.noise_dim);
  NoiseIncrement inc{Vec(spec.noise_dim), 0.0};
  Vec u, v;
  double t = t_start;
  if (settings.record_path) {
    traj.times.push_back(t);
    traj.states.push_back(x);
  }
  for (int k = 0;; ++k) {
    if (k % hold == 0) {
      const RngStreamKey key{master_seed, trial_index, static_cast<std::uint64_t>(k / hold), 0};
      DecisionOutput d = decide(ctx, policy_u, policy_v, x, t, key, exec);
      u = std::move(d.u);
      v = std::move(d.v);
      ++ledger.decisions;
      if (d.low_ess) ++ledger.low_ess_decisions;
    }
    const double dt = step_length(t, spec.horizon, h);
    const double state_cost = spec.zero_state_cost ? 0.0 : spec.state_cost(x, t);
    const double agent_energy = 0.5 * u.dot(spec.control_weight_u(x, t) * u);
    const double adversary_energy = 0.5 * v.dot(spec.control_weight_v(x, t) * v);
    ledger.running += running_cost(spec, x, u, v, t) * dt;
    ledger.state_integral += state_cost * dt;
    ledger.agent_energy += agent_energy * dt;
    ledger.adversary_energy += adversary_energy * dt;
    ledger.adversary_raw_energy += v.squaredNorm() * dt;
    if (k == 0) {
      traj.first_step = dt;
    }
    inc.step = dt;
    system_noise.next(dt, inc.dw);
    const Vec previous = x;
    x = em_step(spec, x, t, u, v, inc);
    const bool last =
        dt < h * (1.0 + 1e-9) && t + dt >= spec.horizon - 1e-12 * std::max(1.0, std::abs(spec.horizon));
    t = last ? spec.horizon : t_start + (k + 1) * h;
    if (spec.safe_set->beyond_truncation(x)) {
      traj.truncation_hit = true;
      ++ledger.truncation_hits;
    }
    if (settings.record_path) {
      traj.agent_controls.push_back(u);
      traj.adversary_controls.push_back(v);
      traj.times.push_back(t);
      traj.states.push_back(x);
    }
    const bool outside = !spec.safe_set->contains(x) ||
                         (spec.exit_monitoring == GameSpec::ExitMonitoring::kBrownianBridge &&
                          system_noise.uniform() < bridge_exit_probability(spec, previous, x, t - dt, dt));
    if (outside || last) {
      traj.exit_kind = outside ? ExitKind::kBoundaryExit : ExitKind::kHorizonEnd;
      traj.exit_time = t;
      traj.exit_index = k + 1;
      ledger.exit_kind = traj.exit_kind;
      ledger.exit_time = t;
      ledger.terminal = end_cost(spec, x, outside);
      if (!settings.record_path) {
        traj.times = {t};
        traj.states = {x};
        traj.exit_index = 0;
      }
      return result;
    }
  }
}

Interval wilson_interval(int successes, int trials, double z) {
  if (trials <= 0) return {0.0, 1.0};
  const double n = trials;
  const double p = successes / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

MeanStat mean_stat(const std::vector<double>& values) {
  MeanStat s;
  const auto n = static_cast<double>(values.size());
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std_dev = std::sqrt(ss / (n - 1.0));
    s.std_error = s.std_dev / std::sqrt(n);
  }
  return s;
}

GameOutcome summarize(std::vector<TrialResult> results) {
  GameOutcome out;
  out.trials = static_cast<int>(results.size());
  std::vector<double> cost, perf, eu, ev, raw;
  for (const auto& r : results) {
    if (r.ledger.exit_kind == ExitKind::kBoundaryExit) ++out.failures;
    cost.push_back(r.ledger.cost());
    perf.push_back(r.ledger.performance());
    eu.push_back(r.ledger.agent_energy);
    ev.push_back(r.ledger.adversary_energy);
    raw.push_back(r.ledger.adversary_raw_energy);
    out.low_ess_decisions += r.ledger.low_ess_decisions;
    out.truncation_hits += r.ledger.truncation_hits;
  }
  out.p_fail = out.trials ? static_cast<double>(out.failures) / out.trials : 0.0;
  out.p_fail_ci = wilson_interval(out.failures, out.trials);
  out.cost = mean_stat(cost);
  out.performance = mean_stat(perf);
  out.control_energy_u = mean_stat(eu);
  out.control_energy_v = mean_stat(ev);
  out.adversary_energy_raw = mean_stat(raw);
  out.results = std::move(results);
  return out;
}

GameOutcome estimate_failure_probability(const GameContext& ctx, const PolicyHandle& policy_u,
                                         const PolicyHandle& policy_v, int trials, const TrialSettings& settings,
                                         std::uint64_t master_seed, const ExecutionPolicy& exec) {
  if (trials < 0) throw Error(ErrorKind::kInvalidArgument, "trial count must be non-negative");
  std::vector<TrialResult> results(static_cast<std::size_t>(trials));
  const int workers = resolve_workers(exec.workers);
  // Parallelize across trials when there are enough of them; rollouts inside
  // a trial then run serially. Keys make both layouts produce the same paths.
  const bool across_trials = workers > 1 && trials >= workers;
  ExecutionPolicy inner = exec;
  if (across_trials) inner.workers = 1;
  parallel_for(static_cast<std::size_t>(trials), across_trials ? workers : 1, [&](std::size_t i) {
    results[i] = run_trial(ctx, policy_u, policy_v, settings, master_seed, i, inner);
  });
  return summarize(std::move(results));
}

Theorem3Report theorem3_check(const GameContext& ctx, double gamma2, const std::vector<double>& adversary_scales,
                              const std::vector<std::optional<double>>& declared_deltas, int rollouts, int trials,
                              const TrialSettings& settings, std::uint64_t master_seed,
                              const ExecutionPolicy& exec) {
  if (!declared_deltas.empty() && declared_deltas.size() != adversary_scales.size()) {
    throw Error(ErrorKind::kInvalidArgument, "one declared delta per adversary is required");
  }
  const PolicyHandle agent = PolicyHandle::saddle(rollouts, settings.step);
  const PolicyHandle saddle_adversary = PolicyHandle::saddle(rollouts, settings.step);
  TrialSettings s = settings;
  s.record_path = false;
  const GameOutcome saddle = estimate_failure_probability(ctx, agent, saddle_adversary, trials, s, master_seed, exec);

  Theorem3Report report;
  report.gamma2 = gamma2;
  report.saddle_performance = saddle.performance;
  report.delta_gamma = saddle.adversary_energy_raw;
  for (std::size_t i = 0; i < adversary_scales.size(); ++i) {
    const double scale = adversary_scales[i];
    PolicyHandle adversary = saddle_adversary;
    adversary.gain_scale = scale;
    const GameOutcome played =
        scale == 1.0 ? saddle : estimate_failure_probability(ctx, agent, adversary, trials, s, master_seed, exec);
    Theorem3Entry e;
    e.adversary_scale = scale;
    e.measured_energy = played.adversary_energy_raw;
    const std::optional<double> declared = declared_deltas.empty() ? std::nullopt : declared_deltas[i];
    if (declared && *declared < e.measured_energy.mean) {
      std::ostringstream msg;
      msg << "adversary scale " << scale << " spends energy " << e.measured_energy.mean << " > declared delta "
          << *declared;
      throw Error(ErrorKind::kEnergyBoundViolated, msg.str());
    }
    e.delta = declared.value_or(e.measured_energy.mean);
    e.lhs = saddle.performance.mean + 0.5 * gamma2 * (e.delta - report.delta_gamma.mean);
    e.rhs = played.performance.mean;
    e.difference = e.lhs - e.rhs;
    if (scale == 1.0 && !declared) {
      e.std_error = 0.0;
    } else {
      const double g = 0.5 * gamma2;
      const double delta_se = declared ? 0.0 : e.measured_energy.std_error;
      e.std_error = std::sqrt(std::pow(saddle.performance.std_error, 2) + std::pow(played.performance.std_error, 2) +
                              g * g * (std::pow(delta_se, 2) + std::pow(report.delta_gamma.std_error, 2)));
    }
    e.holds = e.difference >= -2.0 * e.std_error;
    report.entries.push_back(e);
  }
  return report;
}

MeanStat empirical_game_value(const GameContext& ctx, const PolicyHandle& policy_u, const PolicyHandle& policy_v,
                              int trials, const TrialSettings& settings, std::uint64_t master_seed,
                              const ExecutionPolicy& exec) {
  TrialSettings s = settings;
  s.record_path = false;
  return estimate_failure_probability(ctx, policy_u, policy_v, trials, s, master_seed, exec).cost;
}

}  // namespace sdg
