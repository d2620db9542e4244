#include "sdg/sde.hpp"

#include <cmath>
#include <sstream>

#include "sdg/error.hpp"

namespace sdg {
namespace {

void require_finite(const Vec& x, double t) {
  if (!x.allFinite()) {
    std::ostringstream msg;
    msg << "state became non-finite at t = " << t;
    throw Error(ErrorKind::kNonFiniteState, msg.str());
  }
}

void require_start(const GameSpec& spec, const Vec& x, double t, double h) {
  if (x.size() != spec.state_dim) throw Error(ErrorKind::kInvalidArgument, "start state has wrong dimension");
  if (!(h > 0.0)) throw Error(ErrorKind::kInvalidArgument, "step must be positive");
  if (!(t < spec.horizon)) throw Error(ErrorKind::kInvalidArgument, "rollout must start before the horizon");
  if (!spec.safe_set->contains(x)) throw Error(ErrorKind::kInvalidArgument, "rollout must start inside X_s");
}

/// Shared Euler-Maruyama loop for uncontrolled rollouts. `on_step(k, t_k, x_k,
/// dt)` sees every state before it is advanced; `on_end(k, t, x)` the final one.
template <typename OnStep, typename OnEnd>
void uncontrolled_loop(const GameSpec& spec, Vec x, double t, double h, const RngStreamKey& key, double sign,
                       Vec& first_push, double& first_step, bool& truncation_hit, OnStep&& on_step,
                       OnEnd&& on_end) {
  WienerStream stream(key, spec.noise_dim);
  Vec dw(spec.noise_dim);
  Vec drift(spec.state_dim);
  const int n2 = static_cast<int>(spec.partition_rows.size());
  first_push.setZero(n2);
  truncation_hit = false;

  Mat sigma2;
  if (spec.constant_diffusion) sigma2 = select_rows(*spec.constant_diffusion, spec.partition_rows);
  const int nk = spec.noise_dim;
  const int* rows = spec.partition_rows.data();
  const bool bridge = spec.exit_monitoring == GameSpec::ExitMonitoring::kBrownianBridge;
  Vec previous(bridge ? x.size() : 0);

  const double t_start = t;
  for (int k = 0;; ++k) {
    const double dt = step_length(t, spec.horizon, h);
    on_step(k, t, x, dt);
    spec.drift(x, t, drift);
    stream.next(dt, dw);
    if (sign < 0.0) dw = -dw;
    if (!spec.constant_diffusion) sigma2 = select_rows(spec.diffusion(x, t), spec.partition_rows);
    if (bridge) previous = x;
    x.noalias() += dt * drift;
    for (int r = 0; r < n2; ++r) {
      double push = 0.0;
      for (int j = 0; j < nk; ++j) push += sigma2(r, j) * dw[j];
      x[rows[r]] += push;
      if (k == 0) first_push[r] = push;
    }
    if (k == 0) first_step = dt;
    const bool last = dt < h * (1.0 + 1e-9) && t + dt >= spec.horizon - 1e-12 * std::max(1.0, std::abs(spec.horizon));
    t = last ? spec.horizon : t_start + (k + 1) * h;
    require_finite(x, t);
    if (spec.safe_set->beyond_truncation(x)) truncation_hit = true;
    if (!spec.safe_set->contains(x) ||
        (bridge && stream.uniform() < bridge_exit_probability(spec, previous, x, t - dt, dt))) {
      on_end(k + 1, t, x, ExitKind::kBoundaryExit);
      return;
    }
    if (last) {
      on_end(k + 1, t, x, ExitKind::kHorizonEnd);
      return;
    }
  }
}

}  // namespace

Vec em_step(const GameSpec& spec, const Vec& x, double t, const Vec& u, const Vec& v, const NoiseIncrement& dw) {
  if (u.size() != spec.agent_dim || v.size() != spec.adversary_dim || dw.dw.size() != spec.noise_dim) {
    throw Error(ErrorKind::kInvalidArgument, "em_step: control or noise dimension mismatch");
  }
  if (!(dw.step > 0.0)) throw Error(ErrorKind::kInvalidArgument, "em_step: step must be positive");
  const double h = dw.step;
  Vec drift(spec.state_dim);
  spec.drift(x, t, drift);
  // Same accumulation order as the uncontrolled loop so that zero controls
  // reproduce uncontrolled paths bit for bit.
  Vec next = x;
  next.noalias() += h * drift;
  next.noalias() += h * (spec.gain_u(x, t) * u);
  next.noalias() += h * (spec.gain_v(x, t) * v);
  const Mat sigma = spec.sigma(x, t);
  for (int r = 0; r < spec.state_dim; ++r) next[r] += sigma.row(r).dot(dw.dw);
  require_finite(next, t + h);
  return next;
}

Trajectory rollout_uncontrolled(const GameSpec& spec, const Vec& x, double t, double h, const RngStreamKey& key,
                                double noise_sign) {
  require_start(spec, x, t, h);
  Trajectory traj;
  uncontrolled_loop(
      spec, x, t, h, key, noise_sign, traj.first_noise_push, traj.first_step, traj.truncation_hit,
      [&](int, double tk, const Vec& xk, double) {
        traj.times.push_back(tk);
        traj.states.push_back(xk);
      },
      [&](int k, double tk, const Vec& xk, ExitKind kind) {
        traj.times.push_back(tk);
        traj.states.push_back(xk);
        traj.exit_kind = kind;
        traj.exit_time = tk;
        traj.exit_index = k;
      });
  return traj;
}

RolloutSummary simulate_rollout_cost(const GameSpec& spec, const Vec& x, double t, double h,
                                     const RngStreamKey& key, double noise_sign) {
  require_start(spec, x, t, h);
  RolloutSummary out;
  double running = 0.0;
  uncontrolled_loop(
      spec, x, t, h, key, noise_sign, out.first_noise_push, out.first_step, out.truncation_hit,
      [&](int, double tk, const Vec& xk, double dt) {
        if (!spec.zero_state_cost) running += spec.state_cost(xk, tk) * dt;
      },
      [&](int, double tk, const Vec& xk, ExitKind kind) {
        out.exit_kind = kind;
        out.exit_time = tk;
        out.cost = end_cost(spec, xk, kind == ExitKind::kBoundaryExit) + running;
      });
  return out;
}

Trajectory rollout_controlled(const GameSpec& spec, const Vec& x, double t, double h, const Policy& policy_u,
                              const Policy& policy_v, const RngStreamKey& key) {
  require_start(spec, x, t, h);
  auto call = [](const Policy& p, const Vec& xk, double tk, int dim, const char* who) {
    Vec c;
    try {
      c = p(xk, tk);
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw Error(ErrorKind::kPolicyFailure, std::string(who) + " policy failed: " + e.what());
    }
    if (c.size() != dim || !c.allFinite()) {
      throw Error(ErrorKind::kPolicyFailure, std::string(who) + " policy returned an invalid control");
    }
    return c;
  };

  Trajectory traj;
  WienerStream stream(key, spec.noise_dim);
  NoiseIncrement inc{Vec(spec.noise_dim), 0.0};
  Vec state = x;
  const double t_start = t;
  traj.times.push_back(t);
  traj.states.push_back(state);
  for (int k = 0;; ++k) {
    const double dt = step_length(t, spec.horizon, h);
    const Vec u = call(policy_u, state, t, spec.agent_dim, "agent");
    const Vec v = call(policy_v, state, t, spec.adversary_dim, "adversary");
    inc.step = dt;
    stream.next(dt, inc.dw);
    if (k == 0) {
      traj.first_noise_push = select_rows(spec.sigma(state, t), spec.partition_rows) * inc.dw;
      traj.first_step = dt;
    }
    const Vec previous = state;
    state = em_step(spec, state, t, u, v, inc);
    const bool last = dt < h * (1.0 + 1e-9) && t + dt >= spec.horizon - 1e-12 * std::max(1.0, std::abs(spec.horizon));
    t = last ? spec.horizon : t_start + (k + 1) * h;
    traj.agent_controls.push_back(u);
    traj.adversary_controls.push_back(v);
    traj.times.push_back(t);
    traj.states.push_back(state);
    if (spec.safe_set->beyond_truncation(state)) traj.truncation_hit = true;
    const bool outside = !spec.safe_set->contains(state) ||
                         (spec.exit_monitoring == GameSpec::ExitMonitoring::kBrownianBridge &&
                          stream.uniform() < bridge_exit_probability(spec, previous, state, t - dt, dt));
    if (outside || last) {
      traj.exit_kind = outside ? ExitKind::kBoundaryExit : ExitKind::kHorizonEnd;
      traj.exit_time = t;
      traj.exit_index = k + 1;
      return traj;
    }
  }
}

}  // namespace sdg
