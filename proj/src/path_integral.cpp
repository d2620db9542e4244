#include "sdg/path_integral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sdg/error.hpp"

namespace sdg {
namespace {

struct WeightSums {
  double sum_w = 0.0;
  double sum_w2 = 0.0;
  Vec sum_w_noise;
};

/// Sums of w_i = exp(-(S_i - S_min)/lambda), w_i^2 and w_i * noise_i. In
/// reproducible mode the sums run in index order; otherwise per-worker
/// partial sums are merged, which only changes floating-point association.
WeightSums weight_sums(const RolloutBatch& batch, double lambda, double s_min, bool with_noise,
                       const ExecutionPolicy& exec) {
  const auto n = static_cast<std::size_t>(batch.size());
  const Eigen::Index n2 = with_noise ? batch.first_noise.rows() : 0;
  auto accumulate = [&](std::size_t begin, std::size_t end, WeightSums& acc) {
    acc.sum_w_noise.setZero(n2);
    for (std::size_t i = begin; i < end; ++i) {
      const double w = std::exp(-(batch.costs[i] - s_min) / lambda);
      acc.sum_w += w;
      acc.sum_w2 += w * w;
      if (with_noise) acc.sum_w_noise.noalias() += w * batch.first_noise.col(static_cast<Eigen::Index>(i));
    }
  };
  WeightSums total;
  if (exec.reproducible || resolve_workers(exec.workers) == 1) {
    accumulate(0, n, total);
    return total;
  }
  const int w = resolve_workers(exec.workers);
  std::vector<WeightSums> parts(static_cast<std::size_t>(w));
  parallel_chunks(n, w, [&](std::size_t b, std::size_t e, int k) { accumulate(b, e, parts[static_cast<std::size_t>(k)]); });
  total.sum_w_noise.setZero(n2);
  for (const auto& p : parts) {
    total.sum_w += p.sum_w;
    total.sum_w2 += p.sum_w2;
    if (with_noise && p.sum_w_noise.size() == n2) total.sum_w_noise += p.sum_w_noise;
  }
  return total;
}

double min_cost(const RolloutBatch& batch) {
  if (batch.costs.empty()) throw Error(ErrorKind::kInvalidArgument, "empty rollout batch");
  double s_min = std::numeric_limits<double>::infinity();
  for (double s : batch.costs) {
    if (!std::isfinite(s)) throw Error(ErrorKind::kDegenerateBatch, "non-finite trajectory cost");
    s_min = std::min(s_min, s);
  }
  return s_min;
}

XiEstimate finish_xi(const WeightSums& sums, double s_min, double lambda, int n) {
  if (!(sums.sum_w > 0.0) || !std::isfinite(sums.sum_w)) {
    throw Error(ErrorKind::kDegenerateBatch, "all importance weights vanished");
  }
  XiEstimate xi;
  const double mean_w = sums.sum_w / n;
  xi.log_value = -s_min / lambda + std::log(mean_w);
  xi.value = std::exp(xi.log_value);
  if (n >= 2) {
    const double var_w = std::max(0.0, (sums.sum_w2 - n * mean_w * mean_w) / (n - 1));
    xi.std_error = std::exp(-s_min / lambda) * std::sqrt(var_w / n);
  } else {
    xi.std_error = std::numeric_limits<double>::infinity();
  }
  xi.ess = sums.sum_w * sums.sum_w / sums.sum_w2;
  xi.low_ess = xi.ess < 0.01 * n;
  return xi;
}

/// Standard error of the mean weight treating each mirrored pair as one
/// sample (pair members are not independent).
double paired_std_error(const RolloutBatch& batch, double lambda, double s_min) {
  const int n = batch.size();
  std::vector<double> units;
  units.reserve(static_cast<std::size_t>(n / 2 + 1));
  for (int i = 0; i < n; i += 2) {
    const double a = std::exp(-(batch.costs[static_cast<std::size_t>(i)] - s_min) / lambda);
    if (i + 1 < n) {
      units.push_back(0.5 * (a + std::exp(-(batch.costs[static_cast<std::size_t>(i + 1)] - s_min) / lambda)));
    } else {
      units.push_back(a);
    }
  }
  const auto k = static_cast<double>(units.size());
  if (units.size() < 2) return std::numeric_limits<double>::infinity();
  double mean = 0.0;
  for (double u : units) mean += u;
  mean /= k;
  double ss = 0.0;
  for (double u : units) ss += (u - mean) * (u - mean);
  return std::exp(-s_min / lambda) * std::sqrt(ss / (k - 1.0) / k);
}

void require_lambda(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw Error(ErrorKind::kInvalidArgument, "lambda must be positive");
}

}  // namespace

int RolloutBatch::exit_count() const {
  return static_cast<int>(std::count(exit_kinds.begin(), exit_kinds.end(), ExitKind::kBoundaryExit));
}

double trajectory_cost(const GameSpec& spec, const Trajectory& traj) {
  double running = 0.0;
  if (!spec.zero_state_cost) {
    for (int k = 0; k < traj.exit_index; ++k) {
      const auto i = static_cast<std::size_t>(k);
      running += spec.state_cost(traj.states[i], traj.times[i]) * (traj.times[i + 1] - traj.times[i]);
    }
  }
  return end_cost(spec, traj.states[static_cast<std::size_t>(traj.exit_index)],
                  traj.exit_kind == ExitKind::kBoundaryExit) +
         running;
}

RolloutBatch sample_batch(const GameSpec& spec, const Vec& x, double t, int n, double h, const RngStreamKey& key,
                          const ExecutionPolicy& exec, Sampling sampling) {
  if (n < 1) throw Error(ErrorKind::kInvalidArgument, "rollout count must be positive");
  RolloutBatch batch;
  batch.origin = x;
  batch.t = t;
  batch.step = h;
  batch.sampling = sampling;
  const bool mirrored = sampling == Sampling::kAntithetic;
  batch.costs.resize(static_cast<std::size_t>(n));
  batch.exit_kinds.resize(static_cast<std::size_t>(n));
  batch.first_noise.resize(static_cast<Eigen::Index>(spec.partition_rows.size()), n);
  std::vector<char> truncated(static_cast<std::size_t>(n), 0);
  std::vector<double> first_steps(static_cast<std::size_t>(n), 0.0);
  parallel_for(static_cast<std::size_t>(n), exec.workers, [&](std::size_t i) {
    RngStreamKey k = key;
    k.rollout_index = mirrored ? i / 2 : i;
    const double sign = mirrored && i % 2 == 1 ? -1.0 : 1.0;
    const RolloutSummary r = simulate_rollout_cost(spec, x, t, h, k, sign);
    batch.costs[i] = r.cost;
    batch.exit_kinds[i] = r.exit_kind;
    batch.first_noise.col(static_cast<Eigen::Index>(i)) = r.first_noise_push;
    truncated[i] = r.truncation_hit ? 1 : 0;
    first_steps[i] = r.first_step;
  });
  batch.first_step = first_steps[0];
  batch.truncation_hits = static_cast<int>(std::count(truncated.begin(), truncated.end(), 1));
  return batch;
}

XiEstimate xi_from_batch(const RolloutBatch& batch, double lambda, const ExecutionPolicy& exec) {
  require_lambda(lambda);
  const double s_min = min_cost(batch);
  XiEstimate xi = finish_xi(weight_sums(batch, lambda, s_min, false, exec), s_min, lambda, batch.size());
  if (batch.sampling == Sampling::kAntithetic) xi.std_error = paired_std_error(batch, lambda, s_min);
  return xi;
}

SaddleControls saddle_from_batch(const GameSpec& spec, const RolloutBatch& batch, double lambda,
                                 const ExecutionPolicy& exec) {
  require_lambda(lambda);
  const GainMatrices gains = estimator_gains(spec, batch.origin, batch.t, lambda);
  const double s_min = min_cost(batch);
  const WeightSums sums = weight_sums(batch, lambda, s_min, true, exec);
  SaddleControls out;
  out.xi = finish_xi(sums, s_min, lambda, batch.size());
  if (batch.sampling == Sampling::kAntithetic) out.xi.std_error = paired_std_error(batch, lambda, s_min);
  out.ess = out.xi.ess;
  out.weighted_noise = sums.sum_w_noise / sums.sum_w;
  const Vec rate = out.weighted_noise / batch.first_step;
  out.u_star = gains.agent * rate;
  out.v_star = gains.adversary * rate;
  return out;
}

Vec single_agent_from_batch(const GameSpec& spec, const RolloutBatch& batch, double lambda,
                            const ExecutionPolicy& exec) {
  require_lambda(lambda);
  const Mat gain = estimator_single_agent_gain(spec, batch.origin, batch.t, lambda);
  const double s_min = min_cost(batch);
  const WeightSums sums = weight_sums(batch, lambda, s_min, true, exec);
  finish_xi(sums, s_min, lambda, batch.size());
  return gain * (sums.sum_w_noise / sums.sum_w / batch.first_step);
}

XiEstimate estimate_xi(const GameSpec& spec, const Vec& x, double t, double lambda, int n, double h,
                       const RngStreamKey& key, const ExecutionPolicy& exec, Sampling sampling) {
  if (n < 2) throw Error(ErrorKind::kInvalidArgument, "estimate_xi needs at least two rollouts");
  return xi_from_batch(sample_batch(spec, x, t, n, h, key, exec, sampling), lambda, exec);
}

SaddleControls estimate_saddle_controls(const GameSpec& spec, const Vec& x, double t, double lambda, int n, double h,
                                        const RngStreamKey& key, const ExecutionPolicy& exec, Sampling sampling) {
  return saddle_from_batch(spec, sample_batch(spec, x, t, n, h, key, exec, sampling), lambda, exec);
}

double value_from_xi(const XiEstimate& xi, double lambda) {
  if (!(xi.value > 0.0)) throw Error(ErrorKind::kInvalidArgument, "xi must be positive");
  return -lambda * xi.log_value;
}

}  // namespace sdg
