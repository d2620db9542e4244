#include "sdg/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "sdg/error.hpp"
#include "sdg/pde_oracle.hpp"

namespace sdg {
namespace {

constexpr double kNoParameter = std::numeric_limits<double>::quiet_NaN();

ExecutionPolicy exec_of(const ScenarioConfig& cfg) { return {cfg.numerics.workers, cfg.numerics.reproducible}; }

TrialSettings settings_of(const ScenarioConfig& cfg) {
  TrialSettings s;
  s.step = cfg.numerics.h;
  s.decision_interval = cfg.decision_interval();
  s.record_path = true;
  return s;
}

PolicyHandle saddle_policy(const ScenarioConfig& cfg) {
  PolicyHandle p = PolicyHandle::saddle(cfg.rollouts(), cfg.numerics.h);
  p.sampling = cfg.numerics.sampling;
  return p;
}

long long rollouts_drawn(const PolicyHandle& pu, const PolicyHandle& pv, const GameOutcome& outcome) {
  long long per_decision = 0;
  if (pu.uses_path_integral()) per_decision += pu.rollouts;
  const bool shared = pu.uses_path_integral() && pu.rollouts == pv.rollouts && pu.step == pv.step &&
                      pu.sampling == pv.sampling;
  if (pv.uses_path_integral() && !shared) per_decision += pv.rollouts;
  long long decisions = 0;
  for (const auto& r : outcome.results) decisions += r.ledger.decisions;
  return decisions * per_decision;
}

ConfigurationRun run_configuration(const ScenarioConfig& cfg, const std::string& label, double parameter,
                                   const PolicyHandle& pu, const PolicyHandle& pv) {
  const GameSpec spec = build_scenario_spec(cfg);
  const GameContext ctx = make_context(spec);
  ConfigurationRun run;
  run.label = label;
  run.parameter = parameter;
  run.lambda = ctx.lambda;
  run.noise_scale = ctx.noise_scale;
  run.outcome = estimate_failure_probability(ctx, pu, pv, cfg.numerics.trials, settings_of(cfg),
                                             cfg.numerics.master_seed, exec_of(cfg));
  run.rollouts = rollouts_drawn(pu, pv, run.outcome);
  return run;
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(digits) << v;
  return out.str();
}

void band_verdicts(ExperimentReport& report, const std::vector<std::pair<std::size_t, double>>& targets) {
  for (const auto& [index, target] : targets) {
    const ConfigurationRun& run = report.runs[index];
    report.verdicts.push_back({"band_" + run.label, std::abs(run.outcome.p_fail - target) <= 0.15,
                               "p_fail " + fixed(run.outcome.p_fail) + " vs " + fixed(target) + " +/- 0.15"});
  }
}

void fig1(const ScenarioConfig& cfg, ExperimentReport& report) {
  std::vector<double> grid = cfg.params.fig1_gamma2;
  std::sort(grid.begin(), grid.end());
  for (double g2 : grid) {
    ScenarioConfig c = cfg;
    c.scenario = ScenarioKind::kUnicycle;
    c.unicycle.gamma2 = g2;
    c.unicycle.eta = cfg.params.fig1_eta;
    report.runs.push_back(run_configuration(c, "gamma2=" + fixed(g2, 3), g2, saddle_policy(c), saddle_policy(c)));
  }
  report.lambda = report.runs.front().lambda;
  const double gap = report.runs.front().outcome.p_fail - report.runs.back().outcome.p_fail;
  report.verdicts.push_back({"fig1_trend", gap >= 0.15, "p_fail(lowest gamma2) - p_fail(highest) = " + fixed(gap)});
  if (cfg.mode == RunMode::kFull) {
    std::vector<std::pair<std::size_t, double>> targets;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (grid[i] == 2.0) targets.push_back({i, 0.9});
      if (grid[i] == 7.0) targets.push_back({i, 0.64});
    }
    band_verdicts(report, targets);
  }
}

void fig2(const ScenarioConfig& cfg, ExperimentReport& report) {
  ScenarioConfig c = cfg;
  c.scenario = ScenarioKind::kUnicycle;
  c.unicycle.gamma2 = cfg.params.fig2_gamma2;
  c.unicycle.eta = cfg.params.fig2_eta;
  const PolicyHandle saddle = saddle_policy(c);
  PolicyHandle unaware = PolicyHandle::single_agent(c.rollouts(), c.numerics.h);
  unaware.sampling = c.numerics.sampling;
  report.runs.push_back(run_configuration(c, "aware", c.unicycle.gamma2, saddle, saddle));
  report.runs.push_back(run_configuration(c, "unaware", c.unicycle.gamma2, unaware, saddle));
  report.lambda = report.runs.front().lambda;
  const double gap = report.runs[1].outcome.p_fail - report.runs[0].outcome.p_fail;
  report.verdicts.push_back({"fig2_trend", gap >= 0.2, "p_fail(unaware) - p_fail(aware) = " + fixed(gap)});
  if (cfg.mode == RunMode::kFull) band_verdicts(report, {{0, 0.23}, {1, 0.65}});
}

void fig3(const ScenarioConfig& cfg, ExperimentReport& report) {
  ScenarioConfig c = cfg;
  c.scenario = ScenarioKind::kPursuitEvasion;
  const GameSpec spec = build_scenario_spec(c);
  const GameContext ctx = make_context(spec);
  const PolicyHandle saddle = saddle_policy(c);
  std::optional<TrialResult> escape, capture;
  long long rollouts = 0;
  for (int i = 0; i < cfg.params.fig3_max_trials && !(escape && capture); ++i) {
    TrialResult r = run_trial(ctx, saddle, saddle, settings_of(c), c.numerics.master_seed, static_cast<std::uint64_t>(i),
                              exec_of(c));
    rollouts += static_cast<long long>(r.ledger.decisions) * saddle.rollouts;
    auto& slot = r.ledger.exit_kind == ExitKind::kBoundaryExit ? capture : escape;
    if (!slot) slot = std::move(r);
  }
  report.lambda = ctx.lambda;
  for (auto* found : {&escape, &capture}) {
    if (!*found) continue;
    ConfigurationRun run;
    run.label = found == &escape ? "escape" : "capture";
    run.parameter = kNoParameter;
    run.lambda = ctx.lambda;
    run.noise_scale = ctx.noise_scale;
    run.outcome = summarize({**found});
    report.runs.push_back(std::move(run));
  }
  report.rollouts = rollouts;
  report.verdicts.push_back({"fig3_two_groups", escape.has_value() && capture.has_value(),
                             "escape " + std::string(escape ? "found" : "missing") + ", capture " +
                                 std::string(capture ? "found" : "missing")});
}

void fig4(const ScenarioConfig& cfg, ExperimentReport& report) {
  std::vector<double> grid = cfg.params.fig4_rv2_grid;
  std::sort(grid.begin(), grid.end());
  for (double rv2 : grid) {
    ScenarioConfig c = cfg;
    c.scenario = ScenarioKind::kPursuitEvasion;
    c.pe.rv2 = rv2;
    report.runs.push_back(run_configuration(c, "rv2=" + fixed(rv2, 3), rv2, saddle_policy(c), saddle_policy(c)));
  }
  report.lambda = report.runs.front().lambda;
  bool ok = true;
  std::string detail;
  for (std::size_t i = 0; i < report.runs.size(); ++i) {
    for (std::size_t j = i + 1; j < report.runs.size(); ++j) {
      const GameOutcome& a = report.runs[i].outcome;
      const GameOutcome& b = report.runs[j].outcome;
      if (b.p_fail > a.p_fail && b.p_fail_ci.low > a.p_fail_ci.high) {
        ok = false;
        detail += report.runs[j].label + " above " + report.runs[i].label + "; ";
      }
    }
  }
  report.verdicts.push_back({"fig4_non_increasing", ok, ok ? "within Wilson intervals" : detail});
}

void theorem3(const ScenarioConfig& cfg, ExperimentReport& report) {
  ScenarioConfig c = cfg;
  c.scenario = ScenarioKind::kUnicycle;
  c.unicycle.gamma2 = cfg.params.theorem3_gamma2;
  const GameSpec spec = build_scenario_spec(c);
  const GameContext ctx = make_context(spec);
  report.lambda = ctx.lambda;
  const std::vector<std::optional<double>> deltas(cfg.params.theorem3_scales.size());
  report.theorem3 = theorem3_check(ctx, c.unicycle.gamma2, cfg.params.theorem3_scales, deltas, c.rollouts(),
                                   c.numerics.trials, settings_of(c), c.numerics.master_seed, exec_of(c));
  for (const auto& e : report.theorem3->entries) {
    report.verdicts.push_back({"theorem3_scale=" + fixed(e.adversary_scale, 3), e.holds,
                               "lhs - rhs = " + fixed(e.difference) + ", 2 se = " + fixed(2.0 * e.std_error)});
  }
}

void oracle_xcheck(const ScenarioConfig& cfg, ExperimentReport& report) {
  ScenarioConfig c = cfg;
  c.scenario = ScenarioKind::kPursuitEvasion;
  const GameSpec spec = build_scenario_spec(c);
  const GameContext ctx = make_context(spec);
  report.lambda = ctx.lambda;
  const PdeSolution sol = solve_dirichlet(spec, oracle_grid(cfg), ctx.lambda);
  const auto& states = cfg.params.oracle_states;
  double worst_xi = 0.0, worst_u = 0.0;
  for (std::size_t i = 0; i + 1 < states.size(); i += 2) {
    OracleRow row;
    row.x = Vec(2);
    row.x << states[i], states[i + 1];
    const SaddleControls mc =
        estimate_saddle_controls(spec, row.x, spec.t0, ctx.lambda, cfg.params.oracle_rollouts, cfg.params.oracle_step,
                                 {cfg.numerics.master_seed, i / 2, 0, 0}, exec_of(c), c.numerics.sampling);
    const ControlPair pde = controls_from_solution(sol, spec, row.x, spec.t0);
    row.xi_mc = mc.xi.value;
    row.xi_pde = sol.xi(row.x, spec.t0);
    row.xi_rel_error = std::abs(row.xi_mc - row.xi_pde) / row.xi_pde;
    row.u_mc = mc.u_star;
    row.u_pde = pde.u;
    row.control_checked = pde.u.norm() > 0.05;
    row.u_rel_error = (mc.u_star - pde.u).norm() / std::max(pde.u.norm(), std::numeric_limits<double>::min());
    worst_xi = std::max(worst_xi, row.xi_rel_error);
    if (row.control_checked) worst_u = std::max(worst_u, row.u_rel_error);
    report.rollouts += cfg.params.oracle_rollouts;
    report.oracle.push_back(std::move(row));
  }
  report.verdicts.push_back({"oracle_xi", worst_xi <= 0.05, "max relative error " + fixed(worst_xi)});
  report.verdicts.push_back({"oracle_controls", worst_u <= 0.10, "max relative error " + fixed(worst_u)});
}

void single(const ScenarioConfig& cfg, ExperimentReport& report) {
  const PolicyHandle saddle = saddle_policy(cfg);
  report.runs.push_back(run_configuration(cfg, "saddle", kNoParameter, saddle, saddle));
  report.lambda = report.runs.front().lambda;
}

std::string csv_number(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

}  // namespace

Grid2D oracle_grid(const ScenarioConfig& cfg) {
  const double w = cfg.params.oracle_half_width;
  Grid2D grid;
  grid.lower = {-w, -w};
  grid.upper = {w, w};
  grid.nodes = {cfg.params.oracle_nodes, cfg.params.oracle_nodes};
  return grid;
}

ExperimentReport run_experiment(const ScenarioConfig& cfg) {
  validate_config(cfg);
  const auto start = std::chrono::steady_clock::now();
  ExperimentReport report;
  report.config = cfg;
  {
    ScenarioConfig c = cfg;
    if (cfg.experiment == ExperimentKind::kFig1 || cfg.experiment == ExperimentKind::kFig2 ||
        cfg.experiment == ExperimentKind::kTheorem3) {
      c.scenario = ScenarioKind::kUnicycle;
    } else if (cfg.experiment != ExperimentKind::kSingle) {
      c.scenario = ScenarioKind::kPursuitEvasion;
    }
    const GameSpec spec = build_scenario_spec(c);
    report.state_dim = spec.state_dim;
    report.agent_dim = spec.agent_dim;
    report.adversary_dim = spec.adversary_dim;
  }
  switch (cfg.experiment) {
    case ExperimentKind::kFig1: fig1(cfg, report); break;
    case ExperimentKind::kFig2: fig2(cfg, report); break;
    case ExperimentKind::kFig3: fig3(cfg, report); break;
    case ExperimentKind::kFig4: fig4(cfg, report); break;
    case ExperimentKind::kTheorem3: theorem3(cfg, report); break;
    case ExperimentKind::kOracleXcheck: oracle_xcheck(cfg, report); break;
    case ExperimentKind::kSingle: single(cfg, report); break;
  }
  for (const auto& run : report.runs) report.rollouts += run.rollouts;
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

void write_trajectories_csv(const ExperimentReport& report, std::ostream& out) {
  const int n = report.state_dim, m = report.agent_dim, l = report.adversary_dim;
  out << "label,trial_id,step,t";
  for (int i = 0; i < n; ++i) out << ",x" << i;
  for (int i = 0; i < m; ++i) out << ",u" << i;
  for (int i = 0; i < l; ++i) out << ",v" << i;
  out << ",exit\n";
  for (const auto& run : report.runs) {
    for (std::size_t trial = 0; trial < run.outcome.results.size(); ++trial) {
      const TrialResult& r = run.outcome.results[trial];
      const Trajectory& traj = r.trajectory;
      for (std::size_t k = 0; k < traj.states.size(); ++k) {
        const bool last = k + 1 == traj.states.size();
        out << run.label << ',' << trial << ',' << k << ',' << csv_number(traj.times[k]);
        for (int i = 0; i < n; ++i) out << ',' << csv_number(traj.states[k][i]);
        // The control row k acts over [t_k, t_k+1); the final state has none.
        for (int i = 0; i < m; ++i) out << ',' << (k < traj.agent_controls.size() ? csv_number(traj.agent_controls[k][i]) : "");
        for (int i = 0; i < l; ++i) {
          out << ',' << (k < traj.adversary_controls.size() ? csv_number(traj.adversary_controls[k][i]) : "");
        }
        out << ',' << (last && traj.exit_kind == ExitKind::kBoundaryExit ? 1 : 0) << '\n';
      }
    }
  }
}

void write_summary(const ExperimentReport& report, std::ostream& out) {
  const ScenarioConfig& cfg = report.config;
  out << std::setprecision(17);
  out << "experiment = " << to_string(cfg.experiment) << "\n";
  out << "scenario = " << to_string(cfg.scenario) << "\n";
  out << "mode = " << to_string(cfg.mode) << "\n";
  out << "lambda = " << report.lambda << "\n";
  out << "wall_seconds = " << report.wall_seconds << "\n";
  out << "rollouts = " << report.rollouts << "\n";
  out << "configurations = " << report.runs.size() << "\n";
  for (std::size_t i = 0; i < report.runs.size(); ++i) {
    const ConfigurationRun& run = report.runs[i];
    const GameOutcome& o = run.outcome;
    const std::string p = "run." + std::to_string(i) + ".";
    out << p << "label = " << run.label << "\n";
    if (!std::isnan(run.parameter)) out << p << "parameter = " << run.parameter << "\n";
    out << p << "lambda = " << run.lambda << "\n";
    out << p << "noise_scale = " << run.noise_scale << "\n";
    out << p << "trials = " << o.trials << "\n";
    out << p << "failures = " << o.failures << "\n";
    out << p << "p_fail = " << o.p_fail << "\n";
    out << p << "p_fail_ci_low = " << o.p_fail_ci.low << "\n";
    out << p << "p_fail_ci_high = " << o.p_fail_ci.high << "\n";
    out << p << "cost_mean = " << o.cost.mean << "\n";
    out << p << "cost_std_error = " << o.cost.std_error << "\n";
    out << p << "agent_energy_mean = " << o.control_energy_u.mean << "\n";
    out << p << "adversary_energy_mean = " << o.control_energy_v.mean << "\n";
    out << p << "low_ess_decisions = " << o.low_ess_decisions << "\n";
    out << p << "truncation_hits = " << o.truncation_hits << "\n";
    out << p << "rollouts = " << run.rollouts << "\n";
  }
  for (std::size_t i = 0; i < report.oracle.size(); ++i) {
    const OracleRow& row = report.oracle[i];
    const std::string p = "oracle." + std::to_string(i) + ".";
    out << p << "x = " << row.x[0] << " " << row.x[1] << "\n";
    out << p << "xi_mc = " << row.xi_mc << "\n";
    out << p << "xi_pde = " << row.xi_pde << "\n";
    out << p << "xi_rel_error = " << row.xi_rel_error << "\n";
    out << p << "u_mc = " << row.u_mc[0] << " " << row.u_mc[1] << "\n";
    out << p << "u_pde = " << row.u_pde[0] << " " << row.u_pde[1] << "\n";
    out << p << "u_rel_error = " << row.u_rel_error << "\n";
    out << p << "control_checked = " << (row.control_checked ? "true" : "false") << "\n";
  }
  if (report.theorem3) {
    const Theorem3Report& t = *report.theorem3;
    out << "theorem3.gamma2 = " << t.gamma2 << "\n";
    out << "theorem3.saddle_performance = " << t.saddle_performance.mean << "\n";
    out << "theorem3.delta_gamma = " << t.delta_gamma.mean << "\n";
    for (std::size_t i = 0; i < t.entries.size(); ++i) {
      const Theorem3Entry& e = t.entries[i];
      const std::string p = "theorem3." + std::to_string(i) + ".";
      out << p << "adversary_scale = " << e.adversary_scale << "\n";
      out << p << "delta = " << e.delta << "\n";
      out << p << "lhs = " << e.lhs << "\n";
      out << p << "rhs = " << e.rhs << "\n";
      out << p << "difference = " << e.difference << "\n";
      out << p << "std_error = " << e.std_error << "\n";
    }
  }
  for (const Verdict& v : report.verdicts) {
    out << "verdict." << v.name << " = " << (v.pass ? "pass" : "fail") << "\n";
    out << "verdict." << v.name << ".detail = " << v.detail << "\n";
  }
}

void emit_outputs(const ExperimentReport& report, const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create " + out_dir + ": " + ec.message());
  auto write = [&](const std::string& name, const auto& body) {
    const fs::path path = fs::path(out_dir) / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::kIo, "cannot open " + path.string() + " for writing");
    body(out);
    out.flush();
    if (!out) throw Error(ErrorKind::kIo, "write to " + path.string() + " failed");
  };
  write("trajectories.csv", [&](std::ostream& o) { write_trajectories_csv(report, o); });
  write("summary.txt", [&](std::ostream& o) { write_summary(report, o); });
  write("config_echo.txt", [&](std::ostream& o) { emit_config(report.config, o); });
}

}  // namespace sdg
