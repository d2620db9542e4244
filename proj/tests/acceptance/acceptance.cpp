// Acceptance run: one PASS/FAIL line per criterion.
//
//   sdg_acceptance [--only 1,2,...] [--expect-fail 7,8] [--workers N]
//
// Exit status is 0 when every criterion passes or is listed in --expect-fail,
// 1 otherwise, 2 when a criterion threw.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sdg/closed_loop.hpp"
#include "sdg/config.hpp"
#include "sdg/error.hpp"
#include "sdg/experiments.hpp"
#include "sdg/path_integral.hpp"
#include "sdg/pde_oracle.hpp"
#include "sdg/scenarios.hpp"

namespace {

using namespace sdg;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v, int digits = 4) {
  std::ostringstream out;
  out << std::setprecision(digits) << v;
  return out.str();
}

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

int g_workers = 1;

ScenarioConfig desk_config(const std::string& text) {
  ScenarioConfig cfg = parse_config_text(text);
  cfg.numerics.workers = g_workers;
  return cfg;
}

const GameOutcome& run_named(const ExperimentReport& report, const std::string& label) {
  for (const auto& run : report.runs) {
    if (run.label == label) return run.outcome;
  }
  throw Error(ErrorKind::kInvalidArgument, "no run labelled " + label);
}

// 1. lambda(1 - 1/gamma^2) = 1 and its pursuit-evasion analogue.
Outcome lambda_resolution() {
  Outcome out{true, ""};
  for (double g2 : {2.0, 3.0, 7.0}) {
    UnicycleParams p;
    p.gamma2 = g2;
    const GameSpec spec = build_unicycle_spec(p);
    const double lambda = resolve_lambda(spec, default_probes(spec, 16, 1)).lambda;
    const double expected = g2 / (g2 - 1.0);  // solves lambda (1 - 1/g2) = 1
    if (std::abs(lambda - expected) > 1e-12) out.pass = false;
    out.detail += "gamma2=" + num(g2) + " -> " + num(lambda, 15) + "; ";
  }
  const GameSpec pe = build_pe_spec({});
  const double lambda_pe = resolve_lambda(pe, default_probes(pe, 16, 1)).lambda;
  if (std::abs(lambda_pe - 2.0) > 1e-12) out.pass = false;
  out.detail += "rv2=2 -> " + num(lambda_pe, 15) + "; ";
  try {
    UnicycleParams p;
    p.gamma2 = 0.5;
    build_unicycle_spec(p);
    out.pass = false;
    out.detail += "gamma2=0.5 accepted";
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kNoValidLambda) out.pass = false;
    out.detail += "gamma2=0.5 -> " + std::string(to_string(e.kind()));
  }
  return out;
}

// 2. xi = 1 - (1 - exp(-eta/lambda)) * exit fraction for every batch.
Outcome two_point_identity() {
  const GameSpec spec = build_pe_spec({});
  const double lambda = 2.0;
  double worst = 0.0;
  int batches = 0;
  for (const Vec& x : {v2(0.3, 0.3), v2(0.12, 0.0), v2(-0.5, 0.2), v2(0.8, -0.8)}) {
    for (Sampling sampling : {Sampling::kIndependent, Sampling::kAntithetic}) {
      for (int n : {1, 2, 101, 5000}) {
        const RolloutBatch batch = sample_batch(spec, x, 0.0, n, 0.01, {77, static_cast<std::uint64_t>(batches), 0, 0},
                                                {g_workers, true}, sampling);
        const double xi = xi_from_batch(batch, lambda).value;
        const double expected = 1.0 - (1.0 - std::exp(-spec.failure_weight / lambda)) * batch.exit_fraction();
        // Only the order of summation differs: N roundings of size eps.
        worst = std::max(worst, std::abs(xi - expected) / (4.0 * n * std::numeric_limits<double>::epsilon()));
        ++batches;
      }
    }
  }
  return {worst <= 1.0, std::to_string(batches) + " batches, worst deviation " + num(worst) + " x (4 N eps)"};
}

// 3 and 4 share one cross-check run.
ExperimentReport& oracle_report() {
  static ExperimentReport report = run_experiment(desk_config(
      "experiment = oracle_xcheck\n"
      "numerics.exit_monitoring = bridge\n"
      "numerics.sampling = antithetic\n"
      "numerics.gain_form = calibrated\n"));
  return report;
}

Outcome oracle_xi() {
  const ExperimentReport& report = oracle_report();
  double worst = 0.0;
  for (const auto& row : report.oracle) {
    worst = std::max(worst, std::abs(row.xi_mc - row.xi_pde) / row.xi_pde);
  }
  return {report.oracle.size() == 10 && worst <= 0.05,
          std::to_string(report.oracle.size()) + " states, N=" + std::to_string(report.config.params.oracle_rollouts) +
              ", max relative error " + num(worst)};
}

Outcome oracle_controls() {
  const ExperimentReport& report = oracle_report();
  double worst = 0.0;
  int checked = 0;
  for (const auto& row : report.oracle) {
    if (row.u_pde.norm() <= 0.05) continue;
    ++checked;
    worst = std::max(worst, (row.u_mc - row.u_pde).norm() / row.u_pde.norm());
  }
  return {checked > 0 && worst <= 0.10,
          std::to_string(checked) + " states with |u| > 0.05, max relative error " + num(worst)};
}

// 5. v* = u*/r_v^2 for every batch.
Outcome control_identity() {
  double worst = 0.0;
  int batches = 0;
  for (double rv2 : {1.5, 2.0, 3.0, 5.0, 8.0}) {
    PursuitEvasionParams p;
    p.rv2 = rv2;
    for (auto form : {GameSpec::GainForm::kStructural, GameSpec::GainForm::kNoiseCalibrated}) {
      GameSpec spec = build_pe_spec(p);
      spec.gain_form = form;
      const double lambda = attenuation_lambda(rv2);
      for (const Vec& x : {v2(0.3, 0.3), v2(0.2, 0.0), v2(-0.25, -0.3)}) {
        const SaddleControls sc = estimate_saddle_controls(spec, x, 0.0, lambda, 1000, 0.01,
                                                           {55, static_cast<std::uint64_t>(batches), 0, 0});
        const double scale = std::max(sc.u_star.norm(), std::numeric_limits<double>::min());
        worst = std::max(worst, (sc.v_star - sc.u_star / rv2).norm() / scale);
        ++batches;
      }
    }
  }
  return {worst <= 1e-14, std::to_string(batches) + " batches, max |v - u/rv2| / |u| = " + num(worst)};
}

// 6. C(u*, v) <= C(u*, v*) <= C(u, v*) under additive offsets. The game uses
// R_u = 5 I, R_v = 10 I so that the scenario noise satisfies the lambda
// identity exactly and (u*, v*) is the saddle point of this game.
Outcome saddle_property() {
  ScenarioConfig cfg = desk_config("pe.agent_weight = 5\n");
  const GameSpec spec = build_scenario_spec(cfg);
  const GameContext ctx = make_context(spec);
  TrialSettings s;
  s.step = cfg.numerics.h;
  s.decision_interval = cfg.decision_interval();
  s.record_path = false;
  const int trials = 200;
  const std::uint64_t seed = 606;
  const ExecutionPolicy exec{g_workers, true};
  PolicyHandle saddle = PolicyHandle::saddle(cfg.rollouts(), cfg.numerics.h);
  saddle.sampling = cfg.numerics.sampling;
  const GameOutcome base = estimate_failure_probability(ctx, saddle, saddle, trials, s, seed, exec);

  Outcome out{true, "C(u*,v*) = " + num(base.cost.mean) + "; "};
  const double magnitude = 0.1;
  for (int side = 0; side < 2; ++side) {
    double worst = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 5; ++k) {
      const double angle = 2.0 * M_PI * k / 5.0;
      PolicyHandle perturbed = saddle;
      perturbed.offset = magnitude * v2(std::cos(angle), std::sin(angle));
      const GameOutcome played = side == 0
                                     ? estimate_failure_probability(ctx, perturbed, saddle, trials, s, seed, exec)
                                     : estimate_failure_probability(ctx, saddle, perturbed, trials, s, seed, exec);
      const double se = std::hypot(base.cost.std_error, played.cost.std_error);
      // Agent deviations must not lower the cost, adversary deviations must not raise it.
      const double margin = side == 0 ? played.cost.mean - base.cost.mean : base.cost.mean - played.cost.mean;
      if (margin < -2.0 * se) out.pass = false;
      worst = std::min(worst, margin / se);
    }
    out.detail += std::string(side == 0 ? "agent" : "adversary") + " worst margin " + num(worst) + " se; ";
  }
  return out;
}

// 7. fig1: failure probability falls as gamma^2 grows.
Outcome fig1_trend() {
  const ExperimentReport report =
      run_experiment(desk_config("experiment = fig1\nscenario = unicycle_da\nfig1.gamma2_values = 2, 7\n"));
  const GameOutcome& low = report.runs.front().outcome;
  const GameOutcome& high = report.runs.back().outcome;
  const double gap = low.p_fail - high.p_fail;
  return {low.trials == 100 && high.trials == 100 && gap >= 0.15,
          "p_fail(2) = " + num(low.p_fail) + ", p_fail(7) = " + num(high.p_fail) + ", gap " + num(gap) +
              " (need >= 0.15)"};
}

// 8. fig2: the adversary-aware agent fails less often.
Outcome fig2_trend() {
  const ExperimentReport report = run_experiment(desk_config("experiment = fig2\nscenario = unicycle_da\n"));
  const GameOutcome& aware = run_named(report, "aware");
  const GameOutcome& unaware = run_named(report, "unaware");
  const double gap = unaware.p_fail - aware.p_fail;
  return {aware.trials == 100 && gap >= 0.2, "aware " + num(aware.p_fail) + ", unaware " + num(unaware.p_fail) +
                                                 ", gap " + num(gap) + " (need >= 0.2)"};
}

// 9. Failure probability non-increasing in r_v^2 within Wilson intervals.
Outcome fig4_monotone() {
  const ExperimentReport report = run_experiment(
      desk_config("experiment = fig4\nnumerics.trials = 200\nfig4.rv2_grid = 1.5, 2, 3, 5, 8\n"));
  Outcome out{report.runs.size() == 5, ""};
  for (std::size_t i = 0; i < report.runs.size(); ++i) {
    const GameOutcome& a = report.runs[i].outcome;
    out.detail += num(report.runs[i].parameter) + ":" + num(a.p_fail, 3) + " ";
    for (std::size_t j = i + 1; j < report.runs.size(); ++j) {
      if (report.runs[j].outcome.p_fail_ci.low > a.p_fail_ci.high) out.pass = false;
    }
  }
  return out;
}

// 10. Disturbance-attenuation inequality.
Outcome theorem3_bound() {
  const ExperimentReport report = run_experiment(
      desk_config("experiment = theorem3\ntheorem3.gamma2 = 3\ntheorem3.scales = 1, 0.5\n"));
  Outcome out{report.theorem3 && report.theorem3->entries.size() == 2, ""};
  if (!report.theorem3) return out;
  for (const auto& e : report.theorem3->entries) {
    if (e.difference < -2.0 * e.std_error) out.pass = false;
    out.detail += "scale " + num(e.adversary_scale) + ": lhs-rhs " + num(e.difference) + ", se " +
                  num(e.std_error) + "; ";
  }
  return out;
}

// 11. PDE solver checks.
Outcome pde_checks() {
  Outcome out{true, ""};
  auto grid_with = [](int nodes) {
    Grid2D g;
    g.nodes = {nodes, nodes};
    return g;
  };
  {
    GameSpec spec = build_pe_spec({});
    const double c = 0.7;
    spec.failure_weight = c;
    spec.terminal_cost = [c](const Vec&) { return c; };
    const PdeSolution sol = solve_dirichlet(spec, grid_with(41), 2.0);
    double worst = 0.0;
    for (const auto& slice : sol.slices) {
      for (double v : slice) worst = std::max(worst, std::abs(v - std::exp(-c / 2.0)));
    }
    if (worst > 1e-6) out.pass = false;
    out.detail += "constant error " + num(worst) + "; ";
  }
  PursuitEvasionParams p;
  p.agent_weight = 5.0;
  const GameSpec spec = build_pe_spec(p);
  auto region = [](const Vec& x) { return x.norm() >= 0.25 && x.norm() <= 0.75; };
  std::vector<double> rms;
  std::vector<double> xi0;
  for (int nodes : {41, 81, 161}) {
    const PdeSolution sol = solve_dirichlet(spec, grid_with(nodes), 2.0);
    rms.push_back(hji_residual(sol, spec, 1.0, region).rms);
    xi0.push_back(sol.xi(spec.x0, 0.0));
  }
  const double change = std::abs(xi0[2] / xi0[1] - 1.0);
  if (change > 0.01) out.pass = false;
  out.detail += "xi(x0) change 81->161 " + num(change) + "; residual ratios";
  for (std::size_t i = 1; i < rms.size(); ++i) {
    const double ratio = rms[i] / rms[i - 1];
    if (!(ratio <= 0.6)) out.pass = false;
    out.detail += " " + num(ratio, 3);
  }
  return out;
}

// 12. Byte-identical trajectories.csv across reruns and worker counts.
Outcome reproducibility() {
  const auto root = std::filesystem::temp_directory_path() / "sdg_acceptance_repro";
  std::filesystem::remove_all(root);
  auto read = [](const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  Outcome out{true, ""};
  int runs = 0;
  for (const char* text : {"numerics.trials = 6\nnumerics.rollouts = 300\npe.horizon = 0.5\n",
                           "scenario = unicycle_da\nnumerics.trials = 3\nnumerics.rollouts = 200\nunicycle.horizon = 1\n"}) {
    std::string reference;
    for (int workers : {1, 1, 2, 4}) {
      ScenarioConfig cfg = parse_config_text(text);
      cfg.numerics.workers = workers;
      cfg.numerics.master_seed = 2024;
      const auto dir = root / std::to_string(runs++);
      emit_outputs(run_experiment(cfg), dir.string());
      const std::string csv = read(dir / "trajectories.csv");
      if (reference.empty()) {
        reference = csv;
        out.detail += std::to_string(csv.size()) + " bytes; ";
      } else if (csv != reference) {
        out.pass = false;
        out.detail += "mismatch at workers=" + std::to_string(workers) + "; ";
      }
    }
  }
  std::filesystem::remove_all(root);
  out.detail += std::to_string(runs) + " runs compared";
  return out;
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> check;
};

std::set<int> parse_ids(const std::string& text) {
  std::set<int> ids;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) ids.insert(std::stoi(item));
  }
  return ids;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::string only, expect_fail;
  app.add_option("--only", only, "comma-separated criteria to run");
  app.add_option("--expect-fail", expect_fail, "criteria whose failure does not fail the run");
  app.add_option("--workers", g_workers, "worker threads")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);
  const std::set<int> selected = parse_ids(only);
  const std::set<int> tolerated = parse_ids(expect_fail);

  const std::vector<Criterion> criteria = {
      {1, "lambda resolution", lambda_resolution},
      {2, "two-point weight identity", two_point_identity},
      {3, "oracle agreement on xi", oracle_xi},
      {4, "oracle agreement on controls", oracle_controls},
      {5, "control identity v = u/rv2", control_identity},
      {6, "saddle-point property", saddle_property},
      {7, "fig1 trend", fig1_trend},
      {8, "fig2 trend", fig2_trend},
      {9, "fig4 monotonicity", fig4_monotone},
      {10, "theorem3 inequality", theorem3_bound},
      {11, "numerical PDE checks", pde_checks},
      {12, "reproducibility", reproducibility},
  };
  int failed = 0, passed = 0, errors = 0, expected = 0;
  for (const Criterion& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome result;
    bool threw = false;
    try {
      result = c.check();
    } catch (const std::exception& e) {
      threw = true;
      result = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << (result.pass ? "PASS" : "FAIL") << "  " << std::setw(2) << c.id << "  " << c.name << "  ["
              << result.detail << "]  (" << std::fixed << std::setprecision(1) << secs << " s)"
              << std::defaultfloat << std::endl;
    if (result.pass) {
      ++passed;
    } else if (threw) {
      ++errors;
    } else if (tolerated.count(c.id)) {
      ++expected;
    } else {
      ++failed;
    }
  }
  std::cout << passed << " passed, " << failed + errors + expected << " failed";
  if (expected) std::cout << " (" << expected << " listed in --expect-fail)";
  std::cout << std::endl;
  if (errors) return 2;
  return failed ? 1 : 0;
}
