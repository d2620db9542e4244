// Command-line front end: run / validate / oracle / report.
//
// Exit codes: 0 success, 2 configuration or validation error, 3 no valid
// lambda, 4 IO error, 5 anything else.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "sdg/closed_loop.hpp"
#include "sdg/config.hpp"
#include "sdg/error.hpp"
#include "sdg/experiments.hpp"
#include "sdg/pde_oracle.hpp"

namespace {

struct Overrides {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
  std::optional<int> workers;
  std::optional<std::string> repro;
};

void add_common(CLI::App* cmd, Overrides& o, bool with_out) {
  cmd->add_option("--config", o.config, "Scenario config file")->required()->check(CLI::ExistingFile);
  if (with_out) cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--seed", o.seed, "Master seed");
  cmd->add_option("--mode", o.mode, "desk or full")->check(CLI::IsMember({"desk", "full"}));
  cmd->add_option("--workers", o.workers, "Worker threads (0 = all cores)");
  cmd->add_option("--repro", o.repro, "Reproducible reductions")->check(CLI::IsMember({"on", "off"}));
}

sdg::ScenarioConfig load(const Overrides& o) {
  sdg::ScenarioConfig cfg = sdg::load_config(o.config);
  if (o.seed) cfg.numerics.master_seed = *o.seed;
  if (o.mode) cfg.mode = *o.mode == "full" ? sdg::RunMode::kFull : sdg::RunMode::kDesk;
  if (o.workers) cfg.numerics.workers = *o.workers;
  if (o.repro) cfg.numerics.reproducible = *o.repro == "on";
  return cfg;
}

int print_report(const sdg::ExperimentReport& report) {
  std::cout << "experiment " << sdg::to_string(report.config.experiment) << "  lambda " << report.lambda << "  "
            << report.wall_seconds << " s\n";
  for (const auto& run : report.runs) {
    const auto& o = run.outcome;
    std::cout << "  " << run.label << ": p_fail " << o.p_fail << " [" << o.p_fail_ci.low << ", " << o.p_fail_ci.high
              << "] over " << o.trials << " trials\n";
  }
  for (const auto& row : report.oracle) {
    std::cout << "  x = (" << row.x[0] << ", " << row.x[1] << "): xi err " << row.xi_rel_error << ", u err "
              << row.u_rel_error << (row.control_checked ? "" : " (not checked)") << "\n";
  }
  for (const auto& v : report.verdicts) std::cout << "  " << (v.pass ? "PASS " : "FAIL ") << v.name << ": " << v.detail << "\n";
  return 0;
}

int exit_code(sdg::ErrorKind kind) {
  switch (kind) {
    case sdg::ErrorKind::kConfig:
    case sdg::ErrorKind::kInvalidArgument:
      return 2;
    case sdg::ErrorKind::kNoValidLambda:
      return 3;
    case sdg::ErrorKind::kIo:
      return 4;
    default:
      return 5;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Path-integral solver for risk-minimizing stochastic differential games"};
  app.require_subcommand(1);

  Overrides run_opts, validate_opts, oracle_opts;
  std::string report_dir;
  auto* run = app.add_subcommand("run", "Run the configured experiment and write its outputs");
  add_common(run, run_opts, true);
  auto* validate = app.add_subcommand("validate", "Check a config and resolve its lambda");
  add_common(validate, validate_opts, false);
  auto* oracle = app.add_subcommand("oracle", "Cross-check path-integral estimates against the grid solver");
  add_common(oracle, oracle_opts, true);
  auto* report = app.add_subcommand("report", "Print the summary of a finished run");
  report->add_option("--out", report_dir, "Output directory of a run")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) {
      const sdg::ScenarioConfig cfg = load(run_opts);
      const sdg::ExperimentReport result = sdg::run_experiment(cfg);
      sdg::emit_outputs(result, run_opts.out);
      return print_report(result);
    }
    if (*validate) {
      const sdg::ScenarioConfig cfg = load(validate_opts);
      sdg::validate_config(cfg);
      const sdg::GameSpec spec = sdg::build_scenario_spec(cfg);
      const sdg::GameContext ctx = sdg::make_context(spec);
      std::cout << "valid: scenario " << sdg::to_string(cfg.scenario) << ", lambda " << ctx.lambda << ", noise scale "
                << ctx.noise_scale << "\n";
      return 0;
    }
    if (*oracle) {
      sdg::ScenarioConfig cfg = load(oracle_opts);
      cfg.experiment = sdg::ExperimentKind::kOracleXcheck;
      const sdg::ExperimentReport result = sdg::run_experiment(cfg);
      sdg::emit_outputs(result, oracle_opts.out);
      cfg.scenario = sdg::ScenarioKind::kPursuitEvasion;
      const sdg::GameSpec spec = sdg::build_scenario_spec(cfg);
      const auto path = std::filesystem::path(oracle_opts.out) / "xi_field.csv";
      std::ofstream field(path);
      if (!field) throw sdg::Error(sdg::ErrorKind::kIo, "cannot open " + path.string());
      sdg::write_csv(sdg::solve_dirichlet(spec, sdg::oracle_grid(cfg), result.lambda), field);
      return print_report(result);
    }
    if (*report) {
      const auto path = std::filesystem::path(report_dir) / "summary.txt";
      std::ifstream in(path);
      if (!in) throw sdg::Error(sdg::ErrorKind::kIo, "cannot open " + path.string());
      std::cout << in.rdbuf();
      return 0;
    }
  } catch (const sdg::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 5;
  }
  return 0;
}
