#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sdg/closed_loop.hpp"
#include "sdg/config.hpp"
#include "sdg/pde_oracle.hpp"

namespace sdg {

/// One closed-loop configuration of an experiment (a gamma^2, an r_v^2, an
/// aware or unaware agent, ...).
struct ConfigurationRun {
  std::string label;
  /// The swept parameter (gamma^2 or r_v^2), NaN when none.
  double parameter = 0.0;
  double lambda = 0.0;
  double noise_scale = 1.0;
  GameOutcome outcome;
  /// Rollouts drawn by the path-integral policies.
  long long rollouts = 0;
};

struct OracleRow {
  Vec x;
  double xi_mc = 0.0;
  double xi_pde = 0.0;
  double xi_rel_error = 0.0;
  Vec u_mc;
  Vec u_pde;
  double u_rel_error = 0.0;
  /// The control comparison applies only where |u_pde| > 0.05.
  bool control_checked = false;
};

struct Verdict {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct ExperimentReport {
  ScenarioConfig config;
  double lambda = 0.0;
  std::vector<ConfigurationRun> runs;
  std::vector<OracleRow> oracle;
  std::optional<Theorem3Report> theorem3;
  std::vector<Verdict> verdicts;
  double wall_seconds = 0.0;
  long long rollouts = 0;
  /// Dimensions of the game the runs were played on (CSV columns).
  int state_dim = 0;
  int agent_dim = 0;
  int adversary_dim = 0;
};

/// Grid of the oracle cross-check.
Grid2D oracle_grid(const ScenarioConfig& cfg);

/// Runs the configured experiment. Unicycle experiments (fig1, fig2,
/// theorem3) use the unicycle block of the config, pursuit-evasion ones
/// (fig3, fig4, oracle_xcheck) the pe block; single uses `scenario`.
ExperimentReport run_experiment(const ScenarioConfig& cfg);

/// Writes trajectories.csv, summary.txt and config_echo.txt into out_dir
/// (created when missing). Raises ErrorKind::kIo on failure.
void emit_outputs(const ExperimentReport& report, const std::string& out_dir);

void write_trajectories_csv(const ExperimentReport& report, std::ostream& out);
void write_summary(const ExperimentReport& report, std::ostream& out);

}  // namespace sdg
