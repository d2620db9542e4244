#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sdg/game.hpp"
#include "sdg/path_integral.hpp"
#include "sdg/scenarios.hpp"

namespace sdg {

enum class ScenarioKind { kUnicycle, kPursuitEvasion, kCustom };
enum class ExperimentKind { kFig1, kFig2, kFig3, kFig4, kTheorem3, kOracleXcheck, kSingle };
enum class RunMode { kDesk, kFull };
/// kAuto picks structural gains for the unicycle and calibrated gains otherwise.
enum class GainChoice { kAuto, kStructural, kCalibrated };

using Box = std::array<double, 4>;  // x_min, x_max, y_min, y_max

struct NumericsConfig {
  double h = 0.01;
  /// Unset: 1000 in desk mode, 10000 in full mode.
  std::optional<int> rollouts;
  /// Unset: 5h in desk mode, h in full mode.
  std::optional<double> decision_interval;
  int trials = 100;
  std::uint64_t master_seed = 1;
  int workers = 1;
  bool reproducible = true;
  Sampling sampling = Sampling::kAntithetic;
  GainChoice gain_form = GainChoice::kAuto;
  GameSpec::ExitMonitoring exit_monitoring = GameSpec::ExitMonitoring::kDiscrete;

  bool operator==(const NumericsConfig&) const = default;
};

struct UnicycleConfig {
  double sigma = 0.1;
  double nu = 0.1;
  double k = 0.2;
  double gamma2 = 2.0;
  double eta = 0.67;
  double horizon = 10.0;
  std::vector<double> x0{-0.4, -0.4, 0.0, 0.0};
  Box workspace{-0.6, 0.6, -0.6, 0.6};
  std::vector<Box> obstacles;

  UnicycleConfig();
  bool operator==(const UnicycleConfig&) const = default;
};

struct PursuitEvasionConfig {
  double sigma_ex = 0.31622776601683794;
  double sigma_ey = 0.31622776601683794;
  double sigma_px = 0.31622776601683794;
  double sigma_py = 0.31622776601683794;
  double rho = 0.1;
  double rv2 = 2.0;
  double agent_weight = 1.0;
  double eta = 0.2;
  double horizon = 2.0;
  std::vector<double> x0{0.3, 0.3};
  double outer_radius = 0.0;

  bool operator==(const PursuitEvasionConfig&) const = default;
};

/// Linear game with quadratic costs; matrices are row-major.
struct CustomConfig {
  int dim = 0;
  int agent_dim = 0;
  int adversary_dim = 0;
  int noise_dim = 0;
  std::vector<double> drift, gain_u, gain_v, sigma, ru, rv, state_weight, terminal_weight;
  double eta = 1.0;
  std::vector<double> box_lower, box_upper, x0;
  double horizon = 1.0;

  bool operator==(const CustomConfig&) const = default;
};

struct ExperimentParams {
  std::vector<double> fig1_gamma2{2.0, 7.0};
  double fig1_eta = 0.67;
  double fig2_gamma2 = 3.0;
  double fig2_eta = 1.0;
  std::vector<double> fig4_rv2_grid{1.5, 2.0, 3.0, 5.0, 8.0};
  int fig3_max_trials = 200;
  double theorem3_gamma2 = 3.0;
  std::vector<double> theorem3_scales{1.0, 0.5};
  /// Interior states of the pursuit-evasion game, flattened (x, y) pairs.
  std::vector<double> oracle_states{0.3, 0.3, 0.2, 0.0, 0.0, 0.2, -0.2, 0.1, 0.15, -0.12,
                                    -0.25, -0.3, 0.5, 0.0, 0.15, 0.15, -0.2, 0.02, 0.0, -0.4};
  int oracle_rollouts = 100000;
  double oracle_step = 0.01;
  int oracle_nodes = 161;
  /// The grid covers [-w, w]^2. Rollouts are unbounded, so the box edge must
  /// lie where paths from the oracle states rarely reach within the horizon.
  double oracle_half_width = 2.0;

  bool operator==(const ExperimentParams&) const = default;
};

struct ScenarioConfig {
  ScenarioKind scenario = ScenarioKind::kPursuitEvasion;
  ExperimentKind experiment = ExperimentKind::kSingle;
  RunMode mode = RunMode::kDesk;
  NumericsConfig numerics;
  UnicycleConfig unicycle;
  PursuitEvasionConfig pe;
  CustomConfig custom;
  ExperimentParams params;

  int rollouts() const;
  double decision_interval() const;

  bool operator==(const ScenarioConfig&) const = default;
};

/// Flat "key = value" text; '#' starts a comment. Unknown keys, malformed
/// values and repeated keys raise ErrorKind::kConfig.
ScenarioConfig parse_config(std::istream& in);
ScenarioConfig parse_config_text(const std::string& text);
ScenarioConfig load_config(const std::string& path);

/// Every key, doubles with 17 significant digits.
void emit_config(const ScenarioConfig& cfg, std::ostream& out);
std::string emit_config_text(const ScenarioConfig& cfg);

/// Range checks plus a trial build of the scenario game (which raises
/// NoValidLambda for adversary weights <= 1).
void validate_config(const ScenarioConfig& cfg);

UnicycleParams unicycle_params(const ScenarioConfig& cfg);
PursuitEvasionParams pe_params(const ScenarioConfig& cfg);
LinearGameParams custom_params(const ScenarioConfig& cfg);

/// Scenario game with the configured gain form and exit monitoring applied.
GameSpec build_scenario_spec(const ScenarioConfig& cfg);
void apply_numerics(const ScenarioConfig& cfg, GameSpec& spec);

std::string to_string(ScenarioKind kind);
std::string to_string(ExperimentKind kind);
std::string to_string(RunMode mode);

}  // namespace sdg
