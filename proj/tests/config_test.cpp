#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "sdg/config.hpp"
#include "sdg/error.hpp"
#include "sdg/experiments.hpp"

namespace sdg {
namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::kInvalidArgument;
}

TEST(ParseConfig, RoundTrip) {
  ScenarioConfig cfg;
  cfg.scenario = ScenarioKind::kUnicycle;
  cfg.experiment = ExperimentKind::kFig1;
  cfg.numerics.h = 0.005;
  cfg.numerics.rollouts = 321;
  cfg.numerics.master_seed = 18446744073709551615ULL;
  cfg.unicycle.gamma2 = 1.0 / 3.0 + 2.0;
  cfg.unicycle.obstacles = {{-0.3, -0.2, 0.1, 0.2}, {0.0, 0.1, -0.1, 0.0}};
  cfg.pe.agent_weight = 5.0;
  cfg.params.fig4_rv2_grid = {1.25, 9.0};
  const ScenarioConfig back = parse_config_text(emit_config_text(cfg));
  EXPECT_EQ(back, cfg);
  EXPECT_EQ(emit_config_text(back), emit_config_text(cfg));
}

TEST(ParseConfig, CommentsAndDefaults) {
  const ScenarioConfig cfg = parse_config_text(
      "# desk run\n"
      "scenario = unicycle_da   # trailing comment\n"
      "\n"
      "unicycle.gamma2 = 7\n");
  EXPECT_EQ(cfg.scenario, ScenarioKind::kUnicycle);
  EXPECT_EQ(cfg.unicycle.gamma2, 7.0);
  EXPECT_EQ(cfg.unicycle.sigma, ScenarioConfig{}.unicycle.sigma);
  EXPECT_EQ(cfg.rollouts(), 1000);
  EXPECT_DOUBLE_EQ(cfg.decision_interval(), 0.05);
}

TEST(ParseConfig, FullModeDefaults) {
  const ScenarioConfig cfg = parse_config_text("mode = full\n");
  EXPECT_EQ(cfg.rollouts(), 10000);
  EXPECT_DOUBLE_EQ(cfg.decision_interval(), cfg.numerics.h);
}

TEST(ParseConfig, Errors) {
  for (const char* text : {"unicycle.gama2 = 3\n", "unicycle.gamma2 = 3\nunicycle.gamma2 = 4\n",
                           "unicycle.gamma2 = three\n", "numerics.trials = 1.5\n", "scenario = boat\n",
                           "no equals sign\n", "pe.x0 = 0.3, abc\n", "numerics.master_seed = -1\n"}) {
    EXPECT_EQ(kind_of([&] { parse_config_text(text); }), ErrorKind::kConfig) << text;
  }
  EXPECT_EQ(kind_of([] { load_config("/nonexistent/run.cfg"); }), ErrorKind::kIo);
}

TEST(ParseConfig, ErrorNamesLine) {
  try {
    parse_config_text("scenario = unicycle_da\n\nbogus.key = 1\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(ValidateConfig, RangeChecks) {
  for (const char* text : {"numerics.h = 0\n", "numerics.trials = -1\n", "numerics.rollouts = 0\n",
                           "numerics.h = 0.01\nnumerics.decision_interval = 0.015\n", "pe.rho = -0.1\n",
                           "pe.agent_weight = 0\n", "pe.x0 = 0.3\n"}) {
    EXPECT_EQ(kind_of([&] { validate_config(parse_config_text(text)); }), ErrorKind::kConfig) << text;
  }
  EXPECT_NO_THROW(validate_config(ScenarioConfig{}));
}

TEST(ValidateConfig, WeakAdversaryWeightHasNoLambda) {
  const ScenarioConfig cfg = parse_config_text("scenario = unicycle_da\nunicycle.gamma2 = 0.5\n");
  EXPECT_EQ(kind_of([&] { validate_config(cfg); }), ErrorKind::kNoValidLambda);
  const ScenarioConfig sweep = parse_config_text("experiment = fig4\nfig4.rv2_grid = 2, 0.9\n");
  EXPECT_EQ(kind_of([&] { validate_config(sweep); }), ErrorKind::kNoValidLambda);
}

TEST(BuildScenarioSpec, GainForms) {
  ScenarioConfig cfg;
  EXPECT_EQ(build_scenario_spec(cfg).gain_form, GameSpec::GainForm::kNoiseCalibrated);
  cfg.scenario = ScenarioKind::kUnicycle;
  EXPECT_EQ(build_scenario_spec(cfg).gain_form, GameSpec::GainForm::kStructural);
  cfg.numerics.gain_form = GainChoice::kCalibrated;
  EXPECT_EQ(build_scenario_spec(cfg).gain_form, GameSpec::GainForm::kNoiseCalibrated);
}

std::string csv_of(const ScenarioConfig& cfg) {
  std::ostringstream out;
  write_trajectories_csv(run_experiment(cfg), out);
  return out.str();
}

TEST(RunExperiment, EmptyTrialsGiveHeaderOnly) {
  ScenarioConfig cfg;
  cfg.numerics.trials = 0;
  const ExperimentReport report = run_experiment(cfg);
  ASSERT_EQ(report.runs.size(), 1u);
  EXPECT_EQ(report.runs[0].outcome.trials, 0);
  std::ostringstream csv;
  write_trajectories_csv(report, csv);
  EXPECT_EQ(csv.str(), "label,trial_id,step,t,x0,x1,u0,u1,v0,v1,exit\n");
  std::ostringstream summary;
  write_summary(report, summary);
  EXPECT_NE(summary.str().find("trials = 0"), std::string::npos) << summary.str();
}

TEST(RunExperiment, CsvIsByteIdenticalAcrossRunsAndWorkers) {
  ScenarioConfig cfg = parse_config_text(
      "numerics.trials = 4\nnumerics.rollouts = 100\npe.horizon = 0.3\nnumerics.workers = 1\n");
  const std::string first = csv_of(cfg);
  EXPECT_EQ(csv_of(cfg), first);
  cfg.numerics.workers = 3;
  EXPECT_EQ(csv_of(cfg), first);
  EXPECT_GT(std::count(first.begin(), first.end(), '\n'), 10);
}

TEST(RunExperiment, PursuitEvasionEpisodesFindBothOutcomes) {
  const ScenarioConfig cfg =
      parse_config_text("experiment = fig3\nnumerics.rollouts = 200\nfig3.max_trials = 60\n");
  const ExperimentReport report = run_experiment(cfg);
  ASSERT_EQ(report.runs.size(), 2u);
  for (const auto& run : report.runs) EXPECT_EQ(run.outcome.trials, 1) << run.label;
  EXPECT_EQ(report.runs[0].outcome.failures + report.runs[1].outcome.failures, 1);
}

TEST(EmitOutputs, WritesFilesAndReportsIoErrors) {
  ScenarioConfig cfg;
  cfg.numerics.trials = 1;
  cfg.numerics.rollouts = 50;
  cfg.pe.horizon = 0.1;
  const ExperimentReport report = run_experiment(cfg);
  const auto dir = std::filesystem::temp_directory_path() / "sdg_config_test_out";
  std::filesystem::remove_all(dir);
  emit_outputs(report, dir.string());
  for (const char* name : {"trajectories.csv", "summary.txt", "config_echo.txt"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / name)) << name;
  }
  EXPECT_EQ(load_config((dir / "config_echo.txt").string()), cfg);
  std::filesystem::remove_all(dir);
  std::ofstream(dir.string() + "_file") << "x";
  EXPECT_EQ(kind_of([&] { emit_outputs(report, dir.string() + "_file"); }), ErrorKind::kIo);
  std::filesystem::remove(dir.string() + "_file");
}

TEST(ExampleConfigs, AllValidate) {
  int count = 0;
  for (const auto& entry : std::filesystem::directory_iterator(std::string(SDG_SOURCE_DIR) + "/configs")) {
    if (entry.path().extension() != ".cfg") continue;
    ++count;
    EXPECT_NO_THROW(validate_config(load_config(entry.path().string()))) << entry.path();
  }
  EXPECT_GE(count, 6);
}

}  // namespace
}  // namespace sdg
