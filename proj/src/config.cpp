#include "sdg/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "sdg/error.hpp"

namespace sdg {

UnicycleConfig::UnicycleConfig() {
  for (const Rect& r : UnicycleParams::default_obstacles()) obstacles.push_back({r.x_min, r.x_max, r.y_min, r.y_max});
}

int ScenarioConfig::rollouts() const {
  if (numerics.rollouts) return *numerics.rollouts;
  return mode == RunMode::kFull ? 10000 : 1000;
}

double ScenarioConfig::decision_interval() const {
  if (numerics.decision_interval) return *numerics.decision_interval;
  return mode == RunMode::kFull ? numerics.h : 5.0 * numerics.h;
}

namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorKind::kConfig, msg); }

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size() || !std::isfinite(d)) config_error(key + ": expected a finite number, got '" + v + "'");
  return d;
}

long long to_integer(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long long i = 0;
  try {
    i = std::stoll(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) config_error(key + ": expected an integer, got '" + v + "'");
  return i;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  unsigned long long i = 0;
  try {
    if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
    i = std::stoull(v, &used, 0);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) config_error(key + ": expected an unsigned integer, got '" + v + "'");
  return i;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "on") return true;
  if (v == "false" || v == "off") return false;
  config_error(key + ": expected true/false, got '" + v + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::string cleaned = v;
  for (char& c : cleaned) {
    if (c == ',' || c == ';') c = ' ';
  }
  std::istringstream in(cleaned);
  std::string item;
  while (in >> item) out.push_back(to_double(key, item));
  return out;
}

std::string list_text(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? " " : "") + fmt(v[i]);
  return out;
}

std::vector<Box> to_boxes(const std::string& key, const std::string& v) {
  std::vector<Box> out;
  std::istringstream in(v);
  std::string group;
  while (std::getline(in, group, ';')) {
    if (trim(group).empty()) continue;
    const auto nums = to_list(key, group);
    if (nums.size() != 4) config_error(key + ": each box needs x_min x_max y_min y_max");
    out.push_back({nums[0], nums[1], nums[2], nums[3]});
  }
  return out;
}

std::string boxes_text(const std::vector<Box>& boxes) {
  std::string out;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    if (i) out += "; ";
    out += list_text({boxes[i].begin(), boxes[i].end()});
  }
  return out;
}

template <typename E>
E to_enum(const std::string& key, const std::string& v, const std::vector<std::pair<std::string, E>>& names) {
  for (const auto& [name, value] : names) {
    if (name == v) return value;
  }
  std::string allowed;
  for (const auto& [name, value] : names) allowed += (allowed.empty() ? "" : ", ") + name;
  config_error(key + ": '" + v + "' is not one of " + allowed);
}

template <typename E>
std::string enum_text(E value, const std::vector<std::pair<std::string, E>>& names) {
  for (const auto& [name, e] : names) {
    if (e == value) return name;
  }
  return "?";
}

const std::vector<std::pair<std::string, ScenarioKind>> kScenarioNames{
    {"unicycle_da", ScenarioKind::kUnicycle},
    {"pursuit_evasion", ScenarioKind::kPursuitEvasion},
    {"custom", ScenarioKind::kCustom}};
const std::vector<std::pair<std::string, ExperimentKind>> kExperimentNames{
    {"fig1", ExperimentKind::kFig1},         {"fig2", ExperimentKind::kFig2},
    {"fig3", ExperimentKind::kFig3},         {"fig4", ExperimentKind::kFig4},
    {"theorem3", ExperimentKind::kTheorem3}, {"oracle_xcheck", ExperimentKind::kOracleXcheck},
    {"single", ExperimentKind::kSingle}};
const std::vector<std::pair<std::string, RunMode>> kModeNames{{"desk", RunMode::kDesk}, {"full", RunMode::kFull}};
const std::vector<std::pair<std::string, Sampling>> kSamplingNames{{"independent", Sampling::kIndependent},
                                                                    {"antithetic", Sampling::kAntithetic}};
const std::vector<std::pair<std::string, GainChoice>> kGainNames{
    {"auto", GainChoice::kAuto}, {"structural", GainChoice::kStructural}, {"calibrated", GainChoice::kCalibrated}};
const std::vector<std::pair<std::string, GameSpec::ExitMonitoring>> kExitNames{
    {"discrete", GameSpec::ExitMonitoring::kDiscrete}, {"bridge", GameSpec::ExitMonitoring::kBrownianBridge}};

struct Field {
  std::string key;
  std::function<std::optional<std::string>(const ScenarioConfig&)> get;
  std::function<void(ScenarioConfig&, const std::string&)> set;
};

template <typename Ref>
Field number_field(const std::string& key, Ref ref) {
  return {key, [ref](const ScenarioConfig& c) -> std::optional<std::string> { return fmt(ref(c)); },
          [ref, key](ScenarioConfig& c, const std::string& v) { ref(c) = to_double(key, v); }};
}

template <typename Ref>
Field int_field(const std::string& key, Ref ref) {
  return {key,
          [ref](const ScenarioConfig& c) -> std::optional<std::string> {
            return std::to_string(ref(c));
          },
          [ref, key](ScenarioConfig& c, const std::string& v) {
            const long long i = to_integer(key, v);
            if (i < std::numeric_limits<int>::min() || i > std::numeric_limits<int>::max()) {
              config_error(key + ": out of range");
            }
            ref(c) = static_cast<int>(i);
          }};
}

template <typename Ref>
Field list_field(const std::string& key, Ref ref) {
  return {key, [ref](const ScenarioConfig& c) -> std::optional<std::string> { return list_text(ref(c)); },
          [ref, key](ScenarioConfig& c, const std::string& v) { ref(c) = to_list(key, v); }};
}

template <typename E, typename Ref>
Field enum_field(const std::string& key, Ref ref, const std::vector<std::pair<std::string, E>>& names) {
  return {key,
          [ref, &names](const ScenarioConfig& c) -> std::optional<std::string> {
            return enum_text(ref(c), names);
          },
          [ref, key, &names](ScenarioConfig& c, const std::string& v) { ref(c) = to_enum(key, v, names); }};
}

#define SDG_REF(expr) [](auto& c) -> auto& { return c.expr; }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back(enum_field("scenario", SDG_REF(scenario), kScenarioNames));
    f.push_back(enum_field("experiment", SDG_REF(experiment), kExperimentNames));
    f.push_back(enum_field("mode", SDG_REF(mode), kModeNames));

    f.push_back(number_field("numerics.h", SDG_REF(numerics.h)));
    f.push_back({"numerics.rollouts",
                 [](const ScenarioConfig& c) -> std::optional<std::string> {
                   if (!c.numerics.rollouts) return std::nullopt;
                   return std::to_string(*c.numerics.rollouts);
                 },
                 [](ScenarioConfig& c, const std::string& v) {
                   const long long i = to_integer("numerics.rollouts", v);
                   if (i < 1 || i > std::numeric_limits<int>::max()) config_error("numerics.rollouts: out of range");
                   c.numerics.rollouts = static_cast<int>(i);
                 }});
    f.push_back({"numerics.decision_interval",
                 [](const ScenarioConfig& c) -> std::optional<std::string> {
                   if (!c.numerics.decision_interval) return std::nullopt;
                   return fmt(*c.numerics.decision_interval);
                 },
                 [](ScenarioConfig& c, const std::string& v) {
                   c.numerics.decision_interval = to_double("numerics.decision_interval", v);
                 }});
    f.push_back(int_field("numerics.trials", SDG_REF(numerics.trials)));
    f.push_back({"numerics.master_seed",
                 [](const ScenarioConfig& c) -> std::optional<std::string> {
                   return std::to_string(c.numerics.master_seed);
                 },
                 [](ScenarioConfig& c, const std::string& v) { c.numerics.master_seed = to_u64("numerics.master_seed", v); }});
    f.push_back(int_field("numerics.workers", SDG_REF(numerics.workers)));
    f.push_back({"numerics.reproducible",
                 [](const ScenarioConfig& c) -> std::optional<std::string> {
                   return std::string(c.numerics.reproducible ? "true" : "false");
                 },
                 [](ScenarioConfig& c, const std::string& v) { c.numerics.reproducible = to_bool("numerics.reproducible", v); }});
    f.push_back(enum_field("numerics.sampling", SDG_REF(numerics.sampling), kSamplingNames));
    f.push_back(enum_field("numerics.gain_form", SDG_REF(numerics.gain_form), kGainNames));
    f.push_back(enum_field("numerics.exit_monitoring", SDG_REF(numerics.exit_monitoring), kExitNames));

    f.push_back(number_field("unicycle.sigma", SDG_REF(unicycle.sigma)));
    f.push_back(number_field("unicycle.nu", SDG_REF(unicycle.nu)));
    f.push_back(number_field("unicycle.k", SDG_REF(unicycle.k)));
    f.push_back(number_field("unicycle.gamma2", SDG_REF(unicycle.gamma2)));
    f.push_back(number_field("unicycle.eta", SDG_REF(unicycle.eta)));
    f.push_back(number_field("unicycle.horizon", SDG_REF(unicycle.horizon)));
    f.push_back(list_field("unicycle.x0", SDG_REF(unicycle.x0)));
    f.push_back({"unicycle.workspace",
                 [](const ScenarioConfig& c) -> std::optional<std::string> {
                   return list_text({c.unicycle.workspace.begin(), c.unicycle.workspace.end()});
                 },
                 [](ScenarioConfig& c, const std::string& v) {
                   const auto b = to_boxes("unicycle.workspace", v);
                   if (b.size() != 1) config_error("unicycle.workspace: expected one box");
                   c.unicycle.workspace = b[0];
                 }});
    f.push_back({"unicycle.obstacles",
                 [](const ScenarioConfig& c) -> std::optional<std::string> { return boxes_text(c.unicycle.obstacles); },
                 [](ScenarioConfig& c, const std::string& v) { c.unicycle.obstacles = to_boxes("unicycle.obstacles", v); }});

    f.push_back(number_field("pe.sigma_ex", SDG_REF(pe.sigma_ex)));
    f.push_back(number_field("pe.sigma_ey", SDG_REF(pe.sigma_ey)));
    f.push_back(number_field("pe.sigma_px", SDG_REF(pe.sigma_px)));
    f.push_back(number_field("pe.sigma_py", SDG_REF(pe.sigma_py)));
    f.push_back(number_field("pe.rho", SDG_REF(pe.rho)));
    f.push_back(number_field("pe.rv2", SDG_REF(pe.rv2)));
    f.push_back(number_field("pe.agent_weight", SDG_REF(pe.agent_weight)));
    f.push_back(number_field("pe.eta", SDG_REF(pe.eta)));
    f.push_back(number_field("pe.horizon", SDG_REF(pe.horizon)));
    f.push_back(list_field("pe.x0", SDG_REF(pe.x0)));
    f.push_back(number_field("pe.outer_radius", SDG_REF(pe.outer_radius)));

    f.push_back(int_field("custom.dim", SDG_REF(custom.dim)));
    f.push_back(int_field("custom.agent_dim", SDG_REF(custom.agent_dim)));
    f.push_back(int_field("custom.adversary_dim", SDG_REF(custom.adversary_dim)));
    f.push_back(int_field("custom.noise_dim", SDG_REF(custom.noise_dim)));
    f.push_back(list_field("custom.drift", SDG_REF(custom.drift)));
    f.push_back(list_field("custom.gain_u", SDG_REF(custom.gain_u)));
    f.push_back(list_field("custom.gain_v", SDG_REF(custom.gain_v)));
    f.push_back(list_field("custom.sigma", SDG_REF(custom.sigma)));
    f.push_back(list_field("custom.ru", SDG_REF(custom.ru)));
    f.push_back(list_field("custom.rv", SDG_REF(custom.rv)));
    f.push_back(list_field("custom.state_weight", SDG_REF(custom.state_weight)));
    f.push_back(list_field("custom.terminal_weight", SDG_REF(custom.terminal_weight)));
    f.push_back(number_field("custom.eta", SDG_REF(custom.eta)));
    f.push_back(list_field("custom.box_lower", SDG_REF(custom.box_lower)));
    f.push_back(list_field("custom.box_upper", SDG_REF(custom.box_upper)));
    f.push_back(list_field("custom.x0", SDG_REF(custom.x0)));
    f.push_back(number_field("custom.horizon", SDG_REF(custom.horizon)));

    f.push_back(list_field("fig1.gamma2_values", SDG_REF(params.fig1_gamma2)));
    f.push_back(number_field("fig1.eta", SDG_REF(params.fig1_eta)));
    f.push_back(number_field("fig2.gamma2", SDG_REF(params.fig2_gamma2)));
    f.push_back(number_field("fig2.eta", SDG_REF(params.fig2_eta)));
    f.push_back(int_field("fig3.max_trials", SDG_REF(params.fig3_max_trials)));
    f.push_back(list_field("fig4.rv2_grid", SDG_REF(params.fig4_rv2_grid)));
    f.push_back(number_field("theorem3.gamma2", SDG_REF(params.theorem3_gamma2)));
    f.push_back(list_field("theorem3.scales", SDG_REF(params.theorem3_scales)));
    f.push_back(list_field("oracle.states", SDG_REF(params.oracle_states)));
    f.push_back(int_field("oracle.rollouts", SDG_REF(params.oracle_rollouts)));
    f.push_back(number_field("oracle.step", SDG_REF(params.oracle_step)));
    f.push_back(int_field("oracle.nodes", SDG_REF(params.oracle_nodes)));
    f.push_back(number_field("oracle.half_width", SDG_REF(params.oracle_half_width)));
    return f;
  }();
  return table;
}

#undef SDG_REF

Mat matrix(const std::string& key, const std::vector<double>& v, int rows, int cols) {
  if (rows <= 0 || cols <= 0 || static_cast<int>(v.size()) != rows * cols) {
    std::ostringstream msg;
    msg << "custom." << key << ": expected " << rows << "x" << cols << " entries, got " << v.size();
    config_error(msg.str());
  }
  Mat m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = v[static_cast<std::size_t>(r * cols + c)];
  }
  return m;
}

Vec vector_of(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

void require(bool ok, const std::string& msg) {
  if (!ok) config_error(msg);
}

}  // namespace

ScenarioConfig parse_config(std::istream& in) {
  std::map<std::string, const Field*> by_key;
  for (const Field& f : fields()) by_key[f.key] = &f;
  ScenarioConfig cfg;
  std::set<std::string> seen;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "line " + std::to_string(number) + ": ";
    if (eq == std::string::npos) config_error(where + "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = by_key.find(key);
    if (it == by_key.end()) config_error(where + "unknown key '" + key + "'");
    if (!seen.insert(key).second) config_error(where + "repeated key '" + key + "'");
    try {
      it->second->set(cfg, value);
    } catch (const Error& e) {
      config_error(where + e.detail());
    }
  }
  return cfg;
}

ScenarioConfig parse_config_text(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open config " + path);
  return parse_config(in);
}

void emit_config(const ScenarioConfig& cfg, std::ostream& out) {
  for (const Field& f : fields()) {
    if (const auto v = f.get(cfg)) out << f.key << " = " << *v << "\n";
  }
}

std::string emit_config_text(const ScenarioConfig& cfg) {
  std::ostringstream out;
  emit_config(cfg, out);
  return out.str();
}

UnicycleParams unicycle_params(const ScenarioConfig& cfg) {
  const UnicycleConfig& u = cfg.unicycle;
  require(u.x0.size() == 4, "unicycle.x0 needs 4 entries");
  UnicycleParams p;
  p.sigma = u.sigma;
  p.nu = u.nu;
  p.k = u.k;
  p.gamma2 = u.gamma2;
  p.eta = u.eta;
  p.horizon = u.horizon;
  p.x0 = vector_of(u.x0);
  p.workspace = {u.workspace[0], u.workspace[1], u.workspace[2], u.workspace[3]};
  p.obstacles.clear();
  for (const Box& b : u.obstacles) p.obstacles.push_back({b[0], b[1], b[2], b[3]});
  return p;
}

PursuitEvasionParams pe_params(const ScenarioConfig& cfg) {
  const PursuitEvasionConfig& e = cfg.pe;
  require(e.x0.size() == 2, "pe.x0 needs 2 entries");
  PursuitEvasionParams p;
  p.sigma_ex = e.sigma_ex;
  p.sigma_ey = e.sigma_ey;
  p.sigma_px = e.sigma_px;
  p.sigma_py = e.sigma_py;
  p.rho = e.rho;
  p.rv2 = e.rv2;
  p.agent_weight = e.agent_weight;
  p.eta = e.eta;
  p.horizon = e.horizon;
  p.x0 = vector_of(e.x0);
  p.outer_radius = e.outer_radius;
  return p;
}

LinearGameParams custom_params(const ScenarioConfig& cfg) {
  const CustomConfig& c = cfg.custom;
  require(c.dim > 0 && c.agent_dim > 0 && c.adversary_dim > 0 && c.noise_dim > 0,
          "custom: dim, agent_dim, adversary_dim and noise_dim must be positive");
  LinearGameParams p;
  p.drift = matrix("drift", c.drift, c.dim, c.dim);
  p.gain_u = matrix("gain_u", c.gain_u, c.dim, c.agent_dim);
  p.gain_v = matrix("gain_v", c.gain_v, c.dim, c.adversary_dim);
  p.sigma = matrix("sigma", c.sigma, c.dim, c.noise_dim);
  p.ru = matrix("ru", c.ru, c.agent_dim, c.agent_dim);
  p.rv = matrix("rv", c.rv, c.adversary_dim, c.adversary_dim);
  p.state_weight = matrix("state_weight", c.state_weight, c.dim, c.dim);
  p.terminal_weight = matrix("terminal_weight", c.terminal_weight, c.dim, c.dim);
  p.eta = c.eta;
  require(static_cast<int>(c.box_lower.size()) == c.dim && static_cast<int>(c.box_upper.size()) == c.dim &&
              static_cast<int>(c.x0.size()) == c.dim,
          "custom: box_lower, box_upper and x0 need dim entries");
  p.box_lower = vector_of(c.box_lower);
  p.box_upper = vector_of(c.box_upper);
  p.x0 = vector_of(c.x0);
  p.horizon = c.horizon;
  return p;
}

void apply_numerics(const ScenarioConfig& cfg, GameSpec& spec) {
  GainChoice g = cfg.numerics.gain_form;
  if (g == GainChoice::kAuto) g = cfg.scenario == ScenarioKind::kUnicycle ? GainChoice::kStructural : GainChoice::kCalibrated;
  spec.gain_form = g == GainChoice::kStructural ? GameSpec::GainForm::kStructural : GameSpec::GainForm::kNoiseCalibrated;
  spec.exit_monitoring = cfg.numerics.exit_monitoring;
}

GameSpec build_scenario_spec(const ScenarioConfig& cfg) {
  GameSpec spec;
  switch (cfg.scenario) {
    case ScenarioKind::kUnicycle:
      spec = build_unicycle_spec(unicycle_params(cfg));
      break;
    case ScenarioKind::kPursuitEvasion:
      spec = build_pe_spec(pe_params(cfg));
      break;
    case ScenarioKind::kCustom:
      spec = build_linear_spec(custom_params(cfg));
      break;
  }
  apply_numerics(cfg, spec);
  return spec;
}

void validate_config(const ScenarioConfig& cfg) {
  const NumericsConfig& n = cfg.numerics;
  require(n.h > 0.0, "numerics.h must be positive");
  require(cfg.rollouts() >= 2, "numerics.rollouts must be at least 2");
  require(n.trials >= 0, "numerics.trials must be non-negative");
  require(n.workers >= 0, "numerics.workers must be non-negative (0 = all cores)");
  const double ratio = cfg.decision_interval() / n.h;
  require(cfg.decision_interval() > 0.0 && ratio >= 1.0 - 1e-9 && std::abs(ratio - std::round(ratio)) <= 1e-9 * ratio,
          "numerics.decision_interval must be a positive multiple of numerics.h");

  const UnicycleConfig& u = cfg.unicycle;
  require(u.sigma > 0.0 && u.nu > 0.0 && u.k >= 0.0 && u.eta > 0.0 && u.horizon > 0.0,
          "unicycle: sigma, nu, eta, horizon must be positive and k non-negative");
  require(u.workspace[0] < u.workspace[1] && u.workspace[2] < u.workspace[3], "unicycle.workspace is empty");
  for (const Box& b : u.obstacles) require(b[0] < b[1] && b[2] < b[3], "unicycle.obstacles: empty box");
  const PursuitEvasionConfig& e = cfg.pe;
  require(e.sigma_ex >= 0.0 && e.sigma_ey >= 0.0 && e.sigma_px >= 0.0 && e.sigma_py >= 0.0,
          "pe: noise levels must be non-negative");
  require(e.agent_weight > 0.0, "pe.agent_weight must be positive");
  require(e.rho > 0.0 && e.eta > 0.0 && e.horizon > 0.0 && e.outer_radius >= 0.0,
          "pe: rho, eta, horizon must be positive");

  const ExperimentParams& p = cfg.params;
  require(!p.fig1_gamma2.empty(), "fig1.gamma2_values is empty");
  require(p.fig1_eta > 0.0 && p.fig2_eta > 0.0, "fig1.eta and fig2.eta must be positive");
  require(!p.fig4_rv2_grid.empty(), "fig4.rv2_grid is empty");
  require(p.fig3_max_trials >= 2, "fig3.max_trials must be at least 2");
  require(!p.theorem3_scales.empty(), "theorem3.scales is empty");
  require(!p.oracle_states.empty() && p.oracle_states.size() % 2 == 0, "oracle.states needs (x, y) pairs");
  require(p.oracle_rollouts >= 2 && p.oracle_step > 0.0 && p.oracle_nodes >= 5 && p.oracle_half_width > 0.0,
          "oracle: bad numerics");

  // Every game the experiment will build must certify its lambda.
  auto check = [&](ScenarioConfig c) { (void)build_scenario_spec(c); };
  switch (cfg.experiment) {
    case ExperimentKind::kFig1:
      for (double g2 : p.fig1_gamma2) {
        ScenarioConfig c = cfg;
        c.scenario = ScenarioKind::kUnicycle;
        c.unicycle.gamma2 = g2;
        c.unicycle.eta = p.fig1_eta;
        check(c);
      }
      break;
    case ExperimentKind::kFig2:
    case ExperimentKind::kTheorem3: {
      ScenarioConfig c = cfg;
      c.scenario = ScenarioKind::kUnicycle;
      c.unicycle.gamma2 = cfg.experiment == ExperimentKind::kFig2 ? p.fig2_gamma2 : p.theorem3_gamma2;
      if (cfg.experiment == ExperimentKind::kFig2) c.unicycle.eta = p.fig2_eta;
      check(c);
      break;
    }
    case ExperimentKind::kFig4:
      for (double rv2 : p.fig4_rv2_grid) {
        ScenarioConfig c = cfg;
        c.scenario = ScenarioKind::kPursuitEvasion;
        c.pe.rv2 = rv2;
        check(c);
      }
      break;
    case ExperimentKind::kFig3:
    case ExperimentKind::kOracleXcheck: {
      ScenarioConfig c = cfg;
      c.scenario = ScenarioKind::kPursuitEvasion;
      check(c);
      break;
    }
    case ExperimentKind::kSingle:
      check(cfg);
      break;
  }
}

std::string to_string(ScenarioKind kind) { return enum_text(kind, kScenarioNames); }
std::string to_string(ExperimentKind kind) { return enum_text(kind, kExperimentNames); }
std::string to_string(RunMode mode) { return enum_text(mode, kModeNames); }

}  // namespace sdg
