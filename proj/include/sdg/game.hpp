#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sdg {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class Membership { kInterior, kOutside };

/// Safe region X_s. Implementations must be pure and thread-safe.
class SafeSet {
 public:
  virtual ~SafeSet() = default;

  virtual Membership classify(const Vec& x) const = 0;
  bool contains(const Vec& x) const { return classify(x) == Membership::kInterior; }

  /// Signed distance to the boundary, positive inside. Only needed for the
  /// optional bump mollifier of the terminal cost.
  virtual double signed_distance(const Vec& x) const = 0;

  /// Outward unit normal of the nearest boundary piece. The default
  /// differentiates signed_distance numerically.
  virtual Vec boundary_normal(const Vec& x) const;

  /// True when `x` lies past an artificial truncation of an unbounded set.
  /// Such states are still classified Interior; callers record the event.
  virtual bool beyond_truncation(const Vec&) const { return false; }

  virtual std::string description() const = 0;
};

/// {x : |x_{0:2}| > rho}, the pursuit-evasion capture-disk complement, with a
/// monitored outer radius.
class DiskComplementSet final : public SafeSet {
 public:
  DiskComplementSet(double rho, double outer_radius);

  Membership classify(const Vec& x) const override;
  double signed_distance(const Vec& x) const override;
  Vec boundary_normal(const Vec& x) const override;
  bool beyond_truncation(const Vec& x) const override;
  std::string description() const override;

  double rho() const { return rho_; }
  double outer_radius() const { return outer_radius_; }

 private:
  double rho_;
  double outer_radius_;
};

struct Rect {
  double x_min, x_max, y_min, y_max;
};

/// Open rectangular workspace over coordinates (0, 1) with closed rectangular
/// obstacles removed. Remaining coordinates are unconstrained.
class RectWorkspaceSet final : public SafeSet {
 public:
  RectWorkspaceSet(Rect workspace, std::vector<Rect> obstacles);

  Membership classify(const Vec& x) const override;
  double signed_distance(const Vec& x) const override;
  std::string description() const override;

  const Rect& workspace() const { return workspace_; }
  const std::vector<Rect>& obstacles() const { return obstacles_; }

 private:
  Rect workspace_;
  std::vector<Rect> obstacles_;
};

/// Open axis-aligned box on every coordinate.
class BoxSet final : public SafeSet {
 public:
  BoxSet(Vec lower, Vec upper);

  Membership classify(const Vec& x) const override;
  double signed_distance(const Vec& x) const override;
  std::string description() const override;

 private:
  Vec lower_;
  Vec upper_;
};

using DriftFn = std::function<void(const Vec& x, double t, Vec& out)>;
using MatrixFn = std::function<Mat(const Vec& x, double t)>;
using StateCostFn = std::function<double(const Vec& x, double t)>;
using TerminalCostFn = std::function<double(const Vec& x)>;

/// Full description of one risk-minimizing zero-sum game
///   dx = f dt + G_u u dt + G_v v dt + Sigma dw,
///   cost = phi(x(t_f)) + int (V + u'R_u u/2 - v'R_v v/2) dt.
/// Immutable after construction; all callbacks must be pure.
struct GameSpec {
  std::string name;
  int state_dim = 0;
  int agent_dim = 0;
  int adversary_dim = 0;
  int noise_dim = 0;

  /// Rows of the noise-driven subsystem. G_u, G_v and Sigma vanish elsewhere.
  std::vector<int> partition_rows;

  DriftFn drift;
  MatrixFn gain_u;
  MatrixFn gain_v;
  MatrixFn diffusion;
  /// Set when Sigma does not depend on (x, t); rollouts use it directly.
  std::optional<Mat> constant_diffusion;

  StateCostFn state_cost;
  TerminalCostFn terminal_cost;
  double failure_weight = 1.0;
  MatrixFn control_weight_u;
  MatrixFn control_weight_v;
  bool zero_state_cost = false;

  std::shared_ptr<const SafeSet> safe_set;
  double t0 = 0.0;
  double horizon = 1.0;
  Vec x0;

  /// Closed-form lambda supplied by a scenario constructor.
  std::optional<double> closed_form_lambda;
  /// Lambda of the adversary-free problem (used by the unaware agent).
  std::optional<double> single_agent_lambda;
  /// Tolerance on the lambda identity residual.
  double lambda_tolerance = 1e-8;
  /// Accept Sigma Sigma' = c lambda M for one scalar c > 0 instead of c = 1.
  /// The closed-form lambda is kept and c is reported as the noise scale.
  bool allow_noise_scale = false;

  /// How the path-integral estimator turns the weighted noise push into
  /// controls. Both forms coincide when the lambda identity holds exactly.
  enum class GainForm {
    kStructural,       // R^-1 G2' M^-1
    kNoiseCalibrated,  // lambda R^-1 G2' (Sigma2 Sigma2')^-1, i.e. -R^-1 G' dJ/dx
  };
  GainForm gain_form = GainForm::kStructural;

  /// Exit detection between grid times. kBrownianBridge also exits with the
  /// probability that the continuous path crossed the (locally flat) boundary
  /// within a step whose end points are both inside.
  enum class ExitMonitoring { kDiscrete, kBrownianBridge };
  ExitMonitoring exit_monitoring = ExitMonitoring::kDiscrete;

  /// f, Sigma and V do not depend on t.
  bool time_invariant = false;

  /// Width of the optional bump mollifier of phi. Off when empty.
  std::optional<double> bump_width;

  /// Throws InvalidArgument on inconsistent dimensions or missing callbacks.
  void validate() const;

  Mat sigma(const Vec& x, double t) const {
    return constant_diffusion ? *constant_diffusion : diffusion(x, t);
  }
};

struct Probe {
  Vec x;
  double t = 0.0;
};

/// Random interior probe points around x0 over [t0, T].
std::vector<Probe> default_probes(const GameSpec& spec, int count, std::uint64_t seed, double spread = 0.5);

/// phi(x): psi on interior states, eta on any Outside state.
double phi_terminal(const GameSpec& spec, const Vec& x);

/// phi at the end of a path: eta for a boundary exit (also one detected
/// between grid times), phi_terminal otherwise.
double end_cost(const GameSpec& spec, const Vec& x, bool boundary_exit);

/// Probability that a path from `from` to `to` (both inside) left X_s during
/// a step of length dt, from the flat-boundary bridge formula.
double bridge_exit_probability(const GameSpec& spec, const Vec& from, const Vec& to, double t, double dt);

/// V + u'R_u u/2 - v'R_v v/2.
double running_cost(const GameSpec& spec, const Vec& x, const Vec& u, const Vec& v, double t);

struct LambdaCertificate {
  double lambda = 0.0;
  /// max over probes of |Sigma Sigma' - lambda (G_u R_u^-1 G_u' - G_v R_v^-1 G_v')|_F
  double residual = 0.0;
  /// c in Sigma Sigma' = c lambda M (1 unless allow_noise_scale is set).
  double noise_scale = 1.0;
  int probe_count = 0;
  bool closed_form = false;
};

/// Resolves the constant lambda linking noise and control costs. Uses the
/// scenario's closed form when present, a least-squares fit otherwise; in both
/// cases the identity is checked at every probe.
LambdaCertificate resolve_lambda(const GameSpec& spec, const std::vector<Probe>& probes);

/// Same identity without the adversary term.
LambdaCertificate resolve_single_agent_lambda(const GameSpec& spec, const std::vector<Probe>& probes);

struct GainMatrices {
  Mat agent;      // m x n2
  Mat adversary;  // l x n2
};

/// Gains mapping the weighted first-step noise push to (u*, v*).
GainMatrices gain_matrices(const GameSpec& spec, const Vec& x, double t);

/// Agent gain of the adversary-free problem.
Mat single_agent_gain(const GameSpec& spec, const Vec& x, double t);

/// Gains used by the estimator at `lambda`, following spec.gain_form.
GainMatrices estimator_gains(const GameSpec& spec, const Vec& x, double t, double lambda);
Mat estimator_single_agent_gain(const GameSpec& spec, const Vec& x, double t, double lambda);

/// Rows `rows` of `m`.
Mat select_rows(const Mat& m, const std::vector<int>& rows);

struct StructureReport {
  double max_offpartition_entry = 0.0;
  double min_eigen_ru = 0.0;
  double min_eigen_rv = 0.0;
};

/// Partition soundness and positive definiteness of R_u, R_v at the probes.
StructureReport check_structure(const GameSpec& spec, const std::vector<Probe>& probes);

}  // namespace sdg
