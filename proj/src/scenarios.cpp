#include "sdg/scenarios.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include "sdg/error.hpp"

namespace sdg {

std::vector<Rect> UnicycleParams::default_obstacles() {
  return {{-0.25, -0.1, -0.25, -0.1}};
}

double PursuitEvasionParams::sigma_x() const { return std::hypot(sigma_ex, sigma_px); }
double PursuitEvasionParams::sigma_y() const { return std::hypot(sigma_ey, sigma_py); }

double attenuation_lambda(double adversary_weight) {
  if (!(adversary_weight > 1.0)) {
    std::ostringstream msg;
    msg << "adversary weight " << adversary_weight << " <= 1 admits no positive lambda";
    throw Error(ErrorKind::kNoValidLambda, msg.str());
  }
  return adversary_weight / (adversary_weight - 1.0);
}

GameSpec build_unicycle_spec(const UnicycleParams& p) {
  if (!(p.sigma > 0.0) || !(p.nu > 0.0) || !(p.k >= 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "unicycle noise levels must be positive and k non-negative");
  }
  GameSpec spec;
  spec.name = "unicycle_da";
  spec.state_dim = 4;
  spec.agent_dim = 2;
  spec.adversary_dim = 2;
  spec.noise_dim = 2;
  spec.partition_rows = {2, 3};

  const double k = p.k;
  spec.drift = [k](const Vec& x, double, Vec& out) {
    out[0] = -k * x[0] + x[2] * std::cos(x[3]);
    out[1] = -k * x[1] + x[2] * std::sin(x[3]);
    out[2] = -k * x[2];
    out[3] = -k * x[3];
  };
  Mat g = Mat::Zero(4, 2);
  g(2, 0) = 1.0;
  g(3, 1) = 1.0;
  spec.gain_u = [g](const Vec&, double) { return g; };
  spec.gain_v = [g](const Vec&, double) { return g; };
  Mat sigma = Mat::Zero(4, 2);
  sigma(2, 0) = p.sigma;
  sigma(3, 1) = p.nu;
  spec.constant_diffusion = sigma;
  spec.diffusion = [sigma](const Vec&, double) { return sigma; };

  spec.state_cost = [](const Vec& x, double) { return x[0] * x[0] + x[1] * x[1]; };
  spec.terminal_cost = [](const Vec& x) { return x[0] * x[0] + x[1] * x[1]; };
  spec.failure_weight = p.eta;
  const Mat ru = Mat::Identity(2, 2);
  const Mat rv = p.gamma2 * Mat::Identity(2, 2);
  spec.control_weight_u = [ru](const Vec&, double) { return ru; };
  spec.control_weight_v = [rv](const Vec&, double) { return rv; };

  spec.safe_set = std::make_shared<RectWorkspaceSet>(p.workspace, p.obstacles);
  spec.t0 = p.t0;
  spec.horizon = p.horizon;
  spec.x0 = p.x0;
  spec.closed_form_lambda = attenuation_lambda(p.gamma2);
  spec.single_agent_lambda = 1.0;
  spec.allow_noise_scale = true;
  spec.time_invariant = true;
  spec.validate();
  if (!spec.safe_set->contains(spec.x0)) throw Error(ErrorKind::kInvalidArgument, "unicycle x0 is not in X_s");
  return spec;
}

GameSpec build_pe_spec(const PursuitEvasionParams& p) {
  if (!(p.rho > 0.0)) throw Error(ErrorKind::kInvalidArgument, "capture radius must be positive");
  GameSpec spec;
  spec.name = "pursuit_evasion";
  spec.state_dim = 2;
  spec.agent_dim = 2;
  spec.adversary_dim = 2;
  spec.noise_dim = 2;
  spec.partition_rows = {0, 1};

  spec.drift = [](const Vec&, double, Vec& out) { out.setZero(); };
  const Mat gu = Mat::Identity(2, 2);
  const Mat gv = -Mat::Identity(2, 2);
  spec.gain_u = [gu](const Vec&, double) { return gu; };
  spec.gain_v = [gv](const Vec&, double) { return gv; };
  Mat sigma = Mat::Zero(2, 2);
  sigma(0, 0) = p.sigma_x();
  sigma(1, 1) = p.sigma_y();
  if (!(sigma(0, 0) > 0.0) || !(sigma(1, 1) > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "relative noise levels must be positive");
  }
  spec.constant_diffusion = sigma;
  spec.diffusion = [sigma](const Vec&, double) { return sigma; };

  spec.state_cost = [](const Vec&, double) { return 0.0; };
  spec.terminal_cost = [](const Vec&) { return 0.0; };
  spec.zero_state_cost = true;
  spec.failure_weight = p.eta;
  if (!(p.agent_weight > 0.0)) throw Error(ErrorKind::kInvalidArgument, "agent control weight must be positive");
  const Mat ru = p.agent_weight * Mat::Identity(2, 2);
  const Mat rv = p.agent_weight * p.rv2 * Mat::Identity(2, 2);
  spec.control_weight_u = [ru](const Vec&, double) { return ru; };
  spec.control_weight_v = [rv](const Vec&, double) { return rv; };

  const double outer = p.outer_radius > 0.0 ? p.outer_radius : 50.0 * p.rho;
  spec.safe_set = std::make_shared<DiskComplementSet>(p.rho, outer);
  spec.t0 = p.t0;
  spec.horizon = p.horizon;
  spec.x0 = p.x0;
  spec.closed_form_lambda = attenuation_lambda(p.rv2);
  spec.single_agent_lambda = 1.0;
  spec.allow_noise_scale = true;
  spec.time_invariant = true;
  spec.validate();
  if (!spec.safe_set->contains(spec.x0)) throw Error(ErrorKind::kInvalidArgument, "pursuit-evasion x0 is captured");
  return spec;
}

GameSpec build_linear_spec(const LinearGameParams& p) {
  const auto n = p.drift.rows();
  auto shape = [](const Mat& m, Eigen::Index r, Eigen::Index c, const char* what) {
    if (m.rows() != r || m.cols() != c) {
      throw Error(ErrorKind::kInvalidArgument, std::string("linear game: ") + what + " has wrong shape");
    }
  };
  shape(p.drift, n, n, "drift");
  shape(p.gain_u, n, p.gain_u.cols(), "gain_u");
  shape(p.gain_v, n, p.gain_v.cols(), "gain_v");
  shape(p.sigma, n, p.sigma.cols(), "sigma");
  shape(p.ru, p.gain_u.cols(), p.gain_u.cols(), "ru");
  shape(p.rv, p.gain_v.cols(), p.gain_v.cols(), "rv");
  shape(p.state_weight, n, n, "state_weight");
  shape(p.terminal_weight, n, n, "terminal_weight");

  GameSpec spec;
  spec.name = "custom";
  spec.state_dim = static_cast<int>(n);
  spec.agent_dim = static_cast<int>(p.gain_u.cols());
  spec.adversary_dim = static_cast<int>(p.gain_v.cols());
  spec.noise_dim = static_cast<int>(p.sigma.cols());
  for (Eigen::Index r = 0; r < n; ++r) {
    if (p.gain_u.row(r).any() || p.gain_v.row(r).any() || p.sigma.row(r).any()) {
      spec.partition_rows.push_back(static_cast<int>(r));
    }
  }
  const Mat a = p.drift;
  spec.drift = [a](const Vec& x, double, Vec& out) { out.noalias() = a * x; };
  spec.gain_u = [g = p.gain_u](const Vec&, double) { return g; };
  spec.gain_v = [g = p.gain_v](const Vec&, double) { return g; };
  spec.constant_diffusion = p.sigma;
  spec.diffusion = [s = p.sigma](const Vec&, double) { return s; };
  spec.zero_state_cost = p.state_weight.isZero(0.0);
  spec.state_cost = [q = p.state_weight](const Vec& x, double) { return x.dot(q * x); };
  spec.terminal_cost = [w = p.terminal_weight](const Vec& x) { return x.dot(w * x); };
  spec.failure_weight = p.eta;
  spec.control_weight_u = [r = p.ru](const Vec&, double) { return r; };
  spec.control_weight_v = [r = p.rv](const Vec&, double) { return r; };
  spec.safe_set = std::make_shared<BoxSet>(p.box_lower, p.box_upper);
  spec.t0 = p.t0;
  spec.horizon = p.horizon;
  spec.x0 = p.x0;
  spec.time_invariant = true;
  spec.validate();
  return spec;
}

}  // namespace sdg
