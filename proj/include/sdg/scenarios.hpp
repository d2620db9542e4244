#pragma once

#include <vector>

#include "sdg/game.hpp"

namespace sdg {

/// Unicycle navigation under input disturbance:
///   d[p_x p_y s theta] = -k x dt + [s cos(theta), s sin(theta), 0, 0] dt
///                        + [0; I] (u dt + v dt + diag(sigma, nu) dw).
struct UnicycleParams {
  double sigma = 0.1;
  double nu = 0.1;
  double k = 0.2;
  double gamma2 = 2.0;
  double eta = 0.67;
  double t0 = 0.0;
  double horizon = 10.0;
  Vec x0 = (Vec(4) << -0.4, -0.4, 0.0, 0.0).finished();
  Rect workspace{-0.6, 0.6, -0.6, 0.6};
  std::vector<Rect> obstacles = default_obstacles();

  /// One square block on the diagonal between the start and the origin. The
  /// coordinates are an approximation chosen for this library.
  static std::vector<Rect> default_obstacles();
};

/// Evader position relative to the pursuer:
///   dx = u dt - v dt + diag(sigma_x, sigma_y) dw,  X_s = {|x| > rho}.
struct PursuitEvasionParams {
  double sigma_ex = 0.31622776601683794;  // sqrt(0.1)
  double sigma_ey = 0.31622776601683794;
  double sigma_px = 0.31622776601683794;
  double sigma_py = 0.31622776601683794;
  double rho = 0.1;
  double rv2 = 2.0;
  /// R_u = agent_weight I and R_v = agent_weight rv2 I. The value
  /// 1 / sigma_x^2 makes Sigma Sigma' = lambda M hold exactly.
  double agent_weight = 1.0;
  double eta = 0.2;
  double t0 = 0.0;
  double horizon = 2.0;
  Vec x0 = (Vec(2) << 0.3, 0.3).finished();
  /// Monitored truncation of the unbounded safe set; 0 means 50 rho.
  double outer_radius = 0.0;

  double sigma_x() const;
  double sigma_y() const;
};

/// Closed-form lambda solving lambda (1 - 1/w) = 1 for an adversary weight w;
/// throws NoValidLambda for w <= 1.
double attenuation_lambda(double adversary_weight);

GameSpec build_unicycle_spec(const UnicycleParams& params);
GameSpec build_pe_spec(const PursuitEvasionParams& params);

/// Linear game dx = A x dt + B_u u dt + B_v v dt + S dw with cost x'Qx,
/// terminal cost x'Px, and an open box safe set. Lambda is fitted.
struct LinearGameParams {
  Mat drift;
  Mat gain_u;
  Mat gain_v;
  Mat sigma;
  Mat ru;
  Mat rv;
  Mat state_weight;
  Mat terminal_weight;
  double eta = 1.0;
  Vec box_lower;
  Vec box_upper;
  Vec x0;
  double t0 = 0.0;
  double horizon = 1.0;
};

GameSpec build_linear_spec(const LinearGameParams& params);

}  // namespace sdg
