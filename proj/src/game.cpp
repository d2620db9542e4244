#include "sdg/game.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "sdg/error.hpp"

namespace sdg {
namespace {

double smooth_transition(double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / s);
  const double b = std::exp(-1.0 / (1.0 - s));
  return a / (a + b);
}

Mat inverse_spd(const Mat& r) {
  Eigen::LLT<Mat> llt(r);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::kInvalidArgument, "control weight matrix is not positive definite");
  }
  return llt.solve(Mat::Identity(r.rows(), r.cols()));
}

double rect_signed_distance_outside(const Rect& r, double x, double y) {
  const double dx = std::max({r.x_min - x, 0.0, x - r.x_max});
  const double dy = std::max({r.y_min - y, 0.0, y - r.y_max});
  if (dx > 0.0 || dy > 0.0) return std::hypot(dx, dy);
  return -std::min({x - r.x_min, r.x_max - x, y - r.y_min, r.y_max - y});
}

Mat noise_cost_difference(const GameSpec& spec, const Vec& x, double t, double lambda, bool with_adversary) {
  const Mat sigma = spec.sigma(x, t);
  const Mat gu = spec.gain_u(x, t);
  Mat b = gu * inverse_spd(spec.control_weight_u(x, t)) * gu.transpose();
  if (with_adversary) {
    const Mat gv = spec.gain_v(x, t);
    b -= gv * inverse_spd(spec.control_weight_v(x, t)) * gv.transpose();
  }
  return sigma * sigma.transpose() - lambda * b;
}

LambdaCertificate certify(const GameSpec& spec, const std::vector<Probe>& probes,
                          std::optional<double> closed_form, bool with_adversary) {
  if (probes.empty()) throw Error(ErrorKind::kInvalidArgument, "resolve_lambda needs at least one probe");
  LambdaCertificate cert;
  cert.probe_count = static_cast<int>(probes.size());
  if (closed_form) {
    cert.lambda = *closed_form;
    cert.closed_form = true;
  } else {
    // Least squares over probes of |A - lambda B|_F.
    double ab = 0.0, bb = 0.0;
    for (const auto& p : probes) {
      const Mat a = noise_cost_difference(spec, p.x, p.t, 0.0, with_adversary);
      const Mat b = (a - noise_cost_difference(spec, p.x, p.t, 1.0, with_adversary));
      ab += (a.array() * b.array()).sum();
      bb += b.squaredNorm();
    }
    if (bb == 0.0) throw Error(ErrorKind::kNoValidLambda, "control channels carry no noise-cost structure");
    cert.lambda = ab / bb;
  }
  if (!std::isfinite(cert.lambda) || cert.lambda <= 0.0) {
    std::ostringstream msg;
    msg << "lambda = " << cert.lambda << " is not a positive constant";
    throw Error(ErrorKind::kNoValidLambda, msg.str());
  }
  if (spec.allow_noise_scale) {
    double ab = 0.0, bb = 0.0;
    for (const auto& p : probes) {
      const Mat a = noise_cost_difference(spec, p.x, p.t, 0.0, with_adversary);
      const Mat b = a - noise_cost_difference(spec, p.x, p.t, cert.lambda, with_adversary);
      ab += (a.array() * b.array()).sum();
      bb += b.squaredNorm();
    }
    if (!(bb > 0.0) || !(ab > 0.0)) throw Error(ErrorKind::kNoValidLambda, "noise is not a positive multiple of lambda M");
    cert.noise_scale = ab / bb;
  }
  for (const auto& p : probes) {
    const Mat a = noise_cost_difference(spec, p.x, p.t, 0.0, with_adversary);
    const Mat b = a - noise_cost_difference(spec, p.x, p.t, cert.lambda, with_adversary);
    cert.residual = std::max(cert.residual, (a - cert.noise_scale * b).norm());
  }
  if (!(cert.residual <= spec.lambda_tolerance)) {
    std::ostringstream msg;
    msg << "lambda = " << cert.lambda << " leaves residual " << cert.residual << " > tolerance "
        << spec.lambda_tolerance;
    throw Error(ErrorKind::kNoValidLambda, msg.str());
  }
  return cert;
}

}  // namespace

DiskComplementSet::DiskComplementSet(double rho, double outer_radius) : rho_(rho), outer_radius_(outer_radius) {
  if (!(rho > 0.0) || !(outer_radius > rho)) {
    throw Error(ErrorKind::kInvalidArgument, "disk complement needs 0 < rho < outer radius");
  }
}

Membership DiskComplementSet::classify(const Vec& x) const {
  return x[0] * x[0] + x[1] * x[1] > rho_ * rho_ ? Membership::kInterior : Membership::kOutside;
}

double DiskComplementSet::signed_distance(const Vec& x) const { return std::hypot(x[0], x[1]) - rho_; }

Vec DiskComplementSet::boundary_normal(const Vec& x) const {
  Vec n = Vec::Zero(x.size());
  const double r = std::hypot(x[0], x[1]);
  if (r > 0.0) {
    n[0] = -x[0] / r;
    n[1] = -x[1] / r;
  }
  return n;
}

Vec SafeSet::boundary_normal(const Vec& x) const {
  Vec n(x.size());
  Vec y = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = 1e-7 * std::max(1.0, std::abs(x[i]));
    y[i] = x[i] + h;
    const double up = signed_distance(y);
    y[i] = x[i] - h;
    const double down = signed_distance(y);
    y[i] = x[i];
    n[i] = -(up - down) / (2.0 * h);
  }
  const double norm = n.norm();
  return norm > 0.0 ? Vec(n / norm) : n;
}

bool DiskComplementSet::beyond_truncation(const Vec& x) const {
  return x[0] * x[0] + x[1] * x[1] >= outer_radius_ * outer_radius_;
}

std::string DiskComplementSet::description() const {
  std::ostringstream out;
  out << "disk_complement(rho=" << rho_ << ", outer_radius=" << outer_radius_ << ")";
  return out.str();
}

RectWorkspaceSet::RectWorkspaceSet(Rect workspace, std::vector<Rect> obstacles)
    : workspace_(workspace), obstacles_(std::move(obstacles)) {
  if (!(workspace_.x_min < workspace_.x_max) || !(workspace_.y_min < workspace_.y_max)) {
    throw Error(ErrorKind::kInvalidArgument, "empty workspace rectangle");
  }
}

Membership RectWorkspaceSet::classify(const Vec& x) const {
  const double px = x[0], py = x[1];
  if (!(px > workspace_.x_min && px < workspace_.x_max && py > workspace_.y_min && py < workspace_.y_max)) {
    return Membership::kOutside;
  }
  for (const auto& o : obstacles_) {
    if (px >= o.x_min && px <= o.x_max && py >= o.y_min && py <= o.y_max) return Membership::kOutside;
  }
  return Membership::kInterior;
}

double RectWorkspaceSet::signed_distance(const Vec& x) const {
  const double px = x[0], py = x[1];
  double d = std::min({px - workspace_.x_min, workspace_.x_max - px, py - workspace_.y_min, workspace_.y_max - py});
  for (const auto& o : obstacles_) d = std::min(d, rect_signed_distance_outside(o, px, py));
  return d;
}

std::string RectWorkspaceSet::description() const {
  std::ostringstream out;
  out << "rect_workspace([" << workspace_.x_min << "," << workspace_.x_max << "]x[" << workspace_.y_min << ","
      << workspace_.y_max << "], obstacles=" << obstacles_.size() << ")";
  return out.str();
}

BoxSet::BoxSet(Vec lower, Vec upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size() || ((upper_ - lower_).array() <= 0.0).any()) {
    throw Error(ErrorKind::kInvalidArgument, "box bounds must satisfy lower < upper");
  }
}

Membership BoxSet::classify(const Vec& x) const {
  for (Eigen::Index i = 0; i < lower_.size(); ++i) {
    if (!(x[i] > lower_[i] && x[i] < upper_[i])) return Membership::kOutside;
  }
  return Membership::kInterior;
}

double BoxSet::signed_distance(const Vec& x) const {
  double d = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < lower_.size(); ++i) d = std::min({d, x[i] - lower_[i], upper_[i] - x[i]});
  return d;
}

std::string BoxSet::description() const { return "box"; }

void GameSpec::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::kInvalidArgument, "GameSpec: " + what); };
  if (state_dim < 1 || agent_dim < 1 || adversary_dim < 1 || noise_dim < 1) fail("dimensions must be positive");
  if (!drift || !gain_u || !gain_v || !state_cost || !terminal_cost || !control_weight_u || !control_weight_v) {
    fail("missing callback");
  }
  if (!diffusion && !constant_diffusion) fail("missing diffusion");
  if (constant_diffusion && (constant_diffusion->rows() != state_dim || constant_diffusion->cols() != noise_dim)) {
    fail("diffusion has wrong shape");
  }
  if (!safe_set) fail("missing safe set");
  if (!(t0 < horizon)) fail("need t0 < T");
  if (!(failure_weight > 0.0)) fail("failure weight eta must be positive");
  if (x0.size() != state_dim) fail("x0 has wrong dimension");
  if (partition_rows.empty()) fail("empty noise partition");
  for (int r : partition_rows) {
    if (r < 0 || r >= state_dim) fail("partition row out of range");
  }
}

std::vector<Probe> default_probes(const GameSpec& spec, int count, std::uint64_t seed, double spread) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, spread);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Probe> out;
  out.reserve(static_cast<std::size_t>(count));
  int attempts = 0;
  while (static_cast<int>(out.size()) < count) {
    if (++attempts > 1000 * count) throw Error(ErrorKind::kInvalidArgument, "could not sample interior probes");
    Vec x = spec.x0;
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] += normal(gen);
    if (!spec.safe_set->contains(x)) continue;
    out.push_back({std::move(x), spec.t0 + unit(gen) * (spec.horizon - spec.t0)});
  }
  return out;
}

double phi_terminal(const GameSpec& spec, const Vec& x) {
  if (!spec.safe_set->contains(x)) return spec.failure_weight;
  const double psi = spec.terminal_cost(x);
  if (!spec.bump_width) return psi;
  const double b = smooth_transition(spec.safe_set->signed_distance(x) / *spec.bump_width);
  return psi * b + spec.failure_weight * (1.0 - b);
}

double end_cost(const GameSpec& spec, const Vec& x, bool boundary_exit) {
  return boundary_exit ? spec.failure_weight : phi_terminal(spec, x);
}

double bridge_exit_probability(const GameSpec& spec, const Vec& from, const Vec& to, double t, double dt) {
  const double d0 = spec.safe_set->signed_distance(from);
  const double d1 = spec.safe_set->signed_distance(to);
  if (!(d0 > 0.0) || !(d1 > 0.0)) return 0.0;
  const Vec n = spec.safe_set->boundary_normal(to);
  const Mat sigma = spec.sigma(from, t);
  const double var = (sigma.transpose() * n).squaredNorm();
  if (!(var > 0.0)) return 0.0;
  return std::exp(-2.0 * d0 * d1 / (var * dt));
}

double running_cost(const GameSpec& spec, const Vec& x, const Vec& u, const Vec& v, double t) {
  const double v_state = spec.zero_state_cost ? 0.0 : spec.state_cost(x, t);
  return v_state + 0.5 * u.dot(spec.control_weight_u(x, t) * u) - 0.5 * v.dot(spec.control_weight_v(x, t) * v);
}

LambdaCertificate resolve_lambda(const GameSpec& spec, const std::vector<Probe>& probes) {
  return certify(spec, probes, spec.closed_form_lambda, true);
}

LambdaCertificate resolve_single_agent_lambda(const GameSpec& spec, const std::vector<Probe>& probes) {
  return certify(spec, probes, spec.single_agent_lambda, false);
}

Mat select_rows(const Mat& m, const std::vector<int>& rows) {
  Mat out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  return out;
}

namespace {

Mat checked_inverse(const Mat& m) {
  Eigen::JacobiSVD<Mat> svd(m);
  const auto& s = svd.singularValues();
  const double smax = s.size() ? s(0) : 0.0;
  const double smin = s.size() ? s(s.size() - 1) : 0.0;
  if (!(smax > 0.0) || !(smin > 0.0) || smax / smin > 1e12) {
    std::ostringstream msg;
    msg << "noise-block control matrix is singular (singular values " << smax << ", " << smin << ")";
    throw Error(ErrorKind::kSingularGain, msg.str());
  }
  return m.partialPivLu().inverse();
}

}  // namespace

GainMatrices gain_matrices(const GameSpec& spec, const Vec& x, double t) {
  const Mat gu2 = select_rows(spec.gain_u(x, t), spec.partition_rows);
  const Mat gv2 = select_rows(spec.gain_v(x, t), spec.partition_rows);
  const Mat ru_inv_gut = inverse_spd(spec.control_weight_u(x, t)) * gu2.transpose();
  const Mat rv_inv_gvt = inverse_spd(spec.control_weight_v(x, t)) * gv2.transpose();
  const Mat m_inv = checked_inverse(gu2 * ru_inv_gut - gv2 * rv_inv_gvt);
  return {ru_inv_gut * m_inv, -rv_inv_gvt * m_inv};
}

Mat single_agent_gain(const GameSpec& spec, const Vec& x, double t) {
  const Mat gu2 = select_rows(spec.gain_u(x, t), spec.partition_rows);
  const Mat ru_inv_gut = inverse_spd(spec.control_weight_u(x, t)) * gu2.transpose();
  return ru_inv_gut * checked_inverse(gu2 * ru_inv_gut);
}

namespace {

Mat calibrated(const GameSpec& spec, const Vec& x, double t, double lambda, const Mat& ru_inv_gt) {
  const Mat s2 = select_rows(spec.sigma(x, t), spec.partition_rows);
  return lambda * ru_inv_gt * checked_inverse(s2 * s2.transpose());
}

}  // namespace

GainMatrices estimator_gains(const GameSpec& spec, const Vec& x, double t, double lambda) {
  if (spec.gain_form == GameSpec::GainForm::kStructural) return gain_matrices(spec, x, t);
  const Mat gu2 = select_rows(spec.gain_u(x, t), spec.partition_rows);
  const Mat gv2 = select_rows(spec.gain_v(x, t), spec.partition_rows);
  return {calibrated(spec, x, t, lambda, inverse_spd(spec.control_weight_u(x, t)) * gu2.transpose()),
          calibrated(spec, x, t, lambda, -inverse_spd(spec.control_weight_v(x, t)) * gv2.transpose())};
}

Mat estimator_single_agent_gain(const GameSpec& spec, const Vec& x, double t, double lambda) {
  if (spec.gain_form == GameSpec::GainForm::kStructural) return single_agent_gain(spec, x, t);
  const Mat gu2 = select_rows(spec.gain_u(x, t), spec.partition_rows);
  return calibrated(spec, x, t, lambda, inverse_spd(spec.control_weight_u(x, t)) * gu2.transpose());
}

StructureReport check_structure(const GameSpec& spec, const std::vector<Probe>& probes) {
  StructureReport report;
  report.min_eigen_ru = std::numeric_limits<double>::infinity();
  report.min_eigen_rv = std::numeric_limits<double>::infinity();
  std::vector<bool> in_partition(static_cast<std::size_t>(spec.state_dim), false);
  for (int r : spec.partition_rows) in_partition[static_cast<std::size_t>(r)] = true;
  for (const auto& p : probes) {
    const Mat mats[] = {spec.gain_u(p.x, p.t), spec.gain_v(p.x, p.t), spec.sigma(p.x, p.t)};
    for (const auto& m : mats) {
      for (int r = 0; r < spec.state_dim; ++r) {
        if (!in_partition[static_cast<std::size_t>(r)]) {
          report.max_offpartition_entry = std::max(report.max_offpartition_entry, m.row(r).cwiseAbs().maxCoeff());
        }
      }
    }
    Eigen::SelfAdjointEigenSolver<Mat> ru(spec.control_weight_u(p.x, p.t));
    Eigen::SelfAdjointEigenSolver<Mat> rv(spec.control_weight_v(p.x, p.t));
    report.min_eigen_ru = std::min(report.min_eigen_ru, ru.eigenvalues().minCoeff());
    report.min_eigen_rv = std::min(report.min_eigen_rv, rv.eigenvalues().minCoeff());
  }
  return report;
}

}  // namespace sdg
