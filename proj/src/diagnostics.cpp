#include "rbc/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "rbc/boussinesq.hpp"
#include "rbc/chebyshev.hpp"
#include "rbc/errors.hpp"

namespace rbc {

TimeAverages::TimeAverages(const Grid& g) : z(g.z_nodes), quad_weights(g.quad_weights) {
  const Eigen::Index n = g.Nz;
  sum_Tw = Eigen::VectorXd::Zero(n);
  sum_abs_w = Eigen::VectorXd::Zero(n);
  sum_gradT2 = Eigen::VectorXd::Zero(n);
  sum_gradu2 = Eigen::VectorXd::Zero(n);
  sum_dzT = Eigen::VectorXd::Zero(n);
}

namespace {

void require_samples(const TimeAverages& a) {
  if (a.empty()) throw StateError("time averages are empty");
}

}  // namespace

Eigen::VectorXd TimeAverages::Tw() const { return sum_Tw / weight; }
Eigen::VectorXd TimeAverages::abs_w() const { return sum_abs_w / weight; }
Eigen::VectorXd TimeAverages::gradT2() const { return sum_gradT2 / weight; }
Eigen::VectorXd TimeAverages::gradu2() const { return sum_gradu2 / weight; }
Eigen::VectorXd TimeAverages::dzT() const { return sum_dzT / weight; }
Eigen::VectorXd TimeAverages::nusselt_profile() const { return (sum_Tw - sum_dzT) / weight; }

TimeAverages instantaneous_averages(const State& s) {
  const GridPtr& g = s.T.grid;
  TimeAverages a(*g);
  ModalField u = vertical_derivative(s.psi, 1);
  u.coeffs *= -1.0;
  ModalField w = horizontal_derivative(s.psi, 1);
  ModalField Tx = horizontal_derivative(s.T, 1);
  ModalField Tz = vertical_derivative(s.T, 1);
  a.sum_Tw = horizontal_product_mean(s.T, w);
  a.sum_abs_w = horizontal_abs_mean(w, 2);
  a.sum_gradT2 = horizontal_product_mean(Tx, Tx) + horizontal_product_mean(Tz, Tz);
  a.sum_dzT = Tz.profile(0).real();
  a.sum_gradu2 = Eigen::VectorXd::Zero(g->Nz);
  for (const ModalField* f : {&u, &w}) {
    ModalField fx = horizontal_derivative(*f, 1);
    ModalField fz = vertical_derivative(*f, 1);
    a.sum_gradu2 += horizontal_product_mean(fx, fx) + horizontal_product_mean(fz, fz);
  }
  a.weight = 1.0;
  a.count = 1;
  a.t_begin = a.t_end = s.t;
  return a;
}

double nusselt_plane(const TimeAverages& avg, double z) {
  require_samples(avg);
  const double H = avg.z[avg.z.size() - 1];
  if (!(z >= 0.0 && z <= H)) throw ParameterError("nusselt_plane: height outside the grid");
  return cheb::interpolate(avg.nusselt_profile(), 0.0, H, z);
}

double nusselt_volume(const TimeAverages& avg) {
  require_samples(avg);
  return avg.quad_weights.dot(avg.nusselt_profile());
}

double nusselt_dissipation(const TimeAverages& avg) {
  require_samples(avg);
  return avg.quad_weights.dot(avg.gradT2());
}

NusseltReport nusselt_report(const TimeAverages& avg) {
  require_samples(avg);
  NusseltReport r;
  r.nu_plane_profile = avg.nusselt_profile();
  // plane formula sampled on an even z-grid, independent of the quadrature rule
  const int m = 101;
  Eigen::VectorXd zs = Eigen::VectorXd::LinSpaced(m, 0.0, avg.z[avg.z.size() - 1]);
  Eigen::VectorXd plane = cheb::interp_matrix(static_cast<int>(avg.z.size()), 0.0, zs[m - 1], zs) * r.nu_plane_profile;
  r.nu_plane_mean = plane.mean();
  r.nu_volume = nusselt_volume(avg);
  r.nu_dissipation = nusselt_dissipation(avg);
  const double v[3] = {r.nu_plane_mean, r.nu_volume, r.nu_dissipation};
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j)
      r.spread = std::max(r.spread, std::abs(v[i] - v[j]) / std::min(std::abs(v[i]), std::abs(v[j])));
  r.plane_flatness = (plane.array() - r.nu_plane_mean).abs().maxCoeff() / std::abs(r.nu_plane_mean);
  return r;
}

double energy_balance_residual(const TimeAverages& avg, const SimParams& params) {
  const double nu = nusselt_volume(avg);
  const double dissipation = avg.quad_weights.dot(avg.gradu2());
  const double budget = params.Ra * (nu - 1.0);
  return (dissipation - budget) / std::max(1.0, budget);
}

BoundaryLayerBound boundary_layer_bound(const TimeAverages& avg, double delta) {
  if (!(delta > 0.0 && delta < 0.5)) throw ParameterError("boundary_layer_bound: delta must lie in (0, 1/2)");
  require_samples(avg);
  const int n = 33;
  const double H = avg.z[avg.z.size() - 1];
  Eigen::VectorXd zq = cheb::nodes(n, 0.0, delta);
  Eigen::VectorXd wq = cheb::cc_weights(n, 0.0, delta);
  Eigen::MatrixXd P = cheb::interp_matrix(static_cast<int>(avg.z.size()), 0.0, H, zq);
  BoundaryLayerBound b;
  b.delta = delta;
  b.with_T = wq.dot(P * avg.Tw()) / delta + 1.0 / delta;
  b.with_abs = wq.dot(P * avg.abs_w()) / delta + 1.0 / delta;
  return b;
}

double delta_choice(double Ra, double Pr, double Nu) {
  if (!(Ra > 1.0)) throw ParameterError("delta_choice: Ra must exceed 1");
  const double nu_over_pr = std::isinf(Pr) ? 0.0 : Nu / Pr;
  return std::pow((nu_over_pr + 1.0) * Ra * std::log(Ra), -1.0 / 3.0);
}

std::string to_string(BoundBranch b) { return b == BoundBranch::high_pr ? "high_pr" : "low_pr"; }

BoundBranch classify_branch(double Ra, double Pr) {
  return Pr >= std::cbrt(Ra * std::log(Ra)) ? BoundBranch::high_pr : BoundBranch::low_pr;
}

double bound_shape(double Ra, double Pr) {
  const double rl = Ra * std::log(Ra);
  return classify_branch(Ra, Pr) == BoundBranch::high_pr ? std::cbrt(rl) : std::sqrt(rl / Pr);
}

BoundCheckReport bound_check(const std::vector<BoundPoint>& points) {
  if (points.empty()) throw ParameterError("bound_check: no results");
  BoundCheckReport r;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    if (!(p.Ra >= 1e4)) throw ParameterError("bound_check: Ra below 1e4 is outside the asymptotic regime");
    if (!(p.Pr > 0.0)) throw ParameterError("bound_check: Pr must be positive");
    r.branches.push_back(classify_branch(p.Ra, p.Pr));
    double c = p.Nu / bound_shape(p.Ra, p.Pr);
    r.C_per_point.push_back(c);
    if (i == 0 || c > r.C) {
      r.C = c;
      r.binding_index = i;
    }
  }
  return r;
}

double weighted_integral(const Eigen::VectorXd& z, const Eigen::VectorXd& g, WeightKind w) {
  return weighted_interpolation_norm(z, g, w).pure_weighted;
}

double hardy_nonlinearity_ratio(const State& s) {
  const GridPtr& g = s.T.grid;
  ModalField u = vertical_derivative(s.psi, 1);
  u.coeffs *= -1.0;
  ModalField w = horizontal_derivative(s.psi, 1);
  if (u.coeffs.cwiseAbs().maxCoeff() == 0.0 && w.coeffs.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  PhysicalField U = inverse_transform(u), W = inverse_transform(w);
  PhysicalField Ux = inverse_transform(horizontal_derivative(u, 1));
  PhysicalField Uz = inverse_transform(vertical_derivative(u, 1));
  PhysicalField Wx = inverse_transform(horizontal_derivative(w, 1));
  PhysicalField Wz = inverse_transform(vertical_derivative(w, 1));
  Eigen::ArrayXXd a = U.values.array() * Ux.values.array() + W.values.array() * Uz.values.array();
  Eigen::ArrayXXd b = U.values.array() * Wx.values.array() + W.values.array() * Wz.values.array();
  Eigen::VectorXd prof = (a.square() + b.square()).sqrt().colwise().mean().transpose();
  prof[0] = 0.0;  // no-slip: the advective term vanishes at the wall
  const double num = weighted_integral(g->z_nodes, prof, WeightKind::upper);
  const double den = g->quad_weights.dot(instantaneous_averages(s).gradu2());
  if (den == 0.0) return 0.0;
  return num / den;
}

double plateau_drift(const std::vector<double>& values) {
  if (values.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  std::vector<double> running(values.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    acc += values[i];
    running[i] = acc / static_cast<double>(i + 1);
  }
  const double end = running.back();
  double drift = 0.0;
  for (std::size_t i = values.size() / 2; i < values.size(); ++i)
    drift = std::max(drift, std::abs(running[i] - end) / std::abs(end));
  return drift;
}

std::string to_json(const NusseltReport& r) {
  nlohmann::json j;
  j["nu_plane_mean"] = r.nu_plane_mean;
  j["nu_volume"] = r.nu_volume;
  j["nu_dissipation"] = r.nu_dissipation;
  j["spread"] = r.spread;
  j["plane_flatness"] = r.plane_flatness;
  j["nu_plane_profile"] = std::vector<double>(r.nu_plane_profile.data(),
                                              r.nu_plane_profile.data() + r.nu_plane_profile.size());
  return j.dump();
}

std::string to_json(const NormReport& r) {
  nlohmann::json j;
  j["k_value"] = r.k_value;
  j["lambda_star"] = r.lambda_star;
  j["sup_part"] = r.sup_part;
  j["weighted_part"] = r.weighted_part;
  j["weight_kind"] = to_string(r.weight_kind);
  return j.dump();
}

}  // namespace rbc
