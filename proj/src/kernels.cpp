#include "rbc/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/differentiation/finite_difference.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "json.hpp"
#include "rbc/errors.hpp"

namespace rbc::kernels {

namespace {

using Fn = std::function<double(double)>;
using boost::math::quadrature::gauss_kronrod;

constexpr double kReach = 40.0;  // truncation in units of the kernel scale

double gk(const Fn& f, double a, double b) {
  if (!(b > a)) return 0.0;
  return gauss_kronrod<double, 31>::integrate(f, a, b, 20, 1e-13);
}

// int_a^b |f|: scan for sign changes, bracket each root, then integrate |f|
// on the smooth pieces between them.
double abs_integral(const Fn& f, double a, double b, int nscan = 400) {
  std::vector<double> cuts{a};
  double x0 = a, f0 = f(a);
  for (int i = 1; i <= nscan; ++i) {
    const double x1 = a + (b - a) * i / nscan, f1 = f(x1);
    if (f0 == 0.0 && i > 1) {
      cuts.push_back(x0);
    } else if (f0 * f1 < 0.0) {
      boost::math::tools::eps_tolerance<double> tol(50);
      std::uintmax_t it = 100;
      const auto r = boost::math::tools::toms748_solve(f, x0, x1, f0, f1, tol, it);
      cuts.push_back(0.5 * (r.first + r.second));
    }
    x0 = x1;
    f0 = f1;
  }
  cuts.push_back(b);
  const Fn af = [&](double x) { return std::abs(f(x)); };
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) s += gk(af, cuts[i], cuts[i + 1]);
  return s;
}

// sup of f on [a, b]: dense scan, then Brent around the best sample.
std::pair<double, double> sup_on(const Fn& f, double a, double b, int nscan = 2000) {
  int best = 0;
  double fbest = -std::numeric_limits<double>::infinity();
  const double h = (b - a) / nscan;
  for (int i = 0; i <= nscan; ++i) {
    const double v = f(a + h * i);
    if (v > fbest) {
      fbest = v;
      best = i;
    }
  }
  const double lo = a + h * std::max(0, best - 1), hi = a + h * std::min(nscan, best + 1);
  const auto r = boost::math::tools::brent_find_minima([&](double x) { return -f(x); }, lo, hi, 52);
  if (-r.second > fbest) return {r.first, -r.second};
  return {a + h * best, fbest};
}

Sampled finish(std::vector<double> at, std::vector<double> values) {
  Sampled s;
  s.at = std::move(at);
  s.values = std::move(values);
  s.max = *std::max_element(s.values.begin(), s.values.end());
  s.min = *std::min_element(s.values.begin(), s.values.end());
  for (double v : s.values)
    if (!std::isfinite(v)) throw NumericalError("kernel estimates", "non-finite sampled constant");
  s.spread = s.max > 0.0 ? (s.max - s.min) / s.max : 0.0;
  return s;
}

// Radial profile g(r) = t^{-1} exp(-r^2 / 4t) of Gamma_2 and the norms of its
// first two gradient tensors.
double gamma2_tensor_norm(double r, double t, int n) {
  const double g = std::exp(-r * r / (4.0 * t)) / t;
  const double g1 = -r / (2.0 * t) * g;
  const double g2 = (r * r / (4.0 * t * t) - 1.0 / (2.0 * t)) * g;
  switch (n) {
    case 0:
      return g;
    case 1:
      return std::abs(g1);
    default:
      // Hessian eigenvalues g'' (radial) and g'/r (tangential)
      return std::hypot(g2, r > 0.0 ? g1 / r : g2);
  }
}

}  // namespace

double gamma1(double z, double t, int dz) {
  const double g = std::exp(-z * z / (4.0 * t)) / std::sqrt(t);
  const double a = z / (2.0 * t);
  switch (dz) {
    case 0:
      return g;
    case 1:
      return -a * g;
    case 2:
      return (a * a - 1.0 / (2.0 * t)) * g;
    case 3:
      return (-a * a * a + 3.0 * a / (2.0 * t)) * g;
    default:
      throw ParameterError("gamma1: derivative order must be in 0..3");
  }
}

double kbar(const Fn& K, double z, double zt) {
  if (z == 0.0) {
    const double dK = boost::math::differentiation::finite_difference_derivative(K, zt);
    return 2.0 * zt * std::abs(dK);
  }
  return zt / z * std::abs(K(zt - z) - K(z + zt));
}

BoundCheck kernel_bound_check(const Fn& K, double scale, const Fn& dK) {
  if (!(scale > 0.0)) throw ParameterError("kernel bound check: scale must be positive");
  const Fn Kp = dK ? dK : Fn([&](double z) { return boost::math::differentiation::finite_difference_derivative(K, z); });
  const double reach = kReach * scale;

  auto lhs_at = [&](double zt) {
    if (zt <= 0.0) return 0.0;
    const Fn diff = [&](double z) { return K(zt - z) - K(z + zt); };
    const Fn kb = [&](double z) { return kbar(K, z, zt); };
    // zt / z is smooth away from 0; fold it in after locating the kinks of diff
    double s = 0.0;
    std::vector<double> cuts{0.0};
    // exp(-z^2/4t) is below 1e-16 past 14 scales
    const double b = zt + 14.0 * scale;
    const int nscan = 160;
    double x0 = 0.0, f0 = diff(1e-12 * scale);
    for (int i = 1; i <= nscan; ++i) {
      const double x1 = b * i / nscan, f1 = diff(x1);
      if (f0 * f1 < 0.0) {
        boost::math::tools::eps_tolerance<double> tol(50);
        std::uintmax_t it = 100;
        const auto r = boost::math::tools::toms748_solve(diff, std::max(x0, 1e-12 * scale), x1, tol, it);
        cuts.push_back(0.5 * (r.first + r.second));
      }
      x0 = x1;
      f0 = f1;
    }
    cuts.push_back(b);
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) s += gk(kb, cuts[i], cuts[i + 1]);
    return s;
  };

  // sup over zt on a log grid spanning the kernel scale, refined by Brent
  const int nz = 80;
  const double lo = 1e-2 * scale, hi = 1e2 * scale;
  int best = 0;
  double vbest = -1.0;
  std::vector<double> grid(nz);
  for (int i = 0; i < nz; ++i) {
    grid[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (nz - 1));
    const double v = lhs_at(grid[i]);
    if (v > vbest) {
      vbest = v;
      best = i;
    }
  }
  BoundCheck r;
  r.lhs = vbest;
  r.argmax = grid[best];
  if (best > 0 && best + 1 < nz) {
    const auto m = boost::math::tools::brent_find_minima([&](double x) { return -lhs_at(x); }, grid[best - 1],
                                                         grid[best + 1], 30);
    if (-m.second > r.lhs) {
      r.lhs = -m.second;
      r.argmax = m.first;
    }
  }

  const double intK = abs_integral(K, -reach, 0.0) + abs_integral(K, 0.0, reach);
  const double supz2 = sup_on([&](double z) { return z * z * std::abs(Kp(z)); }, -reach, reach).second;
  r.rhs = intK + supz2;
  if (!(r.rhs > 0.0)) throw NumericalError("kernel bound check", "right-hand side vanishes");
  r.ratio = r.lhs / r.rhs;
  return r;
}

KernelEstimateReport heat_kernel_estimates(const std::vector<double>& t_samples, const std::vector<double>& z_samples,
                                           int d) {
  if (t_samples.empty()) throw ParameterError("kernel estimates: no t samples");
  for (double t : t_samples)
    if (!(t >= 1e-3 && t <= 1e3)) throw ParameterError("kernel estimates: t samples must lie in [1e-3, 1e3]");
  for (double z : z_samples)
    if (!(z > 0.0)) throw ParameterError("kernel estimates: z samples must be positive");
  if (d != 2 && d != 3) throw ParameterError("kernel estimates: d must be 2 or 3");

  KernelEstimateReport rep;
  rep.d = d;
  std::map<std::string, std::vector<double>> vals;
  for (double t : t_samples) {
    const double s = std::sqrt(t), reach = kReach * s;
    for (int n = 0; n <= 3; ++n) {
      const Fn f = [&](double z) { return gamma1(z, t, n); };
      vals["x1_n" + std::to_string(n)].push_back(std::pow(t, 0.5 * n) * abs_integral(f, -reach, reach));
    }
    for (int n = 0; n <= 2; ++n) {
      double v;
      if (d == 2) {
        // Gamma_{d-1} = Gamma_1 in the single horizontal variable
        const Fn f = [&](double x) { return gamma1(x, t, n); };
        v = abs_integral(f, -reach, reach);
      } else {
        const Fn f = [&](double r) { return 2.0 * M_PI * r * gamma2_tensor_norm(r, t, n); };
        v = abs_integral(f, 0.0, reach);
      }
      vals["z0_n" + std::to_string(n)].push_back(std::pow(t, 0.5 * n) * v);
    }
    const Fn zd = [&](double z) { return z * std::abs(gamma1(z, t, 1)); };
    const Fn z2d = [&](double z) { return z * z * std::abs(gamma1(z, t, 1)); };
    vals["y2"].push_back(s * sup_on(zd, 0.0, reach).second);
    vals["y3"].push_back(sup_on(z2d, 0.0, reach).second / 4.0);
    const Fn g = [&](double z) { return gamma1(z, t, 0); };
    const Fn dg = [&](double z) { return gamma1(z, t, 1); };
    const Fn d2g = [&](double z) { return gamma1(z, t, 2); };
    vals["ee1_gamma"].push_back(kernel_bound_check(g, s, dg).ratio);
    vals["ee1_dgamma"].push_back(kernel_bound_check(dg, s, d2g).ratio);
  }
  for (auto& [name, v] : vals) rep.items[name] = finish(t_samples, v);

  if (!z_samples.empty()) {
    std::vector<double> y1;
    boost::math::quadrature::exp_sinh<double> tail;
    for (double z : z_samples) {
      const Fn f = [&](double t) { return t > 0.0 ? std::abs(gamma1(z, t, 1)) : 0.0; };
      y1.push_back(gk(f, 0.0, z * z) + tail.integrate(f, z * z, std::numeric_limits<double>::infinity()));
    }
    rep.items["y1"] = finish(z_samples, y1);
  }
  for (const auto& [name, s] : rep.items) rep.max_spread = std::max(rep.max_spread, s.spread);
  return rep;
}

std::string to_string(BandItem b) {
  switch (b) {
    case BandItem::band1:
      return "band1";
    case BandItem::band2:
      return "band2";
    case BandItem::P:
      return "P";
    case BandItem::Q:
      return "Q";
    case BandItem::R:
      return "R";
  }
  return "?";
}

BandednessReport bandedness_inequality(const ModalField& r, double R, BandItem item) {
  if (!r.grid) throw ConfigError("bandedness: field without grid");
  if (!(R > 0.0)) throw ParameterError("bandedness: R must be positive");
  const Grid& g = *r.grid;
  const double cmax = r.coeffs.cwiseAbs().maxCoeff();
  for (int m = 0; m < g.Nx; ++m) {
    if (r.coeffs.row(m).cwiseAbs().maxCoeff() <= 1e-12 * cmax) continue;
    const double Rk = R * std::abs(g.k_values[m]);
    bool ok = true;
    switch (item) {
      case BandItem::band1:
        ok = Rk >= 4.0 - 1e-12;
        break;
      case BandItem::band2:
        ok = Rk <= 1.0 + 1e-12;
        break;
      default:
        ok = Rk >= 1.0 - 1e-12 && Rk <= 4.0 + 1e-12;
    }
    if (!ok)
      throw ParameterError("bandedness: mode with R|k'| = " + std::to_string(Rk) + " outside the band of item " +
                           to_string(item));
  }

  ModalField a, b;
  double bscale = 1.0;
  switch (item) {
    case BandItem::band1:
      a = r;
      b = horizontal_derivative(r, 1);
      bscale = R;
      break;
    case BandItem::band2:
      a = horizontal_derivative(r, 1);
      b = r;
      bscale = 1.0 / R;
      break;
    case BandItem::P:
      a = horizontal_derivative(fractional_laplacian_half(r, -0.5), 1);
      b = r;
      break;
    case BandItem::Q:
      a = fractional_laplacian_half(r, 0.5);
      b = horizontal_derivative(r, 1);
      break;
    case BandItem::R:
      a = horizontal_derivative(fractional_laplacian_half(horizontal_derivative(r, 1), -1.0), 1);
      b = r;
      break;
  }
  const Eigen::VectorXd pa = horizontal_abs_mean(a, 8);
  const Eigen::VectorXd pb = bscale * horizontal_abs_mean(b, 8);

  BandednessReport rep;
  rep.item = item;
  const WeightKind w = std::abs(g.H - 1.0) < 1e-12 ? WeightKind::strip : WeightKind::upper;
  rep.lhs_norm = weighted_interpolation_norm(g.z_nodes, pa, w).k_value;
  rep.rhs_norm = weighted_interpolation_norm(g.z_nodes, pb, w).k_value;
  rep.ratio = rep.rhs_norm > 0.0 ? rep.lhs_norm / rep.rhs_norm : 0.0;
  const double floor = 1e-12 * pb.maxCoeff();
  for (int j = 0; j < pa.size(); ++j)
    if (pb[j] > floor) rep.pointwise_ratio = std::max(rep.pointwise_ratio, pa[j] / pb[j]);
  return rep;
}

std::string to_json(const KernelEstimateReport& r) {
  nlohmann::json j;
  j["d"] = r.d;
  j["max_spread"] = r.max_spread;
  for (const auto& [name, s] : r.items) {
    j["items"][name] = {{"at", s.at}, {"values", s.values}, {"max", s.max}, {"min", s.min}, {"spread", s.spread}};
  }
  return j.dump();
}

}  // namespace rbc::kernels
