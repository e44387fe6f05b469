#include <doctest.h>

#include <cmath>

#include "json.hpp"
#include "oracles.hpp"
#include "rbc/boussinesq.hpp"
#include "rbc/diagnostics.hpp"
#include "rbc/errors.hpp"

using namespace rbc;

namespace {

double f_poly(double z) { return z * z * (1 - z) * (1 - z); }
double f1(double z) { return 2 * z * (1 - z) * (1 - 2 * z); }
double f2(double z) { return 2 - 12 * z + 12 * z * z; }

// psi = A cos(k x) z^2 (1-z)^2 on top of the conduction state, with a small
// temperature perturbation so that <T w> is nonzero.
State manufactured_state(double A, int Nx = 32, int Nz = 33) {
  SimParams p;
  p.Nx = Nx;
  p.Nz = Nz;
  State s = conduction_state(p);
  const Grid& g = *s.T.grid;
  Eigen::VectorXcd prof(Nz), tprof(Nz);
  for (int j = 0; j < Nz; ++j) {
    const double z = g.z_nodes[j];
    prof[j] = 0.5 * A * f_poly(z);
    tprof[j] = cplx(0.0, 0.05) * std::sin(M_PI * z);
  }
  s.psi.set_profile(1, prof);
  s.psi.set_profile(-1, prof.conjugate());
  s.T.set_profile(1, tprof);
  s.T.set_profile(-1, tprof.conjugate());
  return s;
}

}  // namespace

TEST_CASE("conduction state has unit Nusselt number everywhere") {
  SimParams p;
  p.Ra = 1e5;
  State s = conduction_state(p);
  CHECK(s.T.profile(0)[0].real() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(s.T.profile(0)[s.T.grid->Nz - 1]) < 1e-15);
  TimeAverages a = instantaneous_averages(s);
  CHECK(std::abs(nusselt_volume(a) - 1.0) < 1e-10);
  CHECK(std::abs(nusselt_dissipation(a) - 1.0) < 1e-10);
  for (double z : {0.0, 0.137, 0.5, 0.9, 1.0}) CHECK(std::abs(nusselt_plane(a, z) - 1.0) < 1e-10);
  auto r = nusselt_report(a);
  CHECK(r.spread < 1e-10);
  CHECK(r.plane_flatness < 1e-10);
  CHECK(std::abs(energy_balance_residual(a, p)) < 1e-9);
  auto bl = boundary_layer_bound(a, 0.1);
  CHECK(bl.with_T == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(bl.with_abs == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("plane flux at the wall is pure conduction") {
  State s = manufactured_state(3.0);
  TimeAverages a = instantaneous_averages(s);
  CHECK(std::abs(a.Tw()[0]) < 1e-14);
  CHECK(nusselt_plane(a, 0.0) == doctest::Approx(-a.dzT()[0]).epsilon(1e-13));
}

TEST_CASE("volume Nusselt is the vertical mean of the plane profile") {
  State s = manufactured_state(3.0);
  TimeAverages a = instantaneous_averages(s);
  const int n = 4001;
  double trap = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = static_cast<double>(i) / (n - 1);
    trap += (i == 0 || i == n - 1 ? 0.5 : 1.0) * nusselt_plane(a, z);
  }
  trap /= (n - 1);
  CHECK(nusselt_volume(a) == doctest::Approx(trap).epsilon(1e-6));
}

TEST_CASE("boundary-layer bound variants are ordered") {
  State s = manufactured_state(40.0);
  TimeAverages a = instantaneous_averages(s);
  for (double d : {0.05, 0.1, 0.3, 0.49}) {
    auto b = boundary_layer_bound(a, d);
    CHECK(b.with_abs >= b.with_T - 1e-12);
    CHECK(b.delta == d);
  }
  CHECK_THROWS_AS(boundary_layer_bound(a, 0.0), ParameterError);
  CHECK_THROWS_AS(boundary_layer_bound(a, 0.5), ParameterError);
}

TEST_CASE("empty averages are a state error") {
  SimParams p;
  p.Nx = 16;
  p.Nz = 9;
  TimeAverages a(*conduction_state(p).T.grid);
  CHECK_THROWS_AS(nusselt_plane(a, 0.5), StateError);
  CHECK_THROWS_AS(nusselt_volume(a), StateError);
  CHECK_THROWS_AS(nusselt_dissipation(a), StateError);
  CHECK_THROWS_AS(nusselt_report(a), StateError);
}

TEST_CASE("delta choice") {
  CHECK(delta_choice(1e6, 1.0, 9.0) == doctest::Approx(std::cbrt(1.0 / (10.0 * 1e6 * std::log(1e6)))));
  // Nu/Pr -> 0 at Ra = e: delta = e^(-1/3)
  CHECK(delta_choice(std::exp(1.0), 1e12, 1.0) == doctest::Approx(std::exp(-1.0 / 3.0)).epsilon(1e-10));
  double prev = 1.0;
  for (double ra = 1e3; ra < 1e10; ra *= 1.7) {
    const double d = delta_choice(ra, 1.0, 5.0);
    CHECK(d < prev);
    prev = d;
  }
  for (double ra : {1e4, 1e5, 1e6, 1e8}) {
    for (double pr : {0.1, 1.0, 10.0}) {
      const double nu = 0.2 * std::pow(ra, 0.28);
      const double ratio = delta_choice(ra, pr, nu) / oracle::opt1_argmin(ra, pr, nu);
      CAPTURE(ra);
      CAPTURE(pr);
      CHECK(ratio > 0.5);
      CHECK(ratio < 2.0);
    }
  }
}

TEST_CASE("bound check picks the branch from the Prandtl threshold") {
  // threshold (1e4 ln 1e4)^(1/3) ~ 45 > 10, so the low-Pr branch applies
  auto r = bound_check({{1e4, 10.0, 5.0}});
  CHECK(r.branches[0] == BoundBranch::low_pr);
  CHECK(r.C == doctest::Approx(5.0 / std::sqrt(1e4 * std::log(1e4) / 10.0)));
  auto hi = bound_check({{1e4, 100.0, 5.0}});
  CHECK(hi.branches[0] == BoundBranch::high_pr);
  CHECK(hi.C == doctest::Approx(5.0 / std::cbrt(1e4 * std::log(1e4))));

  std::vector<BoundPoint> pts{{1e4, 1.0, 2.6}, {1e5, 1.0, 5.0}, {1e6, 1.0, 9.0}, {1e5, 1e3, 4.0}};
  auto a = bound_check(pts);
  for (auto& p : pts) p.Nu *= 2.0;
  auto b = bound_check(pts);
  CHECK(b.C == doctest::Approx(2.0 * a.C));
  CHECK(b.binding_index == a.binding_index);
  for (std::size_t i = 0; i < pts.size(); ++i) CHECK(a.C_per_point[i] <= a.C);

  CHECK_THROWS_AS(bound_check({}), ParameterError);
  CHECK_THROWS_AS(bound_check({{5e3, 1.0, 2.0}}), ParameterError);
}

TEST_CASE("Hardy ratio vanishes without flow") {
  SimParams p;
  p.Nx = 16;
  p.Nz = 17;
  CHECK(hardy_nonlinearity_ratio(conduction_state(p)) == 0.0);
}

TEST_CASE("Hardy ratio of a manufactured streamfunction matches quadrature") {
  const double A = 2.0, L = 2.0, k = 2 * M_PI / L;
  State s = manufactured_state(A);
  // independent oracle: analytic fields, fine x sampling, midpoint rule in z
  const int nx = 512, nz = 4000;
  double num = 0.0, den = 0.0;
  for (int j = 0; j < nz; ++j) {
    const double z = (j + 0.5) / nz;
    const double f = f_poly(z), fp = f1(z), fpp = f2(z);
    double mean_abs = 0.0;
    for (int i = 0; i < nx; ++i) {
      const double x = L * i / nx, c = std::cos(k * x), sn = std::sin(k * x);
      const double a = A * A * k * sn * c * (f * fpp - fp * fp);
      const double b = A * A * k * k * f * fp;
      mean_abs += std::hypot(a, b);
    }
    mean_abs /= nx;
    num += mean_abs / z / nz;
    den += 0.5 * A * A * (2 * k * k * fp * fp + fpp * fpp + std::pow(k, 4) * f * f) / nz;
  }
  CHECK(hardy_nonlinearity_ratio(s) == doctest::Approx(num / den).epsilon(1e-2));
  // both integrals are quadratic in the amplitude
  CHECK(hardy_nonlinearity_ratio(manufactured_state(5 * A)) == doctest::Approx(hardy_nonlinearity_ratio(s)).epsilon(1e-12));
}

TEST_CASE("plateau drift") {
  CHECK(plateau_drift(std::vector<double>(100, 3.0)) == 0.0);
  std::vector<double> ramp;
  for (int i = 0; i < 100; ++i) ramp.push_back(1.0 + 0.01 * i);
  CHECK(plateau_drift(ramp) > 0.1);
  CHECK(std::isnan(plateau_drift({1.0})));
}

TEST_CASE("report JSON uses the fixed field names") {
  SimParams p;
  auto nj = nlohmann::json::parse(to_json(nusselt_report(instantaneous_averages(conduction_state(p)))));
  for (const char* key : {"nu_plane_mean", "nu_volume", "nu_dissipation", "spread"}) CHECK(nj.contains(key));
  auto z = Eigen::VectorXd::LinSpaced(11, 0.0, 1.0);
  auto kj = nlohmann::json::parse(to_json(weighted_interpolation_norm(z, Eigen::VectorXd::Ones(11), WeightKind::upper)));
  for (const char* key : {"k_value", "lambda_star", "sup_part", "weighted_part"}) CHECK(kj.contains(key));
  CHECK(kj["weight_kind"] == "upper");
}
