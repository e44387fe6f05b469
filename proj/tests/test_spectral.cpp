#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "rbc/chebyshev.hpp"
#include "rbc/cutoffs.hpp"
#include "rbc/errors.hpp"
#include "rbc/spectral.hpp"

using namespace rbc;
using std::numbers::pi;

namespace {

PhysicalField random_field(GridPtr g, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N(0.0, 1.0);
  PhysicalField f(g);
  for (int i = 0; i < g->Nx; ++i)
    for (int j = 0; j < g->Nz; ++j) f.values(i, j) = N(rng);
  return f;
}

PhysicalField sample(GridPtr g, auto fn) {
  PhysicalField f(g);
  Eigen::VectorXd x = x_nodes(*g);
  for (int i = 0; i < g->Nx; ++i)
    for (int j = 0; j < g->Nz; ++j) f.values(i, j) = fn(x[i], g->z_nodes[j]);
  return f;
}

}  // namespace

TEST_CASE("grid layout") {
  auto g = make_grid(2.0, 16, 9);
  CHECK(g->z_nodes[0] == 0.0);
  CHECK(g->z_nodes[8] == 1.0);
  for (int j = 1; j < 9; ++j) CHECK(g->z_nodes[j] > g->z_nodes[j - 1]);
  CHECK(g->k_values[1] == doctest::Approx(pi));
  CHECK(g->k_values[15] == doctest::Approx(-pi));
  CHECK(g->k_values[8] == doctest::Approx(-8 * pi));
  CHECK_THROWS_AS(make_grid(2.0, 15, 9), ConfigError);
}

TEST_CASE("forward transform of simple fields") {
  auto g = make_grid(2.0, 16, 5);
  auto c = forward_transform(sample(g, [](double, double) { return 3.0; }));
  CHECK(std::abs(c.coeffs(0, 2) - cplx(3.0)) < 1e-14);
  c.coeffs.row(0).setZero();
  CHECK(c.coeffs.cwiseAbs().maxCoeff() < 1e-14);

  auto cc = forward_transform(sample(g, [](double x, double) { return std::cos(2 * pi * x / 2.0); }));
  CHECK(std::abs(cc.profile(1)[0] - cplx(0.5)) < 1e-14);
  CHECK(std::abs(cc.profile(-1)[0] - cplx(0.5)) < 1e-14);
  cc.set_profile(1, Eigen::VectorXcd::Zero(5));
  cc.set_profile(-1, Eigen::VectorXcd::Zero(5));
  CHECK(cc.coeffs.cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("round trip and Parseval on random fields") {
  auto g = make_grid(2.0, 32, 17);
  auto f = random_field(g, 7);
  auto c = forward_transform(f);
  auto back = inverse_transform(c);
  CHECK((back.values - f.values).norm() / f.values.norm() < 1e-12);
  for (int j = 0; j < g->Nz; ++j) {
    double phys = f.values.col(j).squaredNorm() / g->Nx;
    double spec = c.coeffs.col(j).squaredNorm();
    CHECK(std::abs(phys - spec) / phys < 1e-12);
  }
  Eigen::VectorXd pm = horizontal_product_mean(c, c);
  CHECK(std::abs(pm[3] - f.values.col(3).squaredNorm() / g->Nx) < 1e-12 * pm[3]);
}

TEST_CASE("inverse transform basics and errors") {
  auto g = make_grid(2.0, 16, 5);
  ModalField z(g);
  CHECK(inverse_transform(z).values.cwiseAbs().maxCoeff() == 0.0);
  ModalField one(g);
  one.set_profile(1, Eigen::VectorXcd::Constant(5, 0.5));
  one.set_profile(-1, Eigen::VectorXcd::Constant(5, 0.5));
  auto f = inverse_transform(one);
  Eigen::VectorXd x = x_nodes(*g);
  for (int i = 0; i < 16; ++i) CHECK(std::abs(f.values(i, 2) - std::cos(pi * x[i])) < 1e-14);

  ModalField bad(g);
  bad.set_profile(1, Eigen::VectorXcd::Constant(5, 1.0));
  CHECK_THROWS_AS(inverse_transform(bad), SymmetryError);

  PhysicalField wrong(g, Eigen::MatrixXd::Zero(8, 5));
  CHECK_THROWS_AS(forward_transform(wrong), ConfigError);
}

TEST_CASE("horizontal derivative") {
  auto g = make_grid(2.0, 16, 5);
  auto c = forward_transform(sample(g, [](double, double) { return 2.0; }));
  CHECK(horizontal_derivative(c, 1).coeffs.cwiseAbs().maxCoeff() == 0.0);
  auto cs = forward_transform(sample(g, [](double x, double) { return std::cos(pi * x); }));
  auto d = inverse_transform(horizontal_derivative(cs, 1));
  auto expect = sample(g, [](double x, double) { return -pi * std::sin(pi * x); });
  CHECK((d.values - expect.values).cwiseAbs().maxCoeff() < 1e-12);

  auto r = forward_transform(random_field(g, 3));
  r.coeffs.row(g->nyquist_slot()).setZero();
  auto twice = horizontal_derivative(horizontal_derivative(r, 1), 1);
  auto second = horizontal_derivative(r, 2);
  CHECK((twice.coeffs - second.coeffs).cwiseAbs().maxCoeff() < 1e-10 * second.coeffs.cwiseAbs().maxCoeff());
}

TEST_CASE("vertical derivative accuracy") {
  auto g = make_grid(2.0, 4, 33);
  auto lin = forward_transform(sample(g, [](double, double z) { return z; }));
  auto dl = inverse_transform(vertical_derivative(lin, 1));
  CHECK((dl.values.array() - 1.0).abs().maxCoeff() < 1e-10);

  auto sq = forward_transform(sample(g, [](double, double z) { return z * z; }));
  auto dq = inverse_transform(vertical_derivative(sq, 1));
  auto e2 = sample(g, [](double, double z) { return 2 * z; });
  CHECK((dq.values - e2.values).cwiseAbs().maxCoeff() < 1e-11);

  auto s = forward_transform(sample(g, [](double, double z) { return std::sin(pi * z); }));
  auto ds = inverse_transform(vertical_derivative(s, 1));
  auto es = sample(g, [](double, double z) { return pi * std::cos(pi * z); });
  CHECK((ds.values - es.values).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("Clenshaw-Curtis and interpolation") {
  Eigen::VectorXd z = cheb::nodes(21, 0.0, 1.0);
  Eigen::VectorXd w = cheb::cc_weights(21, 0.0, 1.0);
  Eigen::VectorXd f = z.array().exp();
  CHECK(std::abs(w.dot(f) - (std::exp(1.0) - 1.0)) < 1e-14);
  Eigen::VectorXd s = (pi * z.array()).sin();
  CHECK(std::abs(cheb::interpolate(s, 0.0, 1.0, 0.3) - std::sin(0.3 * pi)) < 1e-12);
}

TEST_CASE("fractional Laplacian powers") {
  auto g = make_grid(2.0, 16, 5);
  auto c = forward_transform(sample(g, [](double x, double) { return std::cos(pi * x); }));
  auto h = inverse_transform(fractional_laplacian_half(c, 0.5));
  auto e = sample(g, [](double x, double) { return pi * std::cos(pi * x); });
  CHECK((h.values - e.values).cwiseAbs().maxCoeff() < 1e-12);

  auto r = forward_transform(random_field(g, 11));
  r.coeffs.row(0).setZero();
  auto twice = fractional_laplacian_half(fractional_laplacian_half(r, 0.5), 0.5);
  auto lap = horizontal_derivative(r, 2);
  CHECK((twice.coeffs + lap.coeffs).cwiseAbs().maxCoeff() < 1e-10 * lap.coeffs.cwiseAbs().maxCoeff());
  auto id = fractional_laplacian_half(fractional_laplacian_half(r, -0.5), 0.5);
  CHECK((id.coeffs - r.coeffs).cwiseAbs().maxCoeff() < 1e-12 * r.coeffs.cwiseAbs().maxCoeff());

  auto withmean = forward_transform(random_field(g, 12));
  CHECK_THROWS_AS(fractional_laplacian_half(withmean, -0.5), SingularModeError);
  CHECK_THROWS_AS(fractional_laplacian_half(withmean, 0.25), ParameterError);
}

TEST_CASE("cutoff profile and partition of unity") {
  CHECK(cutoff_zeta(0.5) == 0.0);
  CHECK(cutoff_zeta(4.0) == 0.0);
  CHECK(cutoff_zeta(9.0) == 0.0);
  CHECK(cutoff_psi(3.5) == 1.0);
  CHECK(cutoff_psi(4.0) == 0.0);
  for (double k = 3.5; k <= 4.0; k += 0.01) CHECK(cutoff_psi(k + 0.01) <= cutoff_psi(k));

  auto g = make_grid(2.0, 256, 5);
  auto cut = build_cutoffs(1.0, 0, 5, g);
  for (int m = 0; m < g->Nx; ++m) {
    double sum = cut.zeta_below[m] + cut.zeta_above[m];
    for (int j = 0; j <= 5; ++j) sum += cut.band(j)[m];
    CHECK(std::abs(sum - 1.0) < 1e-12);
    double k = std::abs(g->k_values[m]);
    for (int j = 0; j <= 5; ++j)
      if (k <= std::ldexp(1.0, j) || k >= std::ldexp(1.0, j + 2)) CHECK(cut.band(j)[m] == 0.0);
  }
  CHECK(cut.zeta_below[0] == 1.0);
  CHECK_THROWS_AS(build_cutoffs(1.0, 3, 3, g), ParameterError);
  CHECK_THROWS_AS(band_project(ModalField(g), Band::at(6), cut), ParameterError);
}

TEST_CASE("band projection") {
  auto g = make_grid(2.0, 128, 9);
  auto cut = build_cutoffs(1.0, 0, 4, g);
  auto c = forward_transform(sample(g, [](double, double z) { return 1.0 + z; }));
  for (int j = 0; j <= 4; ++j) CHECK(band_project(c, Band::at(j), cut).coeffs.cwiseAbs().maxCoeff() == 0.0);

  auto r = forward_transform(random_field(g, 5));
  ModalField sum = band_project(r, Band::below(), cut);
  sum.coeffs += band_project(r, Band::above(), cut).coeffs;
  for (int j = 0; j <= 4; ++j) sum.coeffs += band_project(r, Band::at(j), cut).coeffs;
  CHECK((sum.coeffs - r.coeffs).cwiseAbs().maxCoeff() < 1e-12 * r.coeffs.cwiseAbs().maxCoeff());

  // k = 2 pi lies on the plateau of zeta_1, which equals 1 on [4, 7]
  auto single = forward_transform(sample(g, [](double x, double z) { return std::cos(2 * pi * x) * z; }));
  auto p1 = band_project(single, Band::at(1), cut);
  CHECK((p1.coeffs - single.coeffs).cwiseAbs().maxCoeff() < 1e-14);

  for (int j = 0; j <= 4; ++j) {
    auto a = vertical_derivative(band_project(r, Band::at(j), cut), 1);
    auto b = band_project(vertical_derivative(r, 1), Band::at(j), cut);
    CHECK((a.coeffs - b.coeffs).cwiseAbs().maxCoeff() < 1e-12 * std::max(1.0, b.coeffs.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("horizontal absolute mean") {
  auto g = make_grid(2.0, 16, 3);
  auto c = forward_transform(sample(g, [](double x, double) { return std::cos(pi * x); }));
  Eigen::VectorXd m = horizontal_abs_mean(c, 64);
  CHECK(std::abs(m[1] - 2.0 / pi) < 1e-4);
}
