#include "rbc/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>

#include "rbc/chebyshev.hpp"
#include "rbc/errors.hpp"

namespace rbc {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

void check_shape(const GridPtr& g, Eigen::Index rows, Eigen::Index cols, const char* what) {
  if (!g) throw ConfigError(std::string(what) + ": field has no grid");
  if (rows != g->Nx || cols != g->Nz)
    throw ConfigError(std::string(what) + ": array shape " + std::to_string(rows) + "x" +
                      std::to_string(cols) + " does not match grid " + std::to_string(g->Nx) + "x" +
                      std::to_string(g->Nz));
}

}  // namespace

GridPtr make_grid(double L, int Nx, int Nz, double H) {
  if (!(L > 0.0)) throw ConfigError("grid: L must be positive");
  if (Nx <= 0 || Nx % 2 != 0) throw ConfigError("grid: Nx must be even and positive");
  if (Nz < 3) throw ConfigError("grid: Nz must be at least 3");
  if (!(H > 0.0)) throw ConfigError("grid: H must be positive");
  auto g = std::make_shared<Grid>();
  g->L = L;
  g->Nx = Nx;
  g->Nz = Nz;
  g->H = H;
  g->z_nodes = cheb::nodes(Nz, 0.0, H);
  g->D1 = cheb::diff_matrix(Nz, 0.0, H);
  g->D2 = g->D1 * g->D1;
  g->quad_weights = cheb::cc_weights(Nz, 0.0, H);
  g->k_values.resize(Nx);
  for (int m = 0; m < Nx; ++m) g->k_values[m] = 2.0 * std::numbers::pi * g->wavenumber_index(m) / L;
  return g;
}

PhysicalField::PhysicalField(GridPtr g) : grid(std::move(g)) {
  values = Eigen::MatrixXd::Zero(grid->Nx, grid->Nz);
}

ModalField::ModalField(GridPtr g) : grid(std::move(g)) {
  coeffs = Eigen::MatrixXcd::Zero(grid->Nx, grid->Nz);
}

Eigen::VectorXcd ModalField::profile(int n) const {
  return coeffs.row(grid->mode_slot(n)).transpose();
}

void ModalField::set_profile(int n, const Eigen::VectorXcd& p) {
  coeffs.row(grid->mode_slot(n)) = p.transpose();
}

Eigen::VectorXd x_nodes(const Grid& g) {
  Eigen::VectorXd x(g.Nx);
  for (int i = 0; i < g.Nx; ++i) x[i] = g.L * i / g.Nx;
  return x;
}

HorizontalFft::HorizontalFft(int Nx, int howmany) : nx_(Nx), howmany_(howmany) {
  rbuf_.resize(Nx, howmany);
  cbuf_.resize(Nx / 2 + 1, howmany);
  int n[1] = {Nx};
  std::lock_guard<std::mutex> lock(planner_mutex());
  fwd_ = fftw_plan_many_dft_r2c(1, n, howmany, rbuf_.data(), nullptr, 1, Nx,
                                reinterpret_cast<fftw_complex*>(cbuf_.data()), nullptr, 1, Nx / 2 + 1,
                                FFTW_ESTIMATE | FFTW_UNALIGNED);
  inv_ = fftw_plan_many_dft_c2r(1, n, howmany, reinterpret_cast<fftw_complex*>(cbuf_.data()), nullptr, 1,
                                Nx / 2 + 1, rbuf_.data(), nullptr, 1, Nx, FFTW_ESTIMATE | FFTW_UNALIGNED);
}

HorizontalFft::~HorizontalFft() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
  fftw_destroy_plan(static_cast<fftw_plan>(inv_));
}

void HorizontalFft::forward(const Eigen::MatrixXd& phys, Eigen::MatrixXcd& half) {
  rbuf_ = phys;
  fftw_execute(static_cast<fftw_plan>(fwd_));
  half = cbuf_ / static_cast<double>(nx_);
}

void HorizontalFft::inverse(const Eigen::MatrixXcd& half, Eigen::MatrixXd& phys) {
  cbuf_ = half;
  fftw_execute(static_cast<fftw_plan>(inv_));
  phys = rbuf_;
}

double hermitian_defect(const ModalField& f) {
  const Grid& g = *f.grid;
  double scale = f.coeffs.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  double worst = 0.0;
  for (int m = 0; m < g.Nx; ++m) {
    int mm = (g.Nx - m) % g.Nx;
    worst = std::max(worst, (f.coeffs.row(m) - f.coeffs.row(mm).conjugate()).cwiseAbs().maxCoeff());
  }
  return worst / scale;
}

ModalField forward_transform(const PhysicalField& f) {
  check_shape(f.grid, f.values.rows(), f.values.cols(), "forward_transform");
  const Grid& g = *f.grid;
  HorizontalFft fft(g.Nx, g.Nz);
  Eigen::MatrixXcd half;
  fft.forward(f.values, half);
  ModalField out(f.grid);
  for (int m = 0; m <= g.Nx / 2; ++m) out.coeffs.row(m) = half.row(m);
  for (int m = g.Nx / 2 + 1; m < g.Nx; ++m) out.coeffs.row(m) = half.row(g.Nx - m).conjugate();
  return out;
}

PhysicalField inverse_transform(const ModalField& f) {
  check_shape(f.grid, f.coeffs.rows(), f.coeffs.cols(), "inverse_transform");
  if (hermitian_defect(f) > 1e-12)
    throw SymmetryError("inverse_transform: coefficients are not Hermitian-symmetric");
  const Grid& g = *f.grid;
  HorizontalFft fft(g.Nx, g.Nz);
  PhysicalField out(f.grid);
  fft.inverse(f.coeffs.topRows(g.Nx / 2 + 1), out.values);
  return out;
}

ModalField horizontal_derivative(const ModalField& f, int order) {
  if (order < 1) throw ParameterError("horizontal_derivative: order must be positive");
  const Grid& g = *f.grid;
  ModalField out = f;
  for (int m = 0; m < g.Nx; ++m) out.coeffs.row(m) *= std::pow(cplx(0.0, g.k_values[m]), order);
  if (order % 2 == 1) out.coeffs.row(g.nyquist_slot()).setZero();
  return out;
}

ModalField vertical_derivative(const ModalField& f, int order) {
  if (order < 1) throw ParameterError("vertical_derivative: order must be positive");
  ModalField out = f;
  for (int o = 0; o < order; ++o) out.coeffs = (out.coeffs * f.grid->D1.transpose()).eval();
  return out;
}

ModalField fractional_laplacian_half(const ModalField& f, double power) {
  if (power != 0.5 && power != -0.5 && power != 1.0 && power != -1.0)
    throw ParameterError("fractional_laplacian_half: power must be one of +-1/2, +-1");
  const Grid& g = *f.grid;
  ModalField out = f;
  if (power < 0.0) {
    double scale = f.coeffs.cwiseAbs().maxCoeff();
    if (f.coeffs.row(0).cwiseAbs().maxCoeff() > 1e-14 * scale)
      throw SingularModeError("fractional_laplacian_half: negative power applied to a field with nonzero mean");
    out.coeffs.row(0).setZero();
  }
  for (int m = 1; m < g.Nx; ++m) out.coeffs.row(m) *= std::pow(std::abs(g.k_values[m]), 2.0 * power);
  if (power > 0.0) out.coeffs.row(0).setZero();
  return out;
}

Eigen::VectorXd horizontal_abs_mean(const ModalField& f, int oversample) {
  const Grid& g = *f.grid;
  const int nx = g.Nx * std::max(1, oversample);
  Eigen::MatrixXcd half = Eigen::MatrixXcd::Zero(nx / 2 + 1, g.Nz);
  for (int m = 0; m < g.Nx / 2; ++m) half.row(m) = f.coeffs.row(m);
  // On a finer grid the Nyquist term is the cosine c cos(k_N x), i.e. c/2 at +-Nx/2.
  half.row(g.Nx / 2) = f.coeffs.row(g.Nx / 2).real().cast<cplx>() * (oversample > 1 ? 0.5 : 1.0);
  HorizontalFft fft(nx, g.Nz);
  Eigen::MatrixXd phys;
  fft.inverse(half, phys);
  return phys.cwiseAbs().colwise().mean().transpose();
}

Eigen::VectorXd horizontal_product_mean(const ModalField& a, const ModalField& b) {
  return (a.coeffs.array() * b.coeffs.array().conjugate()).colwise().sum().real().transpose();
}

}  // namespace rbc
