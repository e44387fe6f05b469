#include "rbc/cutoffs.hpp"

#include <cmath>

#include "rbc/errors.hpp"

namespace rbc {

namespace {

// C-infinity step: 0 for t <= 0, 1 for t >= 1.
double smooth_step(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  double a = std::exp(-1.0 / t);
  double b = std::exp(-1.0 / (1.0 - t));
  return a / (a + b);
}

}  // namespace

double cutoff_psi(double k) {
  double a = std::abs(k);
  if (a <= 3.5) return 1.0;
  if (a >= 4.0) return 0.0;
  return 1.0 - smooth_step((a - 3.5) / 0.5);
}

double cutoff_zeta(double k) { return cutoff_psi(k) - cutoff_psi(2.0 * k); }

const Eigen::VectorXd& CutoffFamily::band(int j) const {
  if (j < j1 || j > j2)
    throw ParameterError("band index " + std::to_string(j) + " outside [" + std::to_string(j1) + ", " +
                         std::to_string(j2) + "]");
  return zeta_j[j - j1];
}

CutoffFamily build_cutoffs(double R, int j1, int j2, GridPtr grid) {
  if (j1 >= j2) throw ParameterError("build_cutoffs: need j1 < j2");
  if (!(R > 0.0)) throw ParameterError("build_cutoffs: R must be positive");
  CutoffFamily c;
  c.R = R;
  c.j1 = j1;
  c.j2 = j2;
  c.grid = grid;
  const int nx = grid->Nx;
  c.psi_samples.resize(nx);
  c.zeta_below.resize(nx);
  c.zeta_above.resize(nx);
  for (int j = j1; j <= j2; ++j) c.zeta_j.emplace_back(nx);
  for (int m = 0; m < nx; ++m) {
    double k = R * std::abs(grid->k_values[m]);
    c.psi_samples[m] = cutoff_psi(k);
    c.zeta_below[m] = cutoff_psi(std::ldexp(k, 1 - j1));
    c.zeta_above[m] = 1.0 - cutoff_psi(std::ldexp(k, -j2));
    for (int j = j1; j <= j2; ++j) c.zeta_j[j - j1][m] = cutoff_zeta(std::ldexp(k, -j));
  }
  return c;
}

ModalField band_project(const ModalField& f, Band band, const CutoffFamily& cutoffs) {
  if (f.grid.get() != cutoffs.grid.get() &&
      (f.grid->Nx != cutoffs.grid->Nx || f.grid->L != cutoffs.grid->L))
    throw ConfigError("band_project: cutoffs built on a different grid");
  const Eigen::VectorXd* mult = nullptr;
  switch (band.kind) {
    case BandKind::below: mult = &cutoffs.zeta_below; break;
    case BandKind::above: mult = &cutoffs.zeta_above; break;
    case BandKind::band: mult = &cutoffs.band(band.j); break;
  }
  ModalField out = f;
  out.coeffs = mult->asDiagonal() * f.coeffs;
  return out;
}

}  // namespace rbc
