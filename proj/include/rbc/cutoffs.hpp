#pragma once

#include <vector>

#include "rbc/spectral.hpp"

namespace rbc {

// psi = 1 for |k| <= 7/2, 0 for |k| >= 4, C-infinity monotone in between.
double cutoff_psi(double k);
// zeta(k) = psi(k) - psi(2k), supported in 7/4 < |k| < 4.
double cutoff_zeta(double k);

// Cutoffs act on the rescaled wavenumber R|k|:
//   zeta_j(k) = zeta(2^-j R|k|),  zeta_<(k) = psi(2^(1-j1) R|k|),
//   zeta_>(k) = 1 - psi(2^-j2 R|k|),
// so that zeta_< + sum_j zeta_j + zeta_> telescopes to 1.
struct CutoffFamily {
  double R = 1.0;
  int j1 = 0;
  int j2 = 1;
  GridPtr grid;
  Eigen::VectorXd psi_samples;  // psi(R|k|) per wavenumber slot
  std::vector<Eigen::VectorXd> zeta_j;  // index j - j1
  Eigen::VectorXd zeta_below;
  Eigen::VectorXd zeta_above;

  const Eigen::VectorXd& band(int j) const;
};

CutoffFamily build_cutoffs(double R, int j1, int j2, GridPtr grid);

enum class BandKind { below, band, above };

struct Band {
  BandKind kind = BandKind::band;
  int j = 0;
  static Band below() { return {BandKind::below, 0}; }
  static Band above() { return {BandKind::above, 0}; }
  static Band at(int j) { return {BandKind::band, j}; }
};

ModalField band_project(const ModalField& f, Band band, const CutoffFamily& cutoffs);

}  // namespace rbc
