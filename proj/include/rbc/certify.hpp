#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rbc/kernels.hpp"
#include "rbc/stokes.hpp"

namespace rbc::certify {

struct StokesCertConfig {
  double R = 1.0 / 16.0;
  double R0 = 1.0 / 8.0;
  double L = 2.0;
  int Nz = 49;
  int Nt = 200;
  double dt = 0.02;  // t0 = Nt dt
  stokes::TimeScheme scheme = stokes::TimeScheme::bdf2;
  int strip_trials = 50;
  int half_trials = 20;
  int modes_per_trial = 3;
  bool refine = true;            // rerun the strip trials with (Nz, Nt) doubled
  bool negative_control = true;  // single mode n = 1, band constraint off
  double strip_ratio_ceiling = 10.0;
  double half_ratio_ceiling = 10.0;
  double decomposition_tol = 1e-6;
  double boundary_tol = 1e-10;
  double divergence_tol = 1e-5;
  bool operator==(const StokesCertConfig&) const = default;
};

struct StokesCertReport {
  std::vector<double> strip_ratios;
  double strip_max = 0.0;
  stokes::MaxRegReport strip_worst;
  std::vector<double> strip_ratios_refined;
  double strip_max_refined = 0.0;
  double refinement_change = 0.0;  // |max_refined / max - 1|

  std::vector<double> half_ratios;
  double half_max = 0.0;
  double decomposition_error = 0.0;  // max relative L2, half-space decomposition vs direct
  double boundary_residual = 0.0;
  double divergence_residual = 0.0;

  double negative_ratio = 0.0;
  double negative_factor = 0.0;  // negative_ratio / strip_max

  double seconds = 0.0;
  std::vector<std::string> failures;  // ceilings and tolerances exceeded
  bool passed() const { return failures.empty(); }
};

// Strip trials draw modes_per_trial distinct band modes per seed; half-space
// trials add a divergence source rho on odd trials.
StokesCertReport certify_stokes(const StokesCertConfig& cfg, std::uint64_t seed);
std::string to_json(const StokesCertReport& r);

struct KernelCertConfig {
  std::vector<double> t_samples{1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3};
  std::vector<double> z_samples{0.1, 1.0, 10.0};
  int d = 3;
  double ee1_ceiling = 1.0;
  double constant_ceiling = 16.0;  // every other scaled constant
  double spread_ceiling = 0.01;
  bool operator==(const KernelCertConfig&) const = default;
};

struct KernelCertReport {
  kernels::KernelEstimateReport estimates;
  double seconds = 0.0;
  std::vector<std::string> failures;
  bool passed() const { return failures.empty(); }
};

KernelCertReport certify_kernels(const KernelCertConfig& cfg);
std::string to_json(const KernelCertReport& r);

}  // namespace rbc::certify
