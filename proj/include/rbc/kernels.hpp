#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "rbc/interp_norm.hpp"
#include "rbc/spectral.hpp"

namespace rbc::kernels {

// Gamma_1(z, t) = t^{-1/2} exp(-z^2 / 4t) and its z-derivatives up to order 3.
double gamma1(double z, double t, int dz = 0);

// One scaled kernel quantity sampled over t (or over z for y1).
struct Sampled {
  std::vector<double> at;      // sample points
  std::vector<double> values;  // scaled constant per sample
  double max = 0.0, min = 0.0;
  double spread = 0.0;  // (max - min) / max
};

// Items, each scaled so that it is independent of t analytically:
//   x1_n  t^{n/2} int |d_z^n Gamma_1| dz              n = 0..3
//   z0_n  t^{n/2} int |(grad')^n Gamma_{d-1}| dx'      n = 0..2
//   y1    int_0^inf |d_z Gamma_1(z, t)| dt             sampled over z
//   y2    t^{1/2} sup_z z |d_z Gamma_1|
//   y3    sup_z z^2 |d_z Gamma_1| / 4, i.e. sup xi^3 e^{-xi^2} with xi = z / (2 sqrt t)
//   ee1_gamma, ee1_dgamma  kernel_bound_check ratio for K = Gamma_1, d_z Gamma_1
struct KernelEstimateReport {
  int d = 3;
  std::map<std::string, Sampled> items;
  double max_spread = 0.0;
};

// t_samples must lie in [1e-3, 1e3]; z_samples (for y1) must be positive.
KernelEstimateReport heat_kernel_estimates(const std::vector<double>& t_samples, const std::vector<double>& z_samples,
                                           int d = 3);

// Kbar(z, zt) = (zt / z) |K(zt - z) - K(z + zt)|.
double kbar(const std::function<double(double)>& K, double z, double zt);

struct BoundCheck {
  double lhs = 0.0;  // sup_zt int_0^inf Kbar(z, zt) dz
  double rhs = 0.0;  // int |K| + sup z^2 |K'|
  double ratio = 0.0;
  double argmax = 0.0;  // maximizing zt
};

// K must decay on the length scale `scale` (sqrt(t) for heat kernels); quadratures
// are truncated 40 scales out. K' comes from finite differences unless given.
BoundCheck kernel_bound_check(const std::function<double(double)>& K, double scale,
                              const std::function<double(double)>& dK = {});

enum class BandItem { band1, band2, P, Q, R };
std::string to_string(BandItem b);

struct BandednessReport {
  BandItem item = BandItem::band1;
  // norm form: interpolation norms of the z-profiles of <|lhs field|>' and <|rhs field|>'
  double lhs_norm = 0.0, rhs_norm = 0.0;
  double ratio = 0.0;  // lhs_norm / rhs_norm
  // pointwise form (band1, band2): sup over z of the profile ratio
  double pointwise_ratio = 0.0;
};

// band1: <|r|>' <= R <|grad' r|>'            needs R|k'| >= 4
// band2: <|grad' r|>' <= <|r|>' / R          needs R|k'| <= 1
// P:     ||grad'(-Delta')^{-1/2} r|| ~ ||r||  needs 1 <= R|k'| <= 4
// Q:     ||(-Delta')^{1/2} r|| ~ ||grad' r||  same band
// R:     ||grad'(-Delta')^{-1} div' r|| <= ||r|| for a horizontal vector field (d = 2: one component)
// The norm is the weighted interpolation norm with the strip weight on [0, 1]
// and the upper weight otherwise. Wrong band -> ParameterError.
BandednessReport bandedness_inequality(const ModalField& r, double R, BandItem item);

std::string to_json(const KernelEstimateReport& r);

}  // namespace rbc::kernels
