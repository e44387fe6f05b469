#pragma once

// Independent reference computations shared by the unit tests and the
// acceptance binary. Nothing here calls into the library's algorithms.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "rbc/interp_norm.hpp"

namespace oracle {

inline double weight(rbc::WeightKind w, double z) {
  switch (w) {
    case rbc::WeightKind::strip: return 1.0 / (z * (1.0 - z));
    case rbc::WeightKind::upper: return 1.0 / z;
    case rbc::WeightKind::lower: return 1.0 / (1.0 - z);
  }
  return 0.0;
}

// lambda + int (g - lambda)_+ w dz with g the piecewise-linear interpolant, by
// composite midpoint rule on `sub` subpanels per node interval. Returns +inf when
// g exceeds lambda at an endpoint where the weight is not integrable.
inline double k_functional(const Eigen::VectorXd& z, const Eigen::VectorXd& g, rbc::WeightKind w,
                           double lambda, int sub = 48) {
  const Eigen::Index n = z.size();
  const bool sing_lo = (w != rbc::WeightKind::lower) && z[0] == 0.0;
  const bool sing_hi = (w != rbc::WeightKind::upper) && z[n - 1] == 1.0;
  if ((sing_lo && g[0] > lambda) || (sing_hi && g[n - 1] > lambda)) return std::numeric_limits<double>::infinity();
  double total = 0.0;
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    const double a = z[i], b = z[i + 1], h = (b - a) / sub;
    if (g[i] <= lambda && g[i + 1] <= lambda) continue;
    for (int s = 0; s < sub; ++s) {
      const double zm = a + (s + 0.5) * h;
      const double gm = g[i] + (g[i + 1] - g[i]) * (zm - a) / (b - a);
      if (gm > lambda) total += (gm - lambda) * weight(w, zm) * h;
    }
  }
  return lambda + total;
}

// Minimum of k_functional over a dense lambda grid, refined twice around the
// best grid point.
inline double brute_force_norm(const Eigen::VectorXd& z, const Eigen::VectorXd& g, rbc::WeightKind w) {
  const double gmax = g.maxCoeff();
  if (gmax <= 0.0) return 0.0;
  double lo = 0.0, hi = gmax;
  double best = std::numeric_limits<double>::infinity(), best_lam = 0.0;
  int npts = 1001;
  for (int level = 0; level < 3; ++level) {
    const double step = (hi - lo) / (npts - 1);
    for (int i = 0; i < npts; ++i) {
      const double lam = lo + i * step;
      const double k = k_functional(z, g, w, lam);
      if (k < best) {
        best = k;
        best_lam = lam;
      }
    }
    lo = std::max(0.0, best_lam - 2.0 * step);
    hi = std::min(gmax, best_lam + 2.0 * step);
    npts = 201;
  }
  return best;
}

// Random nonnegative profile on the given nodes: a positive mix of smooth bumps,
// optionally vanishing at the ends of [0,1].
inline Eigen::VectorXd random_profile(const Eigen::VectorXd& z, std::mt19937_64& rng, bool vanish_at_ends) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(z.size());
  const int terms = 1 + static_cast<int>(U(rng) * 4);
  for (int t = 0; t < terms; ++t) {
    const double amp = U(rng), c = U(rng), wdt = 0.03 + 0.3 * U(rng);
    for (Eigen::Index i = 0; i < z.size(); ++i) g[i] += amp * std::exp(-std::pow((z[i] - c) / wdt, 2));
  }
  if (vanish_at_ends)
    for (Eigen::Index i = 0; i < z.size(); ++i) g[i] *= std::pow(std::clamp(4.0 * z[i] * (1.0 - z[i]), 0.0, 1.0), 1.0 + 2.0 * U(rng));
  else
    g.array() += 0.2 * U(rng);
  return g;
}

// Right side of the boundary-layer optimization bound with the band gap
// j2 - j1 = m: m delta^2 (Nu/Pr + 1) Ra + 2^(-m/2) delta Ra^(1/2) Nu + 1/delta.
inline double opt1_rhs(double delta, double m, double Ra, double Pr, double Nu) {
  return m * delta * delta * (Nu / Pr + 1.0) * Ra + std::pow(2.0, -m / 2.0) * delta * std::sqrt(Ra) * Nu + 1.0 / delta;
}

// Grid-scan minimizer in delta (log grid on [1e-7, 1]) at the asymptotic gap m = ln Ra.
inline double opt1_argmin(double Ra, double Pr, double Nu) {
  const double m = std::log(Ra);
  double best = std::numeric_limits<double>::infinity(), arg = 0.0;
  for (int i = 0; i <= 70000; ++i) {
    const double d = std::pow(10.0, -7.0 + 7.0 * i / 70000.0);
    const double r = opt1_rhs(d, m, Ra, Pr, Nu);
    if (r < best) {
      best = r;
      arg = d;
    }
  }
  return arg;
}

// Heat-kernel constants from hand calculus with Gamma_1 = t^{-1/2} e^{-z^2/4t}.
// int Gamma_1 dz = 2 sqrt(pi); int |d_z Gamma_1| = 2 Gamma_1(0) t^{1/2} scaled to 2;
// int |d_z^2 Gamma_1| = 4 max |d_z Gamma_1| = 2 sqrt(2) e^{-1/2} / t.
inline double x1_n0() { return 2.0 * std::sqrt(M_PI); }
inline double x1_n1() { return 2.0; }
inline double x1_n2() { return 2.0 * std::sqrt(2.0) * std::exp(-0.5); }
// int_0^inf z/(2 t^{3/2}) e^{-z^2/4t} dt with t = z^2 s: (1/2) int s^{-3/2} e^{-1/4s} ds = sqrt(pi).
inline double y1() { return std::sqrt(M_PI); }
// z |d_z Gamma_1| = 2 u e^{-u} t^{-1/2} with u = z^2/4t; max at u = 1.
inline double y2() { return 2.0 / std::exp(1.0); }
inline double y3() { return std::pow(1.5, 1.5) * std::exp(-1.5); }
// Gamma_2 = t^{-1} e^{-r^2/4t} on the plane: mass 4 pi; int |grad| = 2 pi^{3/2} t^{-1/2}.
inline double z0_n0_plane() { return 4.0 * M_PI; }
inline double z0_n1_plane() { return 2.0 * std::pow(M_PI, 1.5); }

// sup over a log grid of zt in [1e-2, 1e2] of the midpoint-rule integral of
// (zt/z)|K(zt - z) - K(zt + z)| over [0, zt + 14]; K decays on unit scale.
template <class F>
double ee1_lhs_bruteforce(const F& K, int nzt = 400, double h = 1e-3) {
  double best = 0.0;
  for (int i = 0; i < nzt; ++i) {
    const double zt = std::pow(10.0, -2.0 + 4.0 * i / (nzt - 1));
    const int n = static_cast<int>((zt + 14.0) / h);
    double s = 0.0;
    for (int j = 0; j < n; ++j) {
      const double z = (j + 0.5) * h;
      s += zt / z * std::abs(K(zt - z) - K(zt + z));
    }
    best = std::max(best, s * h);
  }
  return best;
}

// Midpoint-rule int |K| over [-a, a] and grid sup of z^2 |K'| for unit-scale K.
template <class F, class G>
double ee1_rhs_bruteforce(const F& K, const G& dK, double a = 14.0, double h = 1e-4) {
  double s = 0.0, sup = 0.0;
  const int n = static_cast<int>(2.0 * a / h);
  for (int j = 0; j < n; ++j) {
    const double z = -a + (j + 0.5) * h;
    s += std::abs(K(z)) * h;
    sup = std::max(sup, z * z * std::abs(dK(z)));
  }
  return s + sup;
}

}  // namespace oracle
