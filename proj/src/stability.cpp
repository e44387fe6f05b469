#include <Eigen/Eigenvalues>
#include <cmath>

#include "rbc/boussinesq.hpp"
#include "rbc/chebyshev.hpp"
#include "rbc/errors.hpp"

namespace rbc {

// Linearization about T = 1 - z at wavenumber k, unknowns (theta, w):
//   s theta = (D^2 - k^2) theta + w
//   s (1/Pr) (D^2 - k^2) w = (D^2 - k^2)^2 w - Ra k^2 theta
// theta = w = Dw = 0 at both walls; boundary rows carry zero mass.
double linear_growth_rate(const SimParams& params, double k, int Nz) {
  if (!(k > 0.0)) throw ParameterError("linear_growth_rate: k must be positive");
  if (!(params.Ra > 0.0) || !(params.Pr > 0.0)) throw ParameterError("linear_growth_rate: bad parameters");
  const int N = Nz;
  Eigen::MatrixXd D = cheb::diff_matrix(N);
  Eigen::MatrixXd I = Eigen::MatrixXd::Identity(N, N);
  Eigen::MatrixXd L = D * D - k * k * I;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2 * N, 2 * N);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(2 * N, 2 * N);
  A.topLeftCorner(N, N) = L;
  A.topRightCorner(N, N) = I;
  B.topLeftCorner(N, N) = I;
  A.bottomLeftCorner(N, N) = -params.Ra * k * k * I;
  A.bottomRightCorner(N, N) = L * L;
  if (!std::isinf(params.Pr)) B.bottomRightCorner(N, N) = L / params.Pr;

  auto set_row = [&](int r, const Eigen::RowVectorXd& row, int offset) {
    A.row(r).setZero();
    B.row(r).setZero();
    A.block(r, offset, 1, N) = row;
  };
  set_row(0, I.row(0), 0);
  set_row(N - 1, I.row(N - 1), 0);
  set_row(N, I.row(0), N);
  set_row(N + 1, D.row(0), N);
  set_row(2 * N - 2, D.row(N - 1), N);
  set_row(2 * N - 1, I.row(N - 1), N);

  Eigen::GeneralizedEigenSolver<Eigen::MatrixXd> ges(A, B, false);
  if (ges.info() != Eigen::Success) throw NumericalError("stability", "generalized eigen-solver failed");
  const auto alpha = ges.alphas();
  const auto beta = ges.betas();
  double best = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < alpha.size(); ++i) {
    if (std::abs(beta[i]) <= 1e-12 * std::abs(alpha[i])) continue;  // infinite eigenvalue
    std::complex<double> s = alpha[i] / beta[i];
    if (!std::isfinite(s.real()) || std::abs(s) > 1e10) continue;
    best = std::max(best, s.real());
  }
  if (!std::isfinite(best)) throw NumericalError("stability", "no finite eigenvalues");
  return best;
}

double max_growth_rate(const SimParams& params, double* k_arg, int Nz) {
  // coarse scan then golden-section refinement in k
  double kbest = 1.0, rbest = -1e300;
  for (double k = 1.0; k <= 8.0 + 1e-12; k += 0.25) {
    double r = linear_growth_rate(params, k, Nz);
    if (r > rbest) {
      rbest = r;
      kbest = k;
    }
  }
  double a = std::max(0.25, kbest - 0.25), b = kbest + 0.25;
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double fc = linear_growth_rate(params, c, Nz), fd = linear_growth_rate(params, d, Nz);
  while (b - a > 1e-7) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = linear_growth_rate(params, c, Nz);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = linear_growth_rate(params, d, Nz);
    }
  }
  double k = 0.5 * (a + b);
  double r = linear_growth_rate(params, k, Nz);
  if (rbest > r) {
    r = rbest;
    k = kbest;
  }
  if (k_arg) *k_arg = k;
  return r;
}

CriticalPoint find_critical_rayleigh(double Ra_lo, double Ra_hi, double Pr, int Nz) {
  if (!(Ra_lo > 0.0 && Ra_hi > Ra_lo)) throw ParameterError("find_critical_rayleigh: bad bracket");
  SimParams p;
  p.Pr = Pr;
  CriticalPoint cp;
  p.Ra = Ra_lo;
  cp.rate_lo = max_growth_rate(p, nullptr, Nz);
  p.Ra = Ra_hi;
  cp.rate_hi = max_growth_rate(p, nullptr, Nz);
  if (!(cp.rate_lo < 0.0 && cp.rate_hi > 0.0))
    throw NumericalError("stability", "no sign change of the growth rate inside the bracket");
  double a = Ra_lo, b = Ra_hi;
  while (b - a > 1e-6 * b) {
    p.Ra = 0.5 * (a + b);
    if (max_growth_rate(p, nullptr, Nz) < 0.0)
      a = p.Ra;
    else
      b = p.Ra;
  }
  p.Ra = 0.5 * (a + b);
  cp.Ra_c = p.Ra;
  max_growth_rate(p, &cp.k_c, Nz);
  return cp;
}

}  // namespace rbc
