#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rbc/interp_norm.hpp"
#include "rbc/spectral.hpp"

namespace rbc::stokes {

// Per-mode time series: column n holds time level n (Nt + 1 columns) or, for
// quantities living on steps, the effective level of step n (Nt columns).
using Series = Eigen::MatrixXcd;

enum class TimeScheme { crank_nicolson, bdf2 };
std::string to_string(TimeScheme s);

// Uniform time grid on [0, t0], t0 = Nt dt, with zero initial data.
struct TimeGrid {
  int Nt = 400;
  double dt = 0.01;
  TimeScheme scheme = TimeScheme::bdf2;

  double t0() const { return Nt * dt; }
  double level_time(int n) const { return n * dt; }
  void validate() const;
};

// Step n advances level n to n + 1. With
//   D_t u = a0 u^{n+1} + a1 u^n + a2 u^{n-1},   E u = th u^{n+1} + (1 - th) u^n,
// the discrete heat operator is H u = D_t u - Delta E u and forcings enter as E f.
// BDF2 takes an implicit Euler first step.
struct StepCoeffs {
  double a0, a1, a2, th;
};
StepCoeffs step_coeffs(const TimeGrid& t, int n);

// Chebyshev collocation on [0, H].
struct VGrid {
  double H = 1.0;
  int N = 0;
  Eigen::VectorXd z;
  Eigen::MatrixXd D, D2;
  Eigen::VectorXd w;  // Clenshaw-Curtis weights
};
VGrid make_vgrid(int N, double H);

Series time_derivative(const Series& levels, const TimeGrid& t);  // D_t, one column per step
Series effective(const Series& levels, const TimeGrid& t);        // E, one column per step
// H u = D_t u - (D^2 - k2) E u for a mode with |k'|^2 = k2.
Series heat_operator(const Series& levels, double k2, const VGrid& g, const TimeGrid& t);

// (d/dz - kappa) u = f column by column, u(H) = 0 (the decaying direction of the half line).
Series solve_fractional_backward(const Series& f, double kappa, const VGrid& g);
// (d/dz + kappa) u = v column by column, u(0) = g0 (one value per column).
Series solve_fractional_forward(const Series& v, const Eigen::VectorXcd& g0, double kappa, const VGrid& g);
// H u = rhs (rhs given per step), u = 0 at z = 0, H and at t = 0. Returns levels.
Series heat_solve_steps(const Series& rhs, double k2, const VGrid& g, const TimeGrid& t);
// (d_t - Delta) u = f with Dirichlet walls, f given on levels and entering as E f.
Series solve_heat_dirichlet(const Series& f, double k2, const VGrid& g, const TimeGrid& t);

// Horizontal projector (1 + grad'(-Delta')^{-1} div') for the wavevector kh:
// removes the component of each column along kh.
std::vector<Series> project_horizontal(const std::vector<Series>& f, const std::vector<double>& kh);
std::vector<Series> solve_heat_horizontal(const std::vector<Series>& f, const std::vector<double>& kh,
                                          const VGrid& g, const TimeGrid& t);

// Data of one horizontal wavevector kh (d - 1 components). Forcing and
// divergence data are given on time levels; an empty rho means zero.
struct ModeData {
  std::vector<double> kh;
  std::vector<Series> fh;
  Series fz;
  Series rho;

  double kappa() const;
};

struct Residuals {
  double momentum = 0.0;    // max over interior nodes and steps, relative to the data
  double divergence = 0.0;  // max |div u - rho| relative to max(|rho|, |d_z u^z|)
  double boundary = 0.0;    // max |u| on the walls relative to max |u|
  std::string stage;        // solver whose output exceeds 1e-6 (momentum, divergence) or 1e-8 (walls); diagnostic
};

struct ModeSolution {
  std::vector<Series> uh;  // levels
  Series uz;               // levels
  Series p;                // steps (effective level), defined up to nothing: no constant mode for k' != 0
  // intermediates of the decomposition (empty for monolithic solves)
  Series phi;              // steps
  Series vz;               // levels
  std::vector<Series> vh;  // levels
  Residuals residuals;
};

// Half space truncated at H = g.H: the fourfold composition
// backward fractional solve -> vertical heat solve -> forward fractional solve ->
// horizontal heat solves -> horizontal velocity assembly,
// pressure from the horizontal momentum balance. Requires rho(0) = 0 (the
// no-slip compatibility condition) and k' != 0.
ModeSolution stokes_halfspace_mode(const ModeData& m, const VGrid& g, const TimeGrid& t);
// Independent monolithic solve of the same truncated problem: fourth-order
// equation for u^z per step with closure rows at the top matching the truncation.
ModeSolution stokes_direct_mode(const ModeData& m, const VGrid& g, const TimeGrid& t);
// Strip 0 < z < 1 (g.H = 1) with no-slip at both walls and rho = 0, monolithic.
ModeSolution stokes_strip_mode(const ModeData& m, const VGrid& g, const TimeGrid& t);

// Discrete residuals of H u + grad p - E f, div u - rho and wall values.
Residuals stokes_residuals(const ModeData& m, const ModeSolution& s, const VGrid& g, const TimeGrid& t,
                           bool top_wall);

// Relative L2 distance over (z, t) between two velocity fields.
double relative_l2(const ModeSolution& a, const ModeSolution& b, const VGrid& g);

// Two-dimensional multi-mode problems (kh = 2 pi n / L, n > 0).
struct HalfSpaceProblem {
  double L = 2.0;
  double R = 1.0 / 16.0;
  double z_max = 0.0;
  int Nz = 65;
  TimeGrid time;
  std::map<int, ModeData> modes;
};

struct StripProblem {
  double L = 2.0;
  double R = 1.0 / 16.0;
  double R0 = 1.0 / 8.0;
  bool enforce_band = true;  // the negative control switches this off
  int Nz = 65;
  TimeGrid time;
  std::map<int, ModeData> modes;
};

struct StokesSolution {
  VGrid grid;
  TimeGrid time;
  double L = 2.0;
  std::map<int, ModeSolution> modes;
  Residuals worst;
};

double band_wavenumber(int n, double L);
bool in_band(double k, double R);
// z_max = 8 / min |k'| over the band = 8 R.
double default_z_max(double R);

StokesSolution stokes_halfspace(const HalfSpaceProblem& p);
StokesSolution stokes_direct(const HalfSpaceProblem& p);
StokesSolution stokes_strip(const StripProblem& p);

// Cutoff eta: 1 on [0, 1/2], 0 on [9/10, 1], smooth in between.
double eta(double z, int derivative = 0);

enum class Side { upper, lower };

// Cut a strip solution down to one half space: (eta u, eta p) solves the
// half-space problem with f~ = eta f - 2 eta' d_z u - eta'' u + eta' p e_z and
// rho~ = eta' u^z. The lower side is reflected (z -> 1 - z, u^z -> -u^z) so the
// result is always posed on the upper half space. Throws LocalizationError when
// the substitution residual exceeds tol.
struct Localization {
  HalfSpaceProblem problem;
  double residual = 0.0;  // substitution residual on the strip grid, relative
};
Localization localize_to_halfspace(const StripProblem& strip, const StokesSolution& sol, Side side,
                                   double tol = 1e-5);

struct MaxRegReport {
  double time_derivative_horizontal = 0.0;  // ||(d_t - d_z^2) u'||
  double hessian_horizontal = 0.0;          // ||grad' grad u'||
  double time_derivative_vertical = 0.0;    // ||d_t u^z||
  double hessian_vertical = 0.0;            // ||grad^2 u^z||
  double pressure_gradient = 0.0;           // ||grad p||
  double forcing = 0.0;                     // ||f||
  double rho_terms = 0.0;                   // half space only
  double lhs = 0.0;
  double ratio = 0.0;
  WeightKind weight = WeightKind::strip;
  double R = 0.0;
  int Nz = 0, Nt = 0;
  double z_max = 0.0;
};

enum class Domain { strip, half };

// Every norm is the interpolation norm of the profile <|.|>(z), averaged over x and over
// the steps of [0, t0]. Zero forcing reports ratio 0.
MaxRegReport maxreg_report(const StokesSolution& sol, const std::map<int, ModeData>& data, double R, Domain domain,
                           int x_oversample = 8);

std::string to_json(const MaxRegReport& r);

// Random smooth forcings vanishing at t = 0, with a small number of active modes.
// The half-space profiles decay on the scale R and do not depend on z_max
// (0 selects the default), so refinement studies can vary it.
StripProblem random_strip_problem(std::uint64_t seed, double R, int Nz, const TimeGrid& t,
                                  const std::vector<int>& modes, double L = 2.0);
HalfSpaceProblem random_halfspace_problem(std::uint64_t seed, double R, int Nz, const TimeGrid& t,
                                          const std::vector<int>& modes, bool with_rho, double L = 2.0,
                                          double z_max = 0.0);
// Modes n > 0 with 1 <= R |2 pi n / L| <= 4.
std::vector<int> band_modes(double R, double L);

}  // namespace rbc::stokes
