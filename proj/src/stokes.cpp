#include "rbc/stokes.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "rbc/chebyshev.hpp"
#include "rbc/errors.hpp"

namespace rbc::stokes {

namespace {

const cplx I1(0.0, 1.0);

void require_levels(const Series& s, const VGrid& g, const TimeGrid& t, const char* what) {
  if (s.rows() != g.N || s.cols() != t.Nt + 1)
    throw ConfigError(std::string(what) + ": expected " + std::to_string(g.N) + " x " + std::to_string(t.Nt + 1) +
                      " time levels");
}

void require_steps(const Series& s, const VGrid& g, const TimeGrid& t, const char* what) {
  if (s.rows() != g.N || s.cols() != t.Nt)
    throw ConfigError(std::string(what) + ": expected " + std::to_string(g.N) + " x " + std::to_string(t.Nt) +
                      " step values");
}

double max_abs(const Series& s) { return s.size() ? s.cwiseAbs().maxCoeff() : 0.0; }

double max_abs_rows(const Series& s, Eigen::Index r0, Eigen::Index r1) {
  if (s.size() == 0 || r1 <= r0) return 0.0;
  return s.middleRows(r0, r1 - r0).cwiseAbs().maxCoeff();
}

double rel(double num, double scale) { return scale > 0.0 ? num / scale : num; }

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

// Implicit step matrices and their explicit inverses, one per distinct (a0, th).
struct StepInverses {
  struct Entry {
    StepCoeffs c;
    Eigen::MatrixXd M, Minv;
  };
  std::vector<Entry> cache;

  template <class Build>
  const Entry& get(const StepCoeffs& c, Build build) {
    for (auto& e : cache)
      if (e.c.a0 == c.a0 && e.c.th == c.th) return e;
    Eigen::MatrixXd M = build(c);
    Eigen::MatrixXd Minv = M.partialPivLu().inverse();
    cache.push_back({c, std::move(M), std::move(Minv)});
    return cache.back();
  }
};

Series zeros_levels(const VGrid& g, const TimeGrid& t) { return Series::Zero(g.N, t.Nt + 1); }

Series rho_or_zero(const ModeData& m, const VGrid& g, const TimeGrid& t) {
  if (m.rho.size() == 0) return zeros_levels(g, t);
  require_levels(m.rho, g, t, "rho");
  return m.rho;
}

void validate_mode(const ModeData& m, const VGrid& g, const TimeGrid& t) {
  t.validate();
  if (m.kh.empty() || m.fh.size() != m.kh.size())
    throw ConfigError("mode data: need one horizontal forcing component per wavevector component");
  if (!(m.kappa() > 0.0)) throw SingularModeError("the k' = 0 mode is outside every band");
  for (const auto& f : m.fh) require_levels(f, g, t, "horizontal forcing");
  require_levels(m.fz, g, t, "vertical forcing");
}

// Levels whose effective values are the given step values (inverse of E with u^0 = 0).
Series levels_from_effective(const Series& steps, const TimeGrid& t) {
  Series lv = Series::Zero(steps.rows(), steps.cols() + 1);
  for (int n = 0; n < t.Nt; ++n) {
    const StepCoeffs c = step_coeffs(t, n);
    lv.col(n + 1) = (steps.col(n) - (1.0 - c.th) * lv.col(n)) / c.th;
  }
  return lv;
}

// Assemble u' from the solenoidal part and u^z, and the pressure from the
// horizontal momentum balance.
void assemble_horizontal(ModeSolution& s, const ModeData& m, const Series& rho, const VGrid& g, const TimeGrid& t) {
  const double k2 = m.kappa() * m.kappa();
  const Series grad_part = (rho - g.D * s.uz) / k2;
  s.uh.resize(m.kh.size());
  Series kf = Series::Zero(g.N, t.Nt);
  for (std::size_t i = 0; i < m.kh.size(); ++i) {
    s.uh[i] = s.vh[i] - I1 * m.kh[i] * grad_part;
    kf += I1 * m.kh[i] * (effective(m.fh[i], t) - heat_operator(s.uh[i], k2, g, t));
  }
  s.p = -kf / k2;
}

// The composite residuals apply up to three collocation derivatives to the
// solution, so on data the grid barely resolves they measure the spectral tail
// rather than the solve. They are reported and flagged; the hard checks are the
// per-stage residuals.
void flag_residuals(Residuals& r, const std::string& stage) {
  if (!std::isfinite(r.momentum) || !std::isfinite(r.divergence) || !std::isfinite(r.boundary))
    throw NumericalError(stage, "non-finite residual");
  if (r.momentum > 1e-6 || r.divergence > 1e-6 || r.boundary > 1e-8) r.stage = stage;
}

}  // namespace

std::string to_string(TimeScheme s) { return s == TimeScheme::bdf2 ? "bdf2" : "crank-nicolson"; }

void TimeGrid::validate() const {
  if (Nt < 1) throw StepSizeError("time grid needs at least one step");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw StepSizeError("time step must be positive and finite");
}

StepCoeffs step_coeffs(const TimeGrid& t, int n) {
  const double h = t.dt;
  if (t.scheme == TimeScheme::crank_nicolson) return {1.0 / h, -1.0 / h, 0.0, 0.5};
  if (n == 0) return {1.0 / h, -1.0 / h, 0.0, 1.0};
  return {1.5 / h, -2.0 / h, 0.5 / h, 1.0};
}

VGrid make_vgrid(int N, double H) {
  if (N < 5) throw ParameterError("vertical grid needs at least 5 nodes");
  if (!(H > 0.0) || !std::isfinite(H)) throw ParameterError("vertical extent must be positive");
  VGrid g;
  g.H = H;
  g.N = N;
  g.z = cheb::nodes(N, 0.0, H);
  g.D = cheb::diff_matrix(N, 0.0, H);
  g.D2 = g.D * g.D;
  g.w = cheb::cc_weights(N, 0.0, H);
  return g;
}

Series time_derivative(const Series& u, const TimeGrid& t) {
  if (u.cols() != t.Nt + 1) throw ConfigError("time_derivative: expected Nt + 1 levels");
  Series out(u.rows(), t.Nt);
  for (int n = 0; n < t.Nt; ++n) {
    const StepCoeffs c = step_coeffs(t, n);
    out.col(n) = c.a0 * u.col(n + 1) + c.a1 * u.col(n);
    if (c.a2 != 0.0) out.col(n) += c.a2 * u.col(n - 1);
  }
  return out;
}

Series effective(const Series& u, const TimeGrid& t) {
  if (u.cols() != t.Nt + 1) throw ConfigError("effective: expected Nt + 1 levels");
  Series out(u.rows(), t.Nt);
  for (int n = 0; n < t.Nt; ++n) {
    const StepCoeffs c = step_coeffs(t, n);
    out.col(n) = c.th * u.col(n + 1) + (1.0 - c.th) * u.col(n);
  }
  return out;
}

Series heat_operator(const Series& u, double k2, const VGrid& g, const TimeGrid& t) {
  const Series e = effective(u, t);
  return time_derivative(u, t) - (g.D2 * e - k2 * e);
}

Series solve_fractional_backward(const Series& f, double kappa, const VGrid& g) {
  if (!(kappa > 0.0)) throw SingularModeError("fractional solve: |k'| = 0 has no decaying solution");
  if (f.rows() != g.N) throw ConfigError("fractional solve: profile length differs from the grid");
  // u(H) = 0 is eliminated; the remaining rows are collocated at z < H
  const int n = g.N - 1;
  const Eigen::MatrixXd A = g.D.topLeftCorner(n, n) - kappa * Eigen::MatrixXd::Identity(n, n);
  Series u = Series::Zero(g.N, f.cols());
  u.topRows(n) = Eigen::MatrixXd(A.partialPivLu().inverse()) * f.topRows(n);
  return u;
}

Series solve_fractional_forward(const Series& v, const Eigen::VectorXcd& g0, double kappa, const VGrid& g) {
  if (!(kappa > 0.0)) throw SingularModeError("fractional solve: |k'| = 0 is excluded by the band");
  if (v.rows() != g.N) throw ConfigError("fractional solve: profile length differs from the grid");
  if (g0.size() != v.cols()) throw ConfigError("fractional solve: one boundary value per column required");
  // u(0) = g0 is eliminated so the boundary value is exact
  const int n = g.N - 1;
  const Eigen::MatrixXd A = g.D.bottomRightCorner(n, n) + kappa * Eigen::MatrixXd::Identity(n, n);
  Series u(g.N, v.cols());
  u.row(0) = g0.transpose();
  u.bottomRows(n) = Eigen::MatrixXd(A.partialPivLu().inverse()) *
                    (v.bottomRows(n) - g.D.col(0).tail(n) * g0.transpose());
  return u;
}

Series heat_solve_steps(const Series& rhs, double k2, const VGrid& g, const TimeGrid& t) {
  t.validate();
  require_steps(rhs, g, t, "heat solve");
  const int N = g.N;
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(N, N);
  const Eigen::MatrixXd lap = g.D2 - k2 * I;
  StepInverses inv;
  Series u = zeros_levels(g, t);
  Eigen::VectorXcd r(N);
  for (int n = 0; n < t.Nt; ++n) {
    const StepCoeffs c = step_coeffs(t, n);
    const auto& step = inv.get(c, [&](const StepCoeffs& cc) {
      Eigen::MatrixXd M = cc.a0 * I - cc.th * lap;
      M.row(0).setZero();
      M(0, 0) = 1.0;
      M.row(N - 1).setZero();
      M(N - 1, N - 1) = 1.0;
      return M;
    });
    r = rhs.col(n) - c.a1 * u.col(n);
    if (c.a2 != 0.0) r -= c.a2 * u.col(n - 1);
    if (c.th != 1.0) r += (1.0 - c.th) * (lap * u.col(n));
    r[0] = 0.0;
    r[N - 1] = 0.0;
    u.col(n + 1) = step.Minv * r;
  }
  return u;
}

Series solve_heat_dirichlet(const Series& f, double k2, const VGrid& g, const TimeGrid& t) {
  t.validate();
  require_levels(f, g, t, "heat forcing");
  // Crank-Nicolson keeps modes with dt |k'|^2 >> 1 oscillating instead of damped.
  if (t.scheme == TimeScheme::crank_nicolson && t.dt * k2 > 64.0)
    throw StepSizeError("Crank-Nicolson step too large for |k'|^2 = " + std::to_string(k2) +
                        " (dt |k'|^2 must stay below 64)");
  return heat_solve_steps(effective(f, t), k2, g, t);
}

std::vector<Series> project_horizontal(const std::vector<Series>& f, const std::vector<double>& kh) {
  if (f.size() != kh.size()) throw ConfigError("projector: component count differs from the wavevector");
  double k2 = 0.0;
  for (double k : kh) k2 += k * k;
  if (!(k2 > 0.0)) throw SingularModeError("projector undefined at k' = 0");
  Series along = Series::Zero(f[0].rows(), f[0].cols());
  for (std::size_t i = 0; i < f.size(); ++i) along += kh[i] * f[i];
  std::vector<Series> out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = f[i] - (kh[i] / k2) * along;
  return out;
}

std::vector<Series> solve_heat_horizontal(const std::vector<Series>& f, const std::vector<double>& kh,
                                          const VGrid& g, const TimeGrid& t) {
  double k2 = 0.0;
  for (double k : kh) k2 += k * k;
  std::vector<Series> out;
  for (const Series& c : project_horizontal(f, kh)) out.push_back(solve_heat_dirichlet(c, k2, g, t));
  return out;
}

double ModeData::kappa() const {
  double s = 0.0;
  for (double k : kh) s += k * k;
  return std::sqrt(s);
}

Residuals stokes_residuals(const ModeData& m, const ModeSolution& s, const VGrid& g, const TimeGrid& t,
                           bool top_wall) {
  const int N = g.N;
  const double k2 = m.kappa() * m.kappa();
  const Series rho = rho_or_zero(m, g, t);
  Residuals r;

  double data = max_abs(effective(m.fz, t));
  for (const auto& f : m.fh) data = std::max(data, max_abs(effective(f, t)));
  data = std::max(data, max_abs(heat_operator(rho, k2, g, t)));
  double mom = max_abs_rows(heat_operator(s.uz, k2, g, t) + g.D * s.p - effective(m.fz, t), 1, N - 1);
  for (std::size_t i = 0; i < m.kh.size(); ++i)
    mom = std::max(mom, max_abs_rows(heat_operator(s.uh[i], k2, g, t) + I1 * m.kh[i] * s.p - effective(m.fh[i], t),
                                     1, N - 1));
  r.momentum = rel(mom, data);

  Series div = g.D * s.uz - rho;
  for (std::size_t i = 0; i < m.kh.size(); ++i) div += I1 * m.kh[i] * s.uh[i];
  r.divergence = rel(max_abs(div), std::max(max_abs(rho), max_abs(g.D * s.uz)));

  double umax = max_abs(s.uz), wall = std::max(s.uz.row(0).cwiseAbs().maxCoeff(),
                                                top_wall ? s.uz.row(N - 1).cwiseAbs().maxCoeff() : 0.0);
  for (const auto& u : s.uh) {
    umax = std::max(umax, max_abs(u));
    wall = std::max(wall, u.row(0).cwiseAbs().maxCoeff());
    if (top_wall) wall = std::max(wall, u.row(N - 1).cwiseAbs().maxCoeff());
  }
  r.boundary = rel(wall, umax);
  return r;
}

ModeSolution stokes_halfspace_mode(const ModeData& m, const VGrid& g, const TimeGrid& t) {
  validate_mode(m, g, t);
  const int N = g.N;
  const double kap = m.kappa(), k2 = kap * kap;
  const Series rho = rho_or_zero(m, g, t);
  if (max_abs(rho.row(0)) > 1e-12 * std::max(1.0, max_abs(rho)))
    throw ParameterError("half-space data: rho must vanish at the wall for a no-slip solution");

  std::vector<Series> fh(m.kh.size());
  Series kf = Series::Zero(N, t.Nt);  // i k'.f'
  for (std::size_t i = 0; i < m.kh.size(); ++i) {
    fh[i] = effective(m.fh[i], t);
    kf += I1 * m.kh[i] * fh[i];
  }
  const Series fz = effective(m.fz, t);
  const Series Hrho = heat_operator(rho, k2, g, t);
  const double scale = std::max({max_abs(fz), max_abs(kf) / kap, max_abs(Hrho) / kap, 1e-300});

  ModeSolution s;
  // backward fractional step: (d_z - |k'|) phi = div f - H rho, phi -> 0 at the top
  const Series back_rhs = kf + g.D * fz - Hrho;
  s.phi = solve_fractional_backward(back_rhs, kap, g);
  const double r1 = max_abs_rows(g.D * s.phi - kap * s.phi - back_rhs, 0, N - 1);
  if (rel(r1, kap * scale) > 1e-8) throw NumericalError("fractional-backward", "ODE residual " + sci(r1));

  // vertical heat step: H v^z = |k'| (f^z - phi) - i k'.f' + H rho, v^z = 0 on the boundary
  const Series heat_rhs = kap * (fz - s.phi) - kf + Hrho;
  s.vz = heat_solve_steps(heat_rhs, k2, g, t);
  const double r2 = max_abs_rows(heat_operator(s.vz, k2, g, t) - heat_rhs, 1, N - 1);
  if (rel(r2, kap * scale) > 1e-8) throw NumericalError("heat-vertical", "heat residual " + sci(r2));

  // forward fractional step: (d_z + |k'|) u^z = v^z, u^z(0) = 0
  s.uz = solve_fractional_forward(s.vz, Eigen::VectorXcd::Zero(t.Nt + 1), kap, g);
  const double r3 = max_abs_rows(g.D * s.uz + kap * s.uz - s.vz, 1, N);
  if (rel(r3, std::max(max_abs(s.vz), 1e-300)) > 1e-8)
    throw NumericalError("fractional-forward", "ODE residual " + sci(r3));

  // horizontal heat step with the projected forcing, then the horizontal velocity and pressure
  s.vh.clear();
  for (const Series& c : project_horizontal(fh, m.kh)) s.vh.push_back(heat_solve_steps(c, k2, g, t));
  assemble_horizontal(s, m, rho, g, t);

  s.residuals = stokes_residuals(m, s, g, t, false);
  flag_residuals(s.residuals, "assembly");
  return s;
}

namespace {

ModeSolution monolithic(const ModeData& m, const VGrid& g, const TimeGrid& t, bool strip, const char* stage) {
  validate_mode(m, g, t);
  const int N = g.N;
  const double kap = m.kappa(), k2 = kap * kap;
  const Series rho = rho_or_zero(m, g, t);
  if (strip && max_abs(rho) > 0.0) throw ParameterError("strip problem: divergence data must vanish");
  if (max_abs(rho.row(0)) > 1e-12 * std::max(1.0, max_abs(rho)))
    throw ParameterError("half-space data: rho must vanish at the wall for a no-slip solution");

  const Eigen::MatrixXd Id = Eigen::MatrixXd::Identity(N, N);
  const Eigen::MatrixXd B = k2 * Id - g.D2;  // -Delta for this mode
  const Eigen::MatrixXd Dk = g.D + kap * Id;

  std::vector<Series> fh(m.kh.size());
  Series kf = Series::Zero(N, t.Nt);
  for (std::size_t i = 0; i < m.kh.size(); ++i) {
    fh[i] = effective(m.fh[i], t);
    kf += I1 * m.kh[i] * fh[i];
  }
  const Series fz = effective(m.fz, t);
  const Series Hrho = heat_operator(rho, k2, g, t);
  const Series HDrho = heat_operator(g.D * rho, k2, g, t);
  // H (k2 - D^2) u^z = k2 f^z + i k'.d_z f' - H d_z rho
  const Series interior = k2 * fz + g.D * kf - HDrho;
  const Series top_data = kap * fz - kf + Hrho;

  // Coupled second-order form with w = (k2 - D^2) u^z: the fourth-order
  // collocation matrix is too ill-conditioned on thin layers. Unknowns [u^z; w];
  // the first block row holds the definition of w, the second the heat equation for w.
  StepInverses inv;
  Series uz = zeros_levels(g, t), w = zeros_levels(g, t);
  Eigen::VectorXcd r(2 * N);
  for (int n = 0; n < t.Nt; ++n) {
    const StepCoeffs c = step_coeffs(t, n);
    const auto& step = inv.get(c, [&](const StepCoeffs& cc) {
      Eigen::MatrixXd M = Eigen::MatrixXd::Zero(2 * N, 2 * N);
      M.topLeftCorner(N, N) = B;
      M.topRightCorner(N, N) = -Id;
      M.bottomRightCorner(N, N) = cc.a0 * Id + cc.th * B;
      M.row(0).setZero();
      M(0, 0) = 1.0;
      M.row(N).setZero();
      M.row(N).head(N) = g.D.row(0);
      M.row(N - 1).setZero();
      M.row(2 * N - 1).setZero();
      if (strip) {
        M(N - 1, N - 1) = 1.0;
        M.row(2 * N - 1).head(N) = g.D.row(N - 1);
      } else {
        M.row(N - 1).head(N) = Dk.row(N - 1);
        M.row(2 * N - 1).tail(N) = cc.th * Dk.row(N - 1);
      }
      return M;
    });
    r.head(N).setZero();
    auto rw = r.tail(N);
    rw = interior.col(n) - c.a1 * w.col(n);
    if (c.a2 != 0.0) rw -= c.a2 * w.col(n - 1);
    if (c.th != 1.0) rw -= (1.0 - c.th) * (B * w.col(n));
    rw[0] = rho(0, n + 1);
    if (strip) {
      rw[N - 1] = 0.0;
    } else {
      rw[N - 1] = top_data(N - 1, n);
      if (c.th != 1.0) rw[N - 1] -= (1.0 - c.th) * Dk.row(N - 1).dot(w.col(n));
    }
    Eigen::VectorXcd x = step.Minv * r;
    x += step.Minv * (r - step.M * x);  // one refinement step; the wall rows need it
    uz.col(n + 1) = x.head(N);
    w.col(n + 1) = x.tail(N);
  }
  if (!uz.allFinite() || !w.allFinite()) throw NumericalError(stage, "non-finite solution");
  const double wdef = max_abs_rows(B * uz - w, 1, N - 1);
  if (rel(wdef, max_abs(w)) > 1e-8) throw NumericalError(stage, "coupled system residual " + sci(wdef));

  ModeSolution s;
  s.uz = std::move(uz);
  for (const Series& cpt : project_horizontal(fh, m.kh)) s.vh.push_back(heat_solve_steps(cpt, k2, g, t));
  assemble_horizontal(s, m, rho, g, t);
  s.vh.clear();
  s.residuals = stokes_residuals(m, s, g, t, strip);
  flag_residuals(s.residuals, stage);
  return s;
}

}  // namespace

ModeSolution stokes_direct_mode(const ModeData& m, const VGrid& g, const TimeGrid& t) {
  return monolithic(m, g, t, false, "direct");
}

ModeSolution stokes_strip_mode(const ModeData& m, const VGrid& g, const TimeGrid& t) {
  return monolithic(m, g, t, true, "strip");
}

double relative_l2(const ModeSolution& a, const ModeSolution& b, const VGrid& g) {
  auto sq = [&](const Series& s) { return (g.w.transpose() * s.cwiseAbs2()).sum(); };
  double num = sq(a.uz - b.uz), den = sq(b.uz);
  for (std::size_t i = 0; i < a.uh.size() && i < b.uh.size(); ++i) {
    num += sq(a.uh[i] - b.uh[i]);
    den += sq(b.uh[i]);
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}


double band_wavenumber(int n, double L) { return 2.0 * M_PI * n / L; }

bool in_band(double k, double R) {
  const double rk = R * std::abs(k);
  return rk >= 1.0 - 1e-12 && rk <= 4.0 + 1e-12;
}

double default_z_max(double R) { return 8.0 * R; }

namespace {

void merge(Residuals& w, const Residuals& r) {
  w.momentum = std::max(w.momentum, r.momentum);
  w.divergence = std::max(w.divergence, r.divergence);
  w.boundary = std::max(w.boundary, r.boundary);
}

ModeData mode_with_wavevector(int n, const ModeData& m, double L, double R, bool enforce_band) {
  if (n == 0) throw SingularModeError("mode n = 0 (k' = 0) has no solution in the band setting");
  if (n < 0) throw ParameterError("give modes with n > 0; negative modes are complex conjugates");
  const double k = band_wavenumber(n, L);
  if (enforce_band && !in_band(k, R))
    throw ParameterError("mode n = " + std::to_string(n) + " violates the band 1 <= R|k'| <= 4 (R|k'| = " +
                         std::to_string(R * k) + ")");
  ModeData out = m;
  if (out.kh.empty()) out.kh = {k};
  if (out.kh.size() != 1 || std::abs(out.kh[0] - k) > 1e-12 * k)
    throw ConfigError("mode n = " + std::to_string(n) + ": wavevector differs from 2 pi n / L");
  return out;
}

void require_zero_initial_data(const ModeData& m) {
  auto check = [](const Series& s, const char* what) {
    if (s.size() == 0) return;
    if (s.col(0).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, max_abs(s)))
      throw ParameterError(std::string(what) + " must vanish at t = 0");
  };
  for (const auto& f : m.fh) check(f, "horizontal forcing");
  check(m.fz, "vertical forcing");
  check(m.rho, "rho");
}

template <class Solve>
StokesSolution solve_all(const std::map<int, ModeData>& modes, double L, double R, bool enforce_band,
                         const VGrid& g, const TimeGrid& t, Solve solve) {
  t.validate();
  if (!(L > 0.0)) throw ParameterError("period length must be positive");
  if (!(R > 0.0)) throw ParameterError("band scale R must be positive");
  if (modes.empty()) throw ConfigError("no modes given");
  StokesSolution sol;
  sol.grid = g;
  sol.time = t;
  sol.L = L;
  for (const auto& [n, m] : modes) {
    const ModeData md = mode_with_wavevector(n, m, L, R, enforce_band);
    require_zero_initial_data(md);
    ModeSolution s = solve(md, g, t);
    merge(sol.worst, s.residuals);
    sol.modes.emplace(n, std::move(s));
  }
  return sol;
}

VGrid halfspace_grid(const HalfSpaceProblem& p) {
  return make_vgrid(p.Nz, p.z_max > 0.0 ? p.z_max : default_z_max(p.R));
}

}  // namespace

StokesSolution stokes_halfspace(const HalfSpaceProblem& p) {
  return solve_all(p.modes, p.L, p.R, true, halfspace_grid(p), p.time, stokes_halfspace_mode);
}

StokesSolution stokes_direct(const HalfSpaceProblem& p) {
  return solve_all(p.modes, p.L, p.R, true, halfspace_grid(p), p.time, stokes_direct_mode);
}

StokesSolution stokes_strip(const StripProblem& p) {
  if (p.enforce_band && p.R > p.R0)
    throw ParameterError("band scale R = " + std::to_string(p.R) + " exceeds R0 = " + std::to_string(p.R0));
  return solve_all(p.modes, p.L, p.R, p.enforce_band, make_vgrid(p.Nz, 1.0), p.time, stokes_strip_mode);
}

double eta(double z, int derivative) {
  constexpr double a = 0.5, w = 0.4;
  const double t = (z - a) / w;
  // exp(-1/t) underflows long before these cut points
  if (t <= 1e-3) return derivative == 0 ? 1.0 : 0.0;
  if (t >= 1.0 - 1e-3) return 0.0;
  const double q = 1.0 / t - 1.0 / (1.0 - t);
  const double s = 1.0 / (1.0 + std::exp(q));  // rises from 0 to 1
  if (derivative == 0) return 1.0 - s;
  const double q1 = -1.0 / (t * t) - 1.0 / ((1.0 - t) * (1.0 - t));
  const double h1 = -s * (1.0 - s) * q1;
  if (derivative == 1) return -h1 / w;
  if (derivative == 2) {
    const double q2 = 2.0 / (t * t * t) - 2.0 / std::pow(1.0 - t, 3);
    const double h2 = -(1.0 - 2.0 * s) * h1 * q1 - s * (1.0 - s) * q2;
    return -h2 / (w * w);
  }
  throw ParameterError("eta: derivative order must be 0, 1 or 2");
}

Localization localize_to_halfspace(const StripProblem& strip, const StokesSolution& sol, Side side, double tol) {
  const VGrid& g = sol.grid;
  const TimeGrid& t = sol.time;
  if (std::abs(g.H - 1.0) > 1e-12) throw ConfigError("localization expects a strip solution on [0, 1]");
  const int N = g.N;

  Localization out;
  HalfSpaceProblem& hp = out.problem;
  hp.L = strip.L;
  hp.R = strip.R;
  hp.z_max = std::max(default_z_max(strip.R), 1.0);
  hp.Nz = strip.Nz;
  hp.time = t;
  const VGrid hg = make_vgrid(hp.Nz, hp.z_max);

  Eigen::VectorXd e0(N), e1(N), e2(N), h0(hg.N), h1(hg.N), h2(hg.N);
  for (int j = 0; j < N; ++j) {
    e0[j] = eta(g.z[j], 0);
    e1[j] = eta(g.z[j], 1);
    e2[j] = eta(g.z[j], 2);
  }
  for (int j = 0; j < hg.N; ++j) {
    h0[j] = eta(hg.z[j], 0);
    h1[j] = eta(hg.z[j], 1);
    h2[j] = eta(hg.z[j], 2);
  }
  // strip values at the half-space nodes; beyond z = 1 the cut fields vanish
  Eigen::MatrixXd P = cheb::interp_matrix(N, 0.0, 1.0, hg.z.cwiseMin(1.0));
  for (int j = 0; j < hg.N; ++j)
    if (hg.z[j] > 1.0) P.row(j).setZero();

  // lower side: reflect so that the cut-off wall sits at z = 0
  auto refl = [&](const Series& s, double sign) -> Series {
    if (side == Side::upper) return s;
    return sign * s.colwise().reverse();
  };

  for (const auto& [n, ms] : sol.modes) {
    const ModeData& md = strip.modes.at(n);
    const double k = band_wavenumber(n, strip.L), k2 = k * k;
    const std::size_t dh = ms.uh.size();
    std::vector<Series> uh(dh), Euh(dh), fh(dh);
    for (std::size_t i = 0; i < dh; ++i) {
      uh[i] = refl(ms.uh[i], 1.0);
      Euh[i] = effective(uh[i], t);
      fh[i] = effective(refl(md.fh[i], 1.0), t);
    }
    const Series uz = refl(ms.uz, -1.0), Euz = effective(uz, t);
    const Series p = refl(ms.p, 1.0), fz = effective(refl(md.fz, -1.0), t);

    // Substitution check on the strip grid. u and p are polynomials on this grid
    // and eta is known in closed form, so the product rule gives the exact
    // derivatives of eta u at the nodes; collocating eta u directly would
    // measure how well the grid resolves the cutoff instead.
    auto cut_heat = [&](const Series& lv, const Series& E) -> Series {
      return e0.asDiagonal() * heat_operator(lv, k2, g, t) - 2.0 * e1.asDiagonal() * (g.D * E) -
             e2.asDiagonal() * E;
    };
    double scale = max_abs(fz), res = 0.0;
    // d_z(eta u^z) - rho~
    Series div = e1.asDiagonal() * Euz + e0.asDiagonal() * (g.D * Euz) - e1.asDiagonal() * Euz;
    for (std::size_t i = 0; i < dh; ++i) {
      const Series ft = e0.asDiagonal() * fh[i] - 2.0 * e1.asDiagonal() * (g.D * Euh[i]) - e2.asDiagonal() * Euh[i];
      scale = std::max(scale, max_abs(fh[i]));
      const Series r = cut_heat(uh[i], Euh[i]) + I1 * k * (e0.asDiagonal() * p) - ft;
      res = std::max(res, max_abs_rows(r, 1, N - 1));
      div += I1 * k * (e0.asDiagonal() * Euh[i]);
    }
    const Series ftz = e0.asDiagonal() * fz - 2.0 * e1.asDiagonal() * (g.D * Euz) - e2.asDiagonal() * Euz +
                       e1.asDiagonal() * p;
    const Series rz = cut_heat(uz, Euz) + e1.asDiagonal() * p + e0.asDiagonal() * (g.D * p) - ftz;
    res = std::max(res, max_abs_rows(rz, 1, N - 1));
    const double rel_res = std::max(rel(res, scale), rel(max_abs(div), std::max(max_abs(g.D * Euz), 1e-300)));
    out.residual = std::max(out.residual, rel_res);
    if (rel_res > tol)
      throw LocalizationError("mode n = " + std::to_string(n) + ": substituted residual " + sci(rel_res) +
                              " exceeds " + std::to_string(tol));

    // the same data evaluated on the half-space grid
    ModeData hd;
    hd.kh = {k};
    for (std::size_t i = 0; i < dh; ++i) {
      const Series ft = h0.asDiagonal() * (P * fh[i]) - 2.0 * h1.asDiagonal() * (P * (g.D * Euh[i])) -
                        h2.asDiagonal() * (P * Euh[i]);
      hd.fh.push_back(levels_from_effective(ft, t));
    }
    const Series ftz_h = h0.asDiagonal() * (P * fz) - 2.0 * h1.asDiagonal() * (P * (g.D * Euz)) -
                         h2.asDiagonal() * (P * Euz) + h1.asDiagonal() * (P * p);
    hd.fz = levels_from_effective(ftz_h, t);
    hd.rho = h1.asDiagonal() * (P * uz);
    hp.modes.emplace(n, std::move(hd));
  }
  return out;
}

}  // namespace rbc::stokes
