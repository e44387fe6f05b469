#include "rbc/boussinesq.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "rbc/errors.hpp"

namespace rbc {

void SimParams::validate() const {
  if (!(Ra > 0.0) || !std::isfinite(Ra)) throw ParameterError("Ra must be positive and finite");
  if (!(Pr > 0.0)) throw ParameterError("Pr must be positive or infinite");
  if (!(L > 0.0)) throw ParameterError("L must be positive");
  if (Nx < 0 || Nx % 2 != 0) throw ParameterError("Nx must be even (or 0 for the default)");
  if (Nz != 0 && Nz < 5) throw ParameterError("Nz must be at least 5 (or 0 for the default)");
  if (dt < 0.0) throw ParameterError("dt must be non-negative (0 selects the adaptive step)");
  if (!(t_end >= 0.0)) throw ParameterError("t_end must be non-negative");
  if (!(transient_fraction >= 0.0 && transient_fraction < 1.0))
    throw ParameterError("transient_fraction must lie in [0, 1)");
  if (!(cfl_target > 0.0) || !(cfl_limit >= cfl_target)) throw ParameterError("need 0 < cfl_target <= cfl_limit");
}

namespace {

bool fft_friendly(int n) {
  for (int f : {2, 3, 5})
    while (n % f == 0) n /= f;
  return n == 1;
}

}  // namespace

int default_nx(double Ra) {
  int n = static_cast<int>(std::ceil(std::max(64.0, 4.0 * std::pow(Ra, 0.3))));
  while (n % 2 != 0 || !fft_friendly(n)) ++n;
  return n;
}

int default_nz(int Nx) {
  int n = static_cast<int>(std::ceil(0.4 * Nx / 8.0)) * 8 + 1;
  return std::max(33, n);
}

SimParams with_defaults(SimParams p) {
  if (p.Nx == 0) p.Nx = default_nx(p.Ra);
  if (p.Nz == 0) p.Nz = default_nz(p.Nx);
  return p;
}

double max_stable_dt(const SimParams& p) {
  return std::min(1e-2, 0.1 / std::sqrt(p.Ra * std::min(p.Pr, 1.0)));
}

namespace {

GridPtr grid_for(const SimParams& p) { return make_grid(p.L, p.Nx, p.Nz, 1.0); }

}  // namespace

State conduction_state(const SimParams& params) {
  SimParams p = with_defaults(params);
  p.validate();
  auto g = grid_for(p);
  State s{ModalField(g), ModalField(g), ModalField(g), 0.0};
  s.T.set_profile(0, (1.0 - g->z_nodes.array()).cast<cplx>().matrix());
  return s;
}

State init_state(const SimParams& params, std::uint64_t seed, double amplitude) {
  State s = conduction_state(params);
  if (amplitude == 0.0) return s;
  const Grid& g = *s.T.grid;
  std::mt19937_64 rng(seed);
  auto uniform = [&rng]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0; };
  const int modes = std::min(4, (g.Nx - 1) / 3);
  std::vector<double> a(modes), b(modes);
  double norm = 0.0;
  for (int n = 0; n < modes; ++n) {
    a[n] = uniform();
    b[n] = uniform();
    norm += std::hypot(a[n], b[n]);
  }
  PhysicalField T(s.T.grid);
  Eigen::VectorXd x = x_nodes(g);
  for (int i = 0; i < g.Nx; ++i) {
    double h = 0.0;
    for (int n = 0; n < modes; ++n) {
      double kx = 2.0 * M_PI * (n + 1) * x[i] / g.L;
      h += a[n] * std::cos(kx) + b[n] * std::sin(kx);
    }
    h /= norm;
    for (int j = 0; j < g.Nz; ++j) {
      double z = g.z_nodes[j];
      T.values(i, j) = std::clamp(1.0 - z + amplitude * h * std::sin(M_PI * z), 0.0, 1.0);
    }
  }
  s.T = forward_transform(T);
  return s;
}

namespace {

struct ModeOps {
  Eigen::MatrixXd theta_inv;
  Eigen::MatrixXd omega_inv;
  Eigen::MatrixXd Q;  // Poisson inverse applied after the vorticity solve
  Eigen::VectorXcd om_a, om_b, ps_a, ps_b;
  Eigen::RowVectorXd q0, q1;
  Eigen::Matrix2d Minv;
};

void dirichlet_rows(Eigen::MatrixXd& A) {
  const Eigen::Index N = A.rows();
  A.row(0).setZero();
  A(0, 0) = 1.0;
  A.row(N - 1).setZero();
  A(N - 1, N - 1) = 1.0;
}

}  // namespace

struct Stepper::Impl {
  SimParams p;
  GridPtr g;
  int N = 0;   // Nz
  int nm = 0;  // retained modes n = 0..nm-1
  Eigen::VectorXd k;
  Eigen::VectorXd k2;
  Eigen::MatrixXd D, D2;
  Eigen::VectorXd dz_local;
  Eigen::MatrixXcd th, om, ps;
  Eigen::MatrixXcd th_prev, om_prev, nth_prev, nom_prev;
  bool have_prev = false;
  double dt_prev = 0.0;
  double t = 0.0;
  double dt = 0.0;
  std::vector<ModeOps> ops;
  double ops_a0 = 0.0;  // leading BDF coefficient the operators were built for
  HorizontalFft fft_inv;
  HorizontalFft fft_fwd;

  // quantities derived from the current state
  bool derived_valid = false;
  Eigen::MatrixXcd dth, dps, d2ps, dom;
  Eigen::MatrixXcd nth, nom;
  Eigen::VectorXd abs_w;
  StepInfo info;

  Impl(const SimParams& params, const State& s)
      : p(params),
        g(s.T.grid),
        N(g->Nz),
        nm((g->Nx - 1) / 3 + 1),
        fft_inv(g->Nx, 7 * g->Nz),
        fft_fwd(g->Nx, 2 * g->Nz) {
    k.resize(nm);
    for (int n = 0; n < nm; ++n) k[n] = 2.0 * M_PI * n / g->L;
    k2 = k.array().square();
    D = g->D1;
    D2 = g->D2;
    dz_local.resize(N);
    for (int j = 0; j < N; ++j) {
      double lo = j > 0 ? g->z_nodes[j] - g->z_nodes[j - 1] : 1e300;
      double hi = j + 1 < N ? g->z_nodes[j + 1] - g->z_nodes[j] : 1e300;
      dz_local[j] = std::min(lo, hi);
    }
    th.resize(N, nm);
    om.resize(N, nm);
    ps.resize(N, nm);
    for (int n = 0; n < nm; ++n) {
      th.col(n) = s.T.profile(n);
      om.col(n) = s.omega.profile(n);
      ps.col(n) = s.psi.profile(n);
    }
    th.col(0) -= (1.0 - g->z_nodes.array()).cast<cplx>().matrix();
    t = s.t;
  }

  void build_ops(double a0) {
    ops.assign(nm, ModeOps{});
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(N, N);
    const bool inf_pr = p.infinite_pr();
    for (int n = 0; n < nm; ++n) {
      ModeOps& o = ops[n];
      Eigen::MatrixXd L = D2 - k2[n] * I;
      Eigen::MatrixXd At = a0 * I - L;
      dirichlet_rows(At);
      o.theta_inv = At.partialPivLu().inverse();
      Eigen::MatrixXd Ao = inf_pr ? Eigen::MatrixXd(-L) : Eigen::MatrixXd(a0 / p.Pr * I - L);
      dirichlet_rows(Ao);
      o.omega_inv = Ao.partialPivLu().inverse();
      Eigen::MatrixXd P = L;
      dirichlet_rows(P);
      Eigen::MatrixXd Pinv = P.partialPivLu().inverse();
      Eigen::MatrixXd Z = I;
      Z(0, 0) = 0.0;
      Z(N - 1, N - 1) = 0.0;
      o.Q = Pinv * Z * o.omega_inv;
      Eigen::VectorXd oa = o.omega_inv.col(0), ob = o.omega_inv.col(N - 1);
      Eigen::VectorXd pa = Pinv * (Z * oa), pb = Pinv * (Z * ob);
      o.om_a = oa.cast<cplx>();
      o.om_b = ob.cast<cplx>();
      o.ps_a = pa.cast<cplx>();
      o.ps_b = pb.cast<cplx>();
      o.q0 = D.row(0) * o.Q;
      o.q1 = D.row(N - 1) * o.Q;
      Eigen::Matrix2d M;
      M << D.row(0).dot(pa), D.row(0).dot(pb), D.row(N - 1).dot(pa), D.row(N - 1).dot(pb);
      o.Minv = M.inverse();
    }
    ops_a0 = a0;
  }

  void compute_derived() {
    if (derived_valid) return;
    const int nx = g->Nx, half = nx / 2 + 1;
    const Eigen::VectorXcd ik = k.cast<cplx>() * cplx(0.0, 1.0);
    dth = D * th;
    dps = D * ps;
    d2ps = D * dps;
    dom = D * om;
    Eigen::MatrixXcd ikps = ps * ik.asDiagonal();

    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(half, 7 * N);
    auto put = [&](int slot, const Eigen::MatrixXcd& f) { H.block(0, slot * N, nm, N) = f.transpose(); };
    put(0, -dps);                    // u
    put(1, ikps);                    // w
    put(2, th * ik.asDiagonal());    // theta_x
    put(3, dth);                     // theta_z
    put(4, om * ik.asDiagonal());    // omega_x
    put(5, dom);                     // omega_z
    put(6, th);                      // theta
    Eigen::MatrixXd P;
    fft_inv.inverse(H, P);
    auto blk = [&](int slot) { return P.middleCols(slot * N, N); };

    Eigen::MatrixXd prod(nx, 2 * N);
    prod.leftCols(N) = blk(0).cwiseProduct(blk(2)) + blk(1).cwiseProduct(blk(3));
    prod.rightCols(N) = blk(0).cwiseProduct(blk(4)) + blk(1).cwiseProduct(blk(5));
    Eigen::MatrixXcd Hp;
    fft_fwd.forward(prod, Hp);
    Eigen::MatrixXcd jth = Hp.block(0, 0, nm, N).transpose();
    Eigen::MatrixXcd jom = Hp.block(0, N, nm, N).transpose();

    nth = -jth + ikps;
    if (p.infinite_pr()) {
      nom.resize(0, 0);
    } else {
      nom = p.Ra * (th * ik.asDiagonal()) - jom / p.Pr;
    }

    const double dx = g->L / nx;
    double rate = 0.0, tmin = 1e300, tmax = -1e300;
    abs_w.resize(N);
    for (int j = 0; j < N; ++j) {
      double base = 1.0 - g->z_nodes[j];
      double aw = 0.0;
      for (int i = 0; i < nx; ++i) {
        double u = blk(0)(i, j), w = blk(1)(i, j);
        rate = std::max(rate, std::abs(u) / dx + std::abs(w) / dz_local[j]);
        double T = base + blk(6)(i, j);
        tmin = std::min(tmin, T);
        tmax = std::max(tmax, T);
        aw += std::abs(w);
      }
      abs_w[j] = aw / nx;
    }
    info.t = t;
    info.dt = dt;
    info.cfl = rate;
    info.min_T = tmin;
    info.max_T = tmax;

    // instantaneous volume Nusselt number
    Eigen::VectorXd Tw = Eigen::VectorXd::Zero(N);
    for (int n = 1; n < nm; ++n) Tw += 2.0 * (th.col(n).array() * ikps.col(n).array().conjugate()).real().matrix();
    Eigen::VectorXd dzT = dth.col(0).real().array() - 1.0;
    info.nu_volume = g->quad_weights.dot(Tw - dzT);
    derived_valid = true;
  }

  void solve_vorticity(Eigen::MatrixXcd& R) {
    R.row(0).setZero();
    R.row(N - 1).setZero();
    for (int n = 0; n < nm; ++n) {
      const ModeOps& o = ops[n];
      Eigen::VectorXcd r = R.col(n);
      Eigen::VectorXcd wp = o.omega_inv * r;
      Eigen::VectorXcd pp = o.Q * r;
      Eigen::Vector2cd gvec(o.q0 * r, o.q1 * r);
      Eigen::Vector2cd c = -(o.Minv.cast<cplx>() * gvec);
      om.col(n) = wp + c[0] * o.om_a + c[1] * o.om_b;
      ps.col(n) = pp + c[0] * o.ps_a + c[1] * o.ps_b;
    }
  }

  StepInfo advance() {
    if (!(dt > 0.0)) throw StepSizeError("time step not set");
    compute_derived();
    StepInfo out = info;
    out.cfl = info.cfl * dt;
    if (p.dt > 0.0 && out.cfl > p.cfl_limit)
      throw StepSizeError("advective CFL " + std::to_string(out.cfl) + " exceeds limit " +
                          std::to_string(p.cfl_limit));

    // Variable-step BDF2 for diffusion with extrapolated explicit terms; implicit Euler on
    // the first step. Crank-Nicolson leaves the stiffest Chebyshev modes of the vorticity
    // undamped (amplification near -1) and those ring until the run diverges.
    double a0 = 1.0 / dt, a1 = -1.0 / dt, a2 = 0.0;
    Eigen::MatrixXcd Nth = nth, Nom = nom;
    if (have_prev) {
      const double r = dt / dt_prev;
      a0 = (1.0 + 2.0 * r) / ((1.0 + r) * dt);
      a1 = -(1.0 + r) / dt;
      a2 = r * r / ((1.0 + r) * dt);
      Nth = (1.0 + r) * nth - r * nth_prev;
      if (!p.infinite_pr()) Nom = (1.0 + r) * nom - r * nom_prev;
    }
    if (a0 != ops_a0) build_ops(a0);

    Eigen::MatrixXcd R = Nth - a1 * th;
    if (have_prev) R -= a2 * th_prev;
    R.row(0).setZero();
    R.row(N - 1).setZero();
    Eigen::MatrixXcd th_new(N, nm);
    for (int n = 0; n < nm; ++n) th_new.col(n) = ops[n].theta_inv * R.col(n);

    if (p.infinite_pr()) {
      const Eigen::VectorXcd ik = k.cast<cplx>() * cplx(0.0, 1.0);
      Eigen::MatrixXcd Ro = p.Ra * (th_new * ik.asDiagonal());
      solve_vorticity(Ro);
    } else {
      Eigen::MatrixXcd Ro = Nom - (a1 / p.Pr) * om;
      if (have_prev) Ro -= (a2 / p.Pr) * om_prev;
      om_prev = om;
      solve_vorticity(Ro);
    }
    th_prev = th;
    th = th_new;
    nth_prev = nth;
    nom_prev = nom;
    have_prev = true;
    dt_prev = dt;
    t += dt;
    derived_valid = false;
    if (!th.allFinite() || !om.allFinite() || !ps.allFinite())
      throw DivergenceError("non-finite values after step at t=" + std::to_string(t));
    return out;
  }

  void accumulate(TimeAverages& avg, double weight) {
    compute_derived();
    Eigen::VectorXd Tw = Eigen::VectorXd::Zero(N), gT = Eigen::VectorXd::Zero(N), gu = Eigen::VectorXd::Zero(N);
    Eigen::VectorXd dzT = dth.col(0).real().array() - 1.0;
    gT = dzT.array().square();
    for (int n = 0; n < nm; ++n) {
      double wn = n == 0 ? 1.0 : 2.0;
      double kk = k2[n];
      auto thn = th.col(n).array();
      auto psn = ps.col(n).array();
      auto dpsn = dps.col(n).array();
      auto d2psn = d2ps.col(n).array();
      if (n > 0) {
        Tw += wn * (thn * (cplx(0.0, k[n]) * psn).conjugate()).real().matrix();
        gT += wn * (dth.col(n).array().abs2() + kk * thn.abs2()).matrix();
      }
      gu += wn * (kk * dpsn.abs2() + d2psn.abs2() + kk * kk * psn.abs2() + kk * dpsn.abs2()).matrix();
    }
    if (avg.count == 0) avg.t_begin = t;
    avg.sum_Tw += weight * Tw;
    avg.sum_abs_w += weight * abs_w;
    avg.sum_gradT2 += weight * gT;
    avg.sum_gradu2 += weight * gu;
    avg.sum_dzT += weight * dzT;
    avg.weight += weight;
    avg.count += 1;
    avg.t_end = t + weight;
  }

  State state() const {
    State s{ModalField(g), ModalField(g), ModalField(g), t};
    for (int n = 0; n < nm; ++n) {
      Eigen::VectorXcd T = th.col(n);
      if (n == 0) T += (1.0 - g->z_nodes.array()).cast<cplx>().matrix();
      s.T.set_profile(n, T);
      s.psi.set_profile(n, ps.col(n));
      s.omega.set_profile(n, om.col(n));
      if (n > 0) {
        s.T.set_profile(-n, T.conjugate());
        s.psi.set_profile(-n, ps.col(n).conjugate());
        s.omega.set_profile(-n, om.col(n).conjugate());
      }
    }
    return s;
  }
};

Stepper::Stepper(const SimParams& params, const State& s) {
  SimParams p = params;
  p.Nx = s.T.grid->Nx;
  p.Nz = s.T.grid->Nz;
  p.L = s.T.grid->L;
  p.validate();
  impl_ = std::make_unique<Impl>(p, s);
  if (p.dt > 0.0) impl_->dt = p.dt;
}

Stepper::~Stepper() = default;
Stepper::Stepper(Stepper&&) noexcept = default;
Stepper& Stepper::operator=(Stepper&&) noexcept = default;

StepInfo Stepper::advance() { return impl_->advance(); }

void Stepper::set_dt(double dt) {
  if (!(dt > 0.0)) throw StepSizeError("time step must be positive");
  impl_->dt = dt;
}

double Stepper::dt() const { return impl_->dt; }
double Stepper::time() const { return impl_->t; }

StepInfo Stepper::probe() {
  impl_->compute_derived();
  return impl_->info;
}

void Stepper::accumulate(TimeAverages& avg, double weight) { impl_->accumulate(avg, weight); }
State Stepper::state() const { return impl_->state(); }
const SimParams& Stepper::params() const { return impl_->p; }

namespace {

double auto_dt(Stepper& st, const SimParams& p) {
  double rate = st.probe().cfl;
  double dt = max_stable_dt(p);
  if (rate > 0.0) dt = std::min(dt, p.cfl_target / rate);
  return dt;
}

}  // namespace

State step(const State& s, const SimParams& params) {
  Stepper st(params, s);
  if (!(params.dt > 0.0)) st.set_dt(auto_dt(st, st.params()));
  st.advance();
  return st.state();
}

Trajectory run(const SimParams& params, std::uint64_t seed, double amplitude, const std::vector<Observer>& observers) {
  RunOptions o;
  o.seed = seed;
  o.amplitude = amplitude;
  o.observers = observers;
  return run(params, o);
}

Trajectory run(const SimParams& params, const RunOptions& opts) {
  SimParams p = with_defaults(params);
  p.validate();
  Trajectory tr;
  tr.params = p;
  State s0 = opts.initial ? *opts.initial : init_state(p, opts.seed, opts.amplitude);
  tr.averages = TimeAverages(*s0.T.grid);
  const double t0 = s0.t;
  const double t_stop = t0 + p.t_end;
  if (p.t_end == 0.0) {
    tr.final_state = s0;
    return tr;
  }
  Stepper st(p, s0);
  const bool adaptive = !(p.dt > 0.0);
  const double dt_max = max_stable_dt(p);
  if (adaptive) st.set_dt(auto_dt(st, p));
  const double t_avg = t0 + p.transient_fraction * p.t_end;
  long since_change = 0;

  while (st.time() < t_stop - 1e-12 * std::max(1.0, t_stop)) {
    StepInfo pr = st.probe();
    if (adaptive) {
      double c = pr.cfl * st.dt();
      double want = st.dt();
      if (c > 1.4 * p.cfl_target) {
        want = p.cfl_target / pr.cfl;
      } else if (since_change > 50 && c < 0.6 * p.cfl_target && st.dt() < dt_max) {
        want = std::min({dt_max, 1.5 * st.dt(), pr.cfl > 0.0 ? p.cfl_target / pr.cfl : dt_max});
      }
      if (want != st.dt()) {
        st.set_dt(want);
        since_change = 0;
      }
    }
    double remaining = t_stop - st.time();
    if (st.dt() > remaining) st.set_dt(remaining);

    const double t_now = st.time();
    const bool in_window = t_now >= t_avg - 1e-12;
    if (in_window) {
      st.accumulate(tr.averages, st.dt());
      tr.times.push_back(t_now);
      tr.nu_series.push_back(pr.nu_volume);
    }
    if (opts.hardy_every > 0 && in_window && tr.steps % opts.hardy_every == 0)
      tr.hardy_series.push_back(hardy_nonlinearity_ratio(st.state()));
    if (opts.snapshot_every > 0 && tr.steps % opts.snapshot_every == 0) tr.snapshots.push_back(st.state());

    StepInfo info;
    try {
      info = st.advance();
    } catch (const Error& e) {
      throw RunError(t_now, e.what());
    }
    ++tr.steps;
    ++since_change;
    tr.min_T = std::min(tr.min_T, info.min_T);
    tr.max_T = std::max(tr.max_T, info.max_T);
    if (!opts.observers.empty()) {
      State cur = st.state();
      for (const auto& obs : opts.observers) obs(cur, info);
    }
  }
  StepInfo last = st.probe();
  tr.min_T = std::min(tr.min_T, last.min_T);
  tr.max_T = std::max(tr.max_T, last.max_T);
  tr.dt_last = st.dt();
  tr.final_state = st.state();
  if (tr.nu_series.size() >= 4) tr.plateau_drift = plateau_drift(tr.nu_series);
  return tr;
}

}  // namespace rbc
