#include <algorithm>
#include <cmath>
#include <array>
#include <random>

#include "json.hpp"
#include "rbc/errors.hpp"
#include "rbc/stokes.hpp"

namespace rbc::stokes {

namespace {

const cplx I1(0.0, 1.0);

enum Group { T1, T2, T3, T4, T5, F, RHO_T, RHO_ZZ, RHO_GRAD, NGROUPS };

struct Component {
  Group group;
  double weight;  // multiplicity inside the Euclidean norm of the group
  Series values;  // steps
};

std::vector<Component> components(const ModeSolution& s, const ModeData& m, double k, const VGrid& g,
                                  const TimeGrid& t, bool half) {
  const Eigen::MatrixXd& D = g.D;
  const Eigen::MatrixXd& D2 = g.D2;
  const cplx ik = I1 * k;
  std::vector<Component> c;
  for (std::size_t i = 0; i < s.uh.size(); ++i) {
    const Series Eu = effective(s.uh[i], t), DEu = D * Eu;
    c.push_back({T1, 1.0, time_derivative(s.uh[i], t) - D2 * Eu});
    c.push_back({T2, 1.0, ik * ik * Eu});
    c.push_back({T2, 1.0, ik * DEu});
    c.push_back({F, 1.0, effective(m.fh[i], t)});
  }
  const Series Euz = effective(s.uz, t);
  c.push_back({T3, 1.0, time_derivative(s.uz, t)});
  c.push_back({T4, 1.0, ik * ik * Euz});
  c.push_back({T4, 2.0, ik * (D * Euz)});  // the two mixed entries
  c.push_back({T4, 1.0, D2 * Euz});
  c.push_back({T5, 1.0, ik * s.p});
  c.push_back({T5, 1.0, D * s.p});
  c.push_back({F, 1.0, effective(m.fz, t)});
  if (half && m.rho.size() != 0) {
    const Series Er = effective(m.rho, t);
    c.push_back({RHO_T, 1.0, time_derivative(m.rho, t) / k});
    c.push_back({RHO_ZZ, 1.0, D2 * Er / k});
    c.push_back({RHO_GRAD, 1.0, ik * Er});
    c.push_back({RHO_GRAD, 1.0, D * Er});
  }
  return c;
}

}  // namespace

MaxRegReport maxreg_report(const StokesSolution& sol, const std::map<int, ModeData>& data, double R, Domain domain,
                           int x_oversample) {
  if (sol.modes.empty()) throw ConfigError("maxreg report: empty solution");
  if (x_oversample < 2) throw ParameterError("maxreg report: oversampling factor must be at least 2");
  const VGrid& g = sol.grid;
  const TimeGrid& t = sol.time;
  const bool half = domain == Domain::half;
  if (!half && std::abs(g.H - 1.0) > 1e-12) throw ConfigError("maxreg report: strip solution must live on [0, 1]");
  const int N = g.N;

  int nx = std::max(16, x_oversample * sol.modes.rbegin()->first);
  nx = (nx + 7) / 8 * 8;

  std::vector<int> slot;
  std::vector<Component> comps;
  std::vector<std::size_t> comp_mode;
  for (const auto& [n, s] : sol.modes) {
    const auto it = data.find(n);
    if (it == data.end()) throw ConfigError("maxreg report: no data for mode " + std::to_string(n));
    if (n >= nx / 2) throw ConfigError("maxreg report: mode beyond the sampling grid");
    for (auto& c : components(s, it->second, band_wavenumber(n, sol.L), g, t, half)) {
      comps.push_back(std::move(c));
      comp_mode.push_back(slot.size());
    }
    slot.push_back(n);
  }
  // all modes carry the same component layout up to the optional rho terms;
  // group columns by (component index within a mode) so a physical field sums the modes
  std::vector<std::pair<Group, double>> layout;
  std::vector<std::vector<std::size_t>> members;  // layout entry -> component indices
  {
    std::vector<int> count(slot.size(), 0);
    for (std::size_t c = 0; c < comps.size(); ++c) {
      const int local = count[comp_mode[c]]++;
      if (local >= static_cast<int>(layout.size())) {
        layout.emplace_back(comps[c].group, comps[c].weight);
        members.emplace_back();
      }
      members[local].push_back(c);
    }
  }

  const int ncol = static_cast<int>(layout.size()) * N;
  HorizontalFft fft(nx, ncol);
  Eigen::MatrixXcd spec = Eigen::MatrixXcd::Zero(nx / 2 + 1, ncol);
  Eigen::MatrixXd phys(nx, ncol);
  Eigen::MatrixXd profile = Eigen::MatrixXd::Zero(N, NGROUPS);
  Eigen::MatrixXd sq(nx, N);
  for (int n = 0; n < t.Nt; ++n) {
    spec.setZero();
    for (std::size_t l = 0; l < layout.size(); ++l)
      for (std::size_t c : members[l])
        spec.block(slot[comp_mode[c]], l * N, 1, N) = comps[c].values.col(n).transpose();
    fft.inverse(spec, phys);
    for (int grp = 0; grp < NGROUPS; ++grp) {
      sq.setZero();
      bool any = false;
      for (std::size_t l = 0; l < layout.size(); ++l) {
        if (layout[l].first != grp) continue;
        sq += layout[l].second * phys.middleCols(l * N, N).cwiseAbs2();
        any = true;
      }
      if (any) profile.col(grp) += sq.cwiseSqrt().colwise().mean().transpose();
    }
  }
  profile /= t.Nt;

  const WeightKind w = half ? WeightKind::upper : WeightKind::strip;
  auto norm = [&](int grp) { return weighted_interpolation_norm(g.z, profile.col(grp), w).k_value; };
  MaxRegReport r;
  r.weight = w;
  r.R = R;
  r.Nz = N;
  r.Nt = t.Nt;
  r.z_max = g.H;
  r.time_derivative_horizontal = norm(T1);
  r.hessian_horizontal = norm(T2);
  r.time_derivative_vertical = norm(T3);
  r.hessian_vertical = norm(T4);
  r.pressure_gradient = norm(T5);
  r.forcing = norm(F);
  if (half) r.rho_terms = norm(RHO_T) + norm(RHO_ZZ) + norm(RHO_GRAD);
  r.lhs = r.time_derivative_horizontal + r.hessian_horizontal + r.time_derivative_vertical + r.hessian_vertical +
          r.pressure_gradient;
  const double rhs = r.forcing + r.rho_terms;
  r.ratio = rhs > 0.0 ? r.lhs / rhs : 0.0;
  return r;
}

std::string to_json(const MaxRegReport& r) {
  nlohmann::json j;
  j["lhs_terms"] = {{"dt_minus_dzz_uh", r.time_derivative_horizontal},
                    {"grad_h_grad_uh", r.hessian_horizontal},
                    {"dt_uz", r.time_derivative_vertical},
                    {"hess_uz", r.hessian_vertical},
                    {"grad_p", r.pressure_gradient}};
  j["lhs"] = r.lhs;
  j["f_norm"] = r.forcing;
  j["rho_norms"] = r.rho_terms;
  j["ratio"] = r.ratio;
  j["grid"] = {{"Nz", r.Nz}, {"Nt", r.Nt}, {"z_max", r.z_max}};
  j["R"] = r.R;
  j["weight_kind"] = to_string(r.weight);
  return j.dump();
}

namespace {

// Smooth envelope with s(0) = 0 and O(1) variation in time.
struct Envelope {
  double tau, amp, omega, phase;

  static Envelope draw(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    return {0.2 + 0.8 * u(rng), 0.5 * u(rng), 0.5 + 2.5 * u(rng), 2.0 * M_PI * u(rng)};
  }
  double operator()(double t) const {
    const double ramp = 1.0 - std::exp(-t / tau);
    return ramp * ramp * (1.0 + amp * std::sin(omega * t + phase));
  }
};

cplx normal_c(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  const double re = n(rng);
  return {re, n(rng)};
}

template <class Profile>
Series sample(const VGrid& g, const TimeGrid& t, const Profile& prof, const Envelope& env) {
  Series s(g.N, t.Nt + 1);
  for (int n = 0; n <= t.Nt; ++n) {
    const double e = env(t.level_time(n));
    for (int j = 0; j < g.N; ++j) s(j, n) = e * prof(g.z[j]);
  }
  return s;
}

}  // namespace

StripProblem random_strip_problem(std::uint64_t seed, double R, int Nz, const TimeGrid& t,
                                  const std::vector<int>& modes, double L) {
  StripProblem p;
  p.L = L;
  p.R = R;
  p.Nz = Nz;
  p.time = t;
  const VGrid g = make_vgrid(Nz, 1.0);
  std::mt19937_64 rng(seed);
  for (int n : modes) {
    ModeData m;
    m.kh = {band_wavenumber(n, L)};
    for (int c = 0; c < 2; ++c) {
      // low-order Chebyshev profile in 2z - 1
      std::array<cplx, 4> a;
      for (int q = 0; q < 4; ++q) a[q] = normal_c(rng) / (q + 1.0);
      const Envelope env = Envelope::draw(rng);
      auto prof = [&](double z) {
        const double x = 2.0 * z - 1.0;
        double tm = 1.0, tc = x;
        cplx v = a[0] + a[1] * x;
        for (int q = 2; q < 4; ++q) {
          const double tn = 2.0 * x * tc - tm;
          v += a[q] * tn;
          tm = tc;
          tc = tn;
        }
        return v;
      };
      Series s = sample(g, t, prof, env);
      if (c == 0)
        m.fh = {s};
      else
        m.fz = s;
    }
    p.modes.emplace(n, std::move(m));
  }
  return p;
}

HalfSpaceProblem random_halfspace_problem(std::uint64_t seed, double R, int Nz, const TimeGrid& t,
                                          const std::vector<int>& modes, bool with_rho, double L, double z_max) {
  HalfSpaceProblem p;
  p.L = L;
  p.R = R;
  p.Nz = Nz;
  p.time = t;
  p.z_max = z_max > 0.0 ? z_max : default_z_max(R);
  const VGrid g = make_vgrid(Nz, p.z_max);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int n : modes) {
    ModeData m;
    m.kh = {band_wavenumber(n, L)};
    const int ncomp = with_rho ? 3 : 2;
    for (int c = 0; c < ncomp; ++c) {
      // decaying profile z^q exp(-z / ell); rho vanishes at the wall
      const double ell = R * (1.0 + u(rng));
      std::array<cplx, 3> a;
      for (auto& x : a) x = normal_c(rng);
      const int q0 = c == 2 ? 1 : 0;
      const Envelope env = Envelope::draw(rng);
      auto prof = [&](double z) {
        const double s = z / ell;
        cplx v = 0.0;
        for (int q = 0; q < 3; ++q) v += a[q] * std::pow(s, q + q0);
        return v * std::exp(-s);
      };
      Series s = sample(g, t, prof, env);
      if (c == 0)
        m.fh = {s};
      else if (c == 1)
        m.fz = s;
      else
        m.rho = s;
    }
    p.modes.emplace(n, std::move(m));
  }
  return p;
}

std::vector<int> band_modes(double R, double L) {
  std::vector<int> out;
  for (int n = 1; R * band_wavenumber(n, L) <= 4.0 + 1e-12; ++n)
    if (in_band(band_wavenumber(n, L), R)) out.push_back(n);
  return out;
}

}  // namespace rbc::stokes
