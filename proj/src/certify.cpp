#include "rbc/certify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "json.hpp"
#include "rbc/errors.hpp"

namespace rbc::certify {

namespace {

using namespace rbc::stokes;

std::uint64_t trial_seed(std::uint64_t seed, int family, int trial) {
  return seed * 1000003ULL + static_cast<std::uint64_t>(family) * 10007ULL + static_cast<std::uint64_t>(trial);
}

std::vector<int> pick_modes(const std::vector<int>& band, int count, std::uint64_t seed) {
  std::vector<int> pool = band;
  std::mt19937_64 rng(seed);
  const int n = std::min<int>(count, static_cast<int>(pool.size()));
  for (int i = 0; i < n; ++i) {
    std::uniform_int_distribution<int> pick(i, static_cast<int>(pool.size()) - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(n);
  std::sort(pool.begin(), pool.end());
  return pool;
}

TimeGrid time_grid(const StokesCertConfig& c, int factor) {
  TimeGrid t;
  t.Nt = c.Nt * factor;
  t.dt = c.dt / factor;
  t.scheme = c.scheme;
  return t;
}

MaxRegReport strip_trial(const StokesCertConfig& c, std::uint64_t seed, const std::vector<int>& modes, int factor,
                         bool enforce_band) {
  const TimeGrid t = time_grid(c, factor);
  StripProblem p = random_strip_problem(seed, c.R, (c.Nz - 1) * factor + 1, t, modes, c.L);
  p.R0 = c.R0;
  p.enforce_band = enforce_band;
  return maxreg_report(stokes_strip(p), p.modes, c.R, Domain::strip);
}

std::string fmt(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.4g", v);
  return b;
}

}  // namespace

StokesCertReport certify_stokes(const StokesCertConfig& c, std::uint64_t seed) {
  if (c.strip_trials < 1 || c.half_trials < 0 || c.modes_per_trial < 1)
    throw ConfigError("certify stokes: trial counts must be positive");
  const auto t_start = std::chrono::steady_clock::now();
  const std::vector<int> band = band_modes(c.R, c.L);
  if (band.empty()) throw ConfigError("certify stokes: no modes in the band for this R and L");
  StokesCertReport r;

  std::vector<std::vector<int>> trial_modes;
  for (int i = 0; i < c.strip_trials; ++i) {
    const std::uint64_t s = trial_seed(seed, 1, i);
    trial_modes.push_back(pick_modes(band, c.modes_per_trial, s));
    const MaxRegReport m = strip_trial(c, s, trial_modes.back(), 1, true);
    r.strip_ratios.push_back(m.ratio);
    if (m.ratio >= r.strip_max) {
      r.strip_max = m.ratio;
      r.strip_worst = m;
    }
  }
  if (c.refine) {
    for (int i = 0; i < c.strip_trials; ++i) {
      const MaxRegReport m = strip_trial(c, trial_seed(seed, 1, i), trial_modes[i], 2, true);
      r.strip_ratios_refined.push_back(m.ratio);
      r.strip_max_refined = std::max(r.strip_max_refined, m.ratio);
    }
    r.refinement_change = std::abs(r.strip_max_refined / r.strip_max - 1.0);
  }

  const TimeGrid t = time_grid(c, 1);
  for (int i = 0; i < c.half_trials; ++i) {
    const std::uint64_t s = trial_seed(seed, 2, i);
    const HalfSpaceProblem p =
        random_halfspace_problem(s, c.R, c.Nz, t, pick_modes(band, c.modes_per_trial, s), i % 2 == 1, c.L);
    const StokesSolution a = stokes_halfspace(p), b = stokes_direct(p);
    for (const auto& [n, am] : a.modes)
      r.decomposition_error = std::max(r.decomposition_error, relative_l2(am, b.modes.at(n), a.grid));
    r.boundary_residual = std::max(r.boundary_residual, a.worst.boundary);
    r.divergence_residual = std::max(r.divergence_residual, a.worst.divergence);
    const double ratio = maxreg_report(a, p.modes, c.R, Domain::half).ratio;
    r.half_ratios.push_back(ratio);
    r.half_max = std::max(r.half_max, ratio);
  }

  if (c.negative_control) {
    r.negative_ratio = strip_trial(c, trial_seed(seed, 3, 0), {1}, 1, false).ratio;
    r.negative_factor = r.negative_ratio / r.strip_max;
  }

  auto over = [&](const std::string& what, double v, double ceiling) {
    if (!(v <= ceiling)) r.failures.push_back(what + " " + fmt(v) + " exceeds " + fmt(ceiling));
  };
  over("strip ratio", r.strip_max, c.strip_ratio_ceiling);
  if (c.refine) over("refined strip ratio", r.strip_max_refined, c.strip_ratio_ceiling);
  if (c.half_trials > 0) {
    over("half-space ratio", r.half_max, c.half_ratio_ceiling);
    over("decomposition error", r.decomposition_error, c.decomposition_tol);
    over("boundary residual", r.boundary_residual, c.boundary_tol);
    over("divergence residual", r.divergence_residual, c.divergence_tol);
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return r;
}

std::string to_json(const StokesCertReport& r) {
  nlohmann::json j;
  j["strip"] = {{"ratios", r.strip_ratios},
                {"max_ratio", r.strip_max},
                {"ratios_refined", r.strip_ratios_refined},
                {"max_ratio_refined", r.strip_max_refined},
                {"refinement_change", r.refinement_change},
                {"worst", nlohmann::json::parse(to_json(r.strip_worst))}};
  j["half"] = {{"ratios", r.half_ratios},
               {"max_ratio", r.half_max},
               {"decomposition_error", r.decomposition_error},
               {"boundary_residual", r.boundary_residual},
               {"divergence_residual", r.divergence_residual}};
  j["negative_control"] = {{"ratio", r.negative_ratio}, {"factor", r.negative_factor}};
  j["seconds"] = r.seconds;
  j["failures"] = r.failures;
  j["passed"] = r.passed();
  return j.dump(2);
}

KernelCertReport certify_kernels(const KernelCertConfig& c) {
  const auto t_start = std::chrono::steady_clock::now();
  KernelCertReport r;
  r.estimates = kernels::heat_kernel_estimates(c.t_samples, c.z_samples, c.d);
  for (const auto& [name, s] : r.estimates.items) {
    const bool ee1 = name.rfind("ee1", 0) == 0;
    const double ceiling = ee1 ? c.ee1_ceiling : c.constant_ceiling;
    if (!(s.max <= ceiling)) r.failures.push_back(name + " " + fmt(s.max) + " exceeds " + fmt(ceiling));
    if (!(s.spread <= c.spread_ceiling))
      r.failures.push_back(name + " spread " + fmt(s.spread) + " exceeds " + fmt(c.spread_ceiling));
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return r;
}

std::string to_json(const KernelCertReport& r) {
  nlohmann::json j = nlohmann::json::parse(kernels::to_json(r.estimates));
  j["seconds"] = r.seconds;
  j["failures"] = r.failures;
  j["passed"] = r.passed();
  return j.dump(2);
}

}  // namespace rbc::certify
