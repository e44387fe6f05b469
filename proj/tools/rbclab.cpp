// rbclab: command-line front end for simulations, sweeps and certifications.
//
// Exit codes: 0 success, 1 runtime failure (including failed sweep points),
// 2 certification ceiling exceeded, 64 usage or configuration error.

#include <atomic>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "rbc/certify.hpp"
#include "rbc/errors.hpp"
#include "rbc/harness.hpp"

namespace fs = std::filesystem;
using namespace rbc;
using namespace rbc::harness;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitCertify = 2;
constexpr int kExitUsage = 64;

std::atomic<bool> g_cancel{false};

extern "C" void on_signal(int) { g_cancel.store(true); }

struct Cli {
  std::string config, out;
  std::uint64_t seed = 0;
  int jobs = 0;
  std::vector<double> ra, pr;
};

void add_common(CLI::App* sub, Cli& c) {
  sub->add_option("--config", c.config, "INI configuration file")->check(CLI::ExistingFile);
  sub->add_option("--out", c.out, "output directory");
  sub->add_option("--seed", c.seed, "random seed");
  sub->add_option("--jobs", c.jobs, "worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--ra", c.ra, "Rayleigh numbers, comma separated")->delimiter(',');
  sub->add_option("--pr", c.pr, "Prandtl numbers, comma separated")->delimiter(',');
}

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot write " + path);
  f << text;
}

RunSpec build_spec(const CLI::App& sub, const Cli& c, Mode mode) {
  RunSpec s = c.config.empty() ? RunSpec{} : parse_config(read_file(c.config));
  s.mode = mode;
  if (sub.count("--out")) s.out = c.out;
  if (sub.count("--seed")) s.seed = c.seed;
  if (sub.count("--jobs")) s.jobs = c.jobs;
  if (mode == Mode::simulate) {
    if (c.ra.size() > 1 || c.pr.size() > 1) throw ConfigError("simulate takes a single --ra and --pr");
    if (!c.ra.empty()) s.sim.Ra = c.ra[0];
    if (!c.pr.empty()) s.sim.Pr = c.pr[0];
    s.ra.clear();
    s.pr.clear();
  } else {
    if (!c.ra.empty()) s.ra = c.ra;
    if (!c.pr.empty()) s.pr = c.pr;
  }
  validate(s);
  if (s.out.empty()) throw ConfigError("run.out: an output directory is required");
  fs::create_directories(s.out + "/plots");
  write_file(s.out + "/config.ini", serialize_config(s));
  return s;
}

int do_sweep(const RunSpec& spec) {
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  SweepOptions o;
  o.cancel = &g_cancel;
  o.on_row = [](const SweepRow& r) {
    if (r.ok())
      std::printf("[%d] Ra=%g Pr=%g  Nu=%.5f  spread=%.2e  (%.1fs)\n", r.index, r.Ra, r.Pr, r.nu_volume, r.spread,
                  r.wall_clock);
    else
      std::printf("[%d] Ra=%g Pr=%g  FAILED %s: %s\n", r.index, r.Ra, r.Pr, r.status.c_str(), r.error.c_str());
    std::fflush(stdout);
  };
  const SweepResult r = run_sweep(spec, o);
  int failed = 0;
  for (const auto& row : r.rows) failed += !row.ok();
  if (static_cast<int>(r.rows.size()) > failed) emit_plots(r, spec.out);
  std::printf("%zu points, %d failed; results in %s\n", r.rows.size(), failed, spec.out.c_str());
  if (g_cancel.load()) {
    std::printf("interrupted; completed rows are in results.csv\n");
    return kExitRuntime;
  }
  return failed ? kExitRuntime : 0;
}

int do_certify_stokes(const RunSpec& spec) {
  const certify::StokesCertReport r = certify::certify_stokes(spec.stokes, spec.seed);
  write_file(spec.out + "/summary.json", certify::to_json(r) + "\n");
  std::string csv = "family,trial,ratio,ratio_refined\n";
  for (std::size_t i = 0; i < r.strip_ratios.size(); ++i) {
    char b[128];
    std::snprintf(b, sizeof b, "strip,%zu,%.12g,%.12g\n", i, r.strip_ratios[i],
                  i < r.strip_ratios_refined.size() ? r.strip_ratios_refined[i] : std::nan(""));
    csv += b;
  }
  for (std::size_t i = 0; i < r.half_ratios.size(); ++i) {
    char b[128];
    std::snprintf(b, sizeof b, "half,%zu,%.12g,nan\n", i, r.half_ratios[i]);
    csv += b;
  }
  write_file(spec.out + "/results.csv", csv);

  std::vector<PlotSeries> series;
  PlotSeries s{"strip", {}, r.strip_ratios, false}, h{"half space", {}, r.half_ratios, false};
  for (std::size_t i = 0; i < s.y.size(); ++i) s.x.push_back(static_cast<double>(i));
  for (std::size_t i = 0; i < h.y.size(); ++i) h.x.push_back(static_cast<double>(i));
  series.push_back(s);
  if (!h.y.empty()) series.push_back(h);
  if (spec.stokes.negative_control) series.push_back({"control n = 1", {0.0}, {r.negative_ratio}, false});
  write_file(spec.out + "/plots/stokes_ratios.svg",
             svg_plot("Maximal-regularity ratio per trial", "trial", "ratio", series, false, false));

  std::printf("strip: max ratio %.4f over %zu trials", r.strip_max, r.strip_ratios.size());
  if (spec.stokes.refine) std::printf(", refined %.4f (change %.2e)", r.strip_max_refined, r.refinement_change);
  std::printf("\n");
  if (!r.half_ratios.empty())
    std::printf("half space: max ratio %.4f, decomposition error %.2e, wall %.2e, divergence %.2e\n", r.half_max,
                r.decomposition_error, r.boundary_residual, r.divergence_residual);
  if (spec.stokes.negative_control)
    std::printf("negative control: ratio %.4f (%.2fx the band maximum)\n", r.negative_ratio, r.negative_factor);
  for (const auto& f : r.failures) std::printf("FAIL %s\n", f.c_str());
  std::printf("%s in %.1fs\n", r.passed() ? "certified" : "NOT certified", r.seconds);
  return r.passed() ? 0 : kExitCertify;
}

int do_certify_kernels(const RunSpec& spec) {
  const certify::KernelCertReport r = certify::certify_kernels(spec.kernels);
  write_file(spec.out + "/summary.json", certify::to_json(r) + "\n");
  std::string csv = "item,at,value\n";
  std::vector<PlotSeries> series;
  for (const auto& [name, s] : r.estimates.items) {
    PlotSeries p{name, {}, {}, true};
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      char b[128];
      std::snprintf(b, sizeof b, "%s,%.12g,%.15g\n", name.c_str(), s.at[i], s.values[i]);
      csv += b;
      p.x.push_back(s.at[i]);
      p.y.push_back(s.values[i]);
    }
    if (name != "y1") series.push_back(std::move(p));
    std::printf("%-11s max %.10f  spread %.1e\n", name.c_str(), s.max, s.spread);
  }
  write_file(spec.out + "/results.csv", csv);
  write_file(spec.out + "/plots/kernel_constants.svg",
             svg_plot("Scaled heat-kernel constants", "t", "value", series, true, true));
  for (const auto& f : r.failures) std::printf("FAIL %s\n", f.c_str());
  std::printf("%s in %.2fs\n", r.passed() ? "certified" : "NOT certified", r.seconds);
  return r.passed() ? 0 : kExitCertify;
}

int do_stability(const RunSpec& spec) {
  const StabilityScan s = stability_scan(spec.stability);
  std::string csv = "Ra,max_rate,k\n";
  for (std::size_t i = 0; i < s.Ra.size(); ++i) {
    char b[128];
    std::snprintf(b, sizeof b, "%.12g,%.12g,%.12g\n", s.Ra[i], s.max_rate[i], s.k_arg[i]);
    csv += b;
  }
  write_file(spec.out + "/results.csv", csv);
  nlohmann::json j = {{"schema_version", kSummarySchema},
                      {"mode", "stability-scan"},
                      {"Pr", spec.stability.Pr},
                      {"Nz", spec.stability.Nz},
                      {"Ra_c", s.critical.Ra_c},
                      {"k_c", s.critical.k_c},
                      {"bracket", {spec.stability.ra_lo, spec.stability.ra_hi}},
                      {"rate_at_bracket", {s.critical.rate_lo, s.critical.rate_hi}}};
  write_file(spec.out + "/summary.json", j.dump(2) + "\n");
  write_file(spec.out + "/plots/growth_rate.svg",
             svg_plot("Largest growth rate about conduction", "Ra", "max growth rate",
                      {{"sigma_max", s.Ra, s.max_rate, false}, {"zero", {s.Ra.front(), s.Ra.back()}, {0.0, 0.0}, true}},
                      false, false));
  std::printf("critical Ra %.4f at k %.4f\n", s.critical.Ra_c, s.critical.k_c);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rayleigh-Benard convection and Stokes maximal-regularity laboratory"};
  app.require_subcommand(1);
  Cli c;
  struct Entry {
    const char* name;
    const char* help;
    Mode mode;
  };
  const Entry entries[] = {
      {"simulate", "run one DNS point", Mode::simulate},
      {"sweep", "run a Ra x Pr grid", Mode::sweep},
      {"certify-stokes", "maximal-regularity certification of the Stokes solvers", Mode::certify_stokes},
      {"certify-kernels", "sampled heat-kernel constants", Mode::certify_kernels},
      {"stability-scan", "locate the onset of convection", Mode::stability_scan},
  };
  std::vector<std::pair<CLI::App*, Mode>> subs;
  for (const auto& e : entries) {
    CLI::App* sub = app.add_subcommand(e.name, e.help);
    add_common(sub, c);
    subs.emplace_back(sub, e.mode);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  for (auto& [sub, mode] : subs) {
    if (!sub->parsed()) continue;
    RunSpec spec;
    try {
      spec = build_spec(*sub, c, mode);
    } catch (const ConfigError& e) {
      std::fprintf(stderr, "configuration error: %s\n", e.what());
      return kExitUsage;
    } catch (const std::exception& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
      return kExitRuntime;
    }
    try {
      switch (mode) {
        case Mode::simulate:
        case Mode::sweep:
          return do_sweep(spec);
        case Mode::certify_stokes:
          return do_certify_stokes(spec);
        case Mode::certify_kernels:
          return do_certify_kernels(spec);
        case Mode::stability_scan:
          return do_stability(spec);
      }
    } catch (const std::exception& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
      return kExitRuntime;
    }
  }
  return kExitUsage;
}
