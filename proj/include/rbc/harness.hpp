#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rbc/boussinesq.hpp"
#include "rbc/certify.hpp"

namespace rbc::harness {

enum class Mode { simulate, sweep, certify_stokes, certify_kernels, stability_scan };
std::string to_string(Mode m);
Mode parse_mode(const std::string& s);

struct StabilityConfig {
  double ra_lo = 1500.0;
  double ra_hi = 2000.0;
  double Pr = 1.0;
  int Nz = 33;
  int scan_points = 11;  // growth-rate table across [ra_lo, ra_hi]
  bool operator==(const StabilityConfig&) const = default;
};

struct RunSpec {
  Mode mode = Mode::simulate;
  std::string out = "out";
  std::uint64_t seed = 1;
  int jobs = 1;

  SimParams sim;            // simulate uses sim.Ra and sim.Pr; sweep overrides them per point
  double amplitude = 0.01;  // initial perturbation
  int hardy_every = 0;      // steps between Hardy-ratio samples, 0 = off
  bool checkpoints = true;

  std::vector<double> ra, pr;  // sweep axes
  double min_decades = 1.5;    // fit_scaling span requirement

  certify::StokesCertConfig stokes;
  certify::KernelCertConfig kernels;
  StabilityConfig stability;

  bool operator==(const RunSpec&) const = default;
};

// INI grammar, one statement per line:
//   [section]        one of run, sim, sweep, stokes, kernels, stability
//   key = value      lists are comma separated; booleans true/false
//   # or ;           starts a comment (whole line, or after whitespace)
// Unknown sections or keys, duplicate keys and malformed values raise
// ConfigError naming the line; validation failures name section.key.
RunSpec parse_config(const std::string& text);
std::string serialize_config(const RunSpec& spec);
void validate(const RunSpec& spec);

struct SweepRow {
  int index = 0;
  double Ra = 0.0, Pr = 0.0, L = 0.0;
  int Nx = 0, Nz = 0;
  double dt = 0.0, t_avg = 0.0;
  double nu_plane_mean = 0.0, nu_volume = 0.0, nu_dissipation = 0.0, spread = 0.0;
  double energy_residual = 0.0;
  double min_T = 0.0, max_T = 0.0;
  double hardy_max = 0.0;  // NaN when not sampled
  double wall_clock = 0.0;
  std::string status = "ok";  // "ok" or an error tag
  std::string error;
  bool ok() const { return status == "ok"; }
};

struct SweepResult {
  std::vector<SweepRow> rows;
};

constexpr const char* kCsvVersion = "# rbc-sweep-csv v1";
constexpr int kSummarySchema = 1;
std::string csv_header();
std::string csv_line(const SweepRow& r);
// Parses a results.csv; every row passes validate_row or InputError names the line.
SweepResult read_csv(const std::string& path);
void validate_row(const SweepRow& r);

struct SweepOptions {
  const std::atomic<bool>* cancel = nullptr;  // workers stop taking points once set
  std::function<void(const SweepRow&)> on_row;  // called by the appender, in index order
};

// Runs the Ra x Pr grid (Ra outer) on spec.jobs workers. Rows are appended to
// <out>/results.csv in index order and flushed as soon as the prefix is complete;
// final states go to <out>/checkpoints/. Writes <out>/summary.json at the end.
// An empty spec.out keeps everything in memory.
SweepResult run_sweep(const RunSpec& spec, const SweepOptions& opts = {});

struct ScalingFit {
  double Pr = 0.0;
  int points = 0;
  double decades = 0.0;
  double exponent = 0.0;   // slope of log Nu against log Ra
  double prefactor = 0.0;  // Nu ~ prefactor Ra^exponent
  double stderr_exponent = 0.0;
  double ci95 = 0.0;  // half-width of the 95% interval of the exponent
  double r2 = 0.0;
  double exponent_bound_form = 0.0;  // slope against log(Ra ln Ra)
  double prefactor_bound_form = 0.0;
};

// Uses the ok rows (Nu = nu_volume) at the given Pr; FitError on fewer than 3
// points or a span below min_decades.
ScalingFit fit_scaling_at(const SweepResult& r, double Pr, double min_decades = 1.5);
// Same, for a result whose ok rows share a single Pr.
ScalingFit fit_scaling(const SweepResult& r, double min_decades = 1.5);

std::string summary_json(const RunSpec& spec, const SweepResult& r);

struct Physical {
  double nu = 0.0, g = 0.0, alpha = 0.0, chi = 0.0, h = 0.0;
  double T_bottom = 0.0, T_top = 0.0;
};
struct Nondimensional {
  double Ra = 0.0, Pr = 0.0;
};
// Ra = g alpha (T_bottom - T_top) h^3 / (nu chi), Pr = nu / chi.
Nondimensional dimensional_to_nondimensional(const Physical& p);

// Log-log Nu against Ra with the (Ra ln Ra)^(1/3) guide and one
// (Ra ln Ra / Pr)^(1/2) guide per Pr: plots/nu_vs_ra.{svg,csv,json} under out.
std::vector<std::string> emit_plots(const SweepResult& r, const std::string& out);

struct PlotSeries {
  std::string label;
  std::vector<double> x, y;
  bool line = false;  // polyline, otherwise markers
};
std::string svg_plot(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                     const std::vector<PlotSeries>& series, bool logx, bool logy);

struct StabilityScan {
  CriticalPoint critical;
  std::vector<double> Ra, max_rate, k_arg;
};
StabilityScan stability_scan(const StabilityConfig& c);

}  // namespace rbc::harness
