#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "rbc/diagnostics.hpp"
#include "rbc/spectral.hpp"

namespace rbc {

struct SimParams {
  double Ra = 1e5;
  double Pr = 1.0;  // +infinity selects the inertia-free limit
  double L = 2.0;
  int Nx = 0;       // 0: default_nx(Ra)
  int Nz = 0;       // 0: default_nz(Nx)
  double dt = 0.0;  // 0: adaptive step from the CFL number
  double t_end = 1.0;
  double transient_fraction = 0.3;
  double cfl_target = 0.35;
  double cfl_limit = 0.8;  // fixed-dt runs fail above this advective CFL

  bool infinite_pr() const { return std::isinf(Pr); }
  void validate() const;
  bool operator==(const SimParams&) const = default;
};

int default_nx(double Ra);
int default_nz(int Nx);
SimParams with_defaults(SimParams p);
double max_stable_dt(const SimParams& p);

struct State {
  ModalField T;
  ModalField psi;
  ModalField omega;
  double t = 0.0;
};

State conduction_state(const SimParams& params);
State init_state(const SimParams& params, std::uint64_t seed, double amplitude);

struct StepInfo {
  double t = 0.0;        // time at the start of the step
  double dt = 0.0;
  double cfl = 0.0;      // advective CFL of the state the step started from
  double min_T = 0.0;    // extrema of T at the start of the step
  double max_T = 0.0;
  double nu_volume = 0.0;
};

// IMEX integrator in streamfunction-vorticity form, theta = T - (1 - z): BDF2 for
// diffusion, extrapolated advection and buoyancy.
// Keeps modes 0 <= n <= (Nx-1)/3 (2/3 rule); products are dealiased.
class Stepper {
 public:
  Stepper(const SimParams& params, const State& s);
  ~Stepper();
  Stepper(Stepper&&) noexcept;
  Stepper& operator=(Stepper&&) noexcept;

  // One step with the current dt. Throws StepSizeError / DivergenceError.
  StepInfo advance();
  void set_dt(double dt);
  double dt() const;
  double time() const;
  // Diagnostics of the current state without stepping (cfl is the rate CFL/dt).
  StepInfo probe();
  // Horizontal means of the current state, weight 1.
  void accumulate(TimeAverages& avg, double weight);
  State state() const;
  const SimParams& params() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

State step(const State& s, const SimParams& params);

struct Trajectory {
  SimParams params;
  TimeAverages averages;
  std::vector<double> times;        // sample times inside the averaging window
  std::vector<double> nu_series;    // instantaneous volume Nusselt at those times
  std::vector<double> hardy_series;
  std::vector<State> snapshots;
  State final_state;
  double min_T = 1.0;
  double max_T = 0.0;
  long steps = 0;
  double dt_last = 0.0;
  double plateau_drift = std::numeric_limits<double>::quiet_NaN();
};

using Observer = std::function<void(const State&, const StepInfo&)>;

struct RunOptions {
  std::uint64_t seed = 1;
  double amplitude = 0.01;
  std::vector<Observer> observers;
  int hardy_every = 0;     // steps between Hardy-ratio samples, 0 = never
  int snapshot_every = 0;  // steps between stored snapshots, 0 = never
  const State* initial = nullptr;  // start from this state instead of init_state
};

Trajectory run(const SimParams& params, const RunOptions& opts);
Trajectory run(const SimParams& params, std::uint64_t seed, double amplitude,
               const std::vector<Observer>& observers = {});

// Largest real growth rate of the linearization about conduction at wavenumber k.
double linear_growth_rate(const SimParams& params, double k, int Nz = 33);

struct CriticalPoint {
  double Ra_c = 0.0;
  double k_c = 0.0;
  double rate_lo = 0.0;  // max growth rate at the bracket ends
  double rate_hi = 0.0;
};
double max_growth_rate(const SimParams& params, double* k_arg = nullptr, int Nz = 33);
CriticalPoint find_critical_rayleigh(double Ra_lo, double Ra_hi, double Pr = 1.0, int Nz = 33);

// Versioned binary checkpoint (bit-exact round trip).
void save_checkpoint(const std::string& path, const State& s, const SimParams& p);
State load_checkpoint(const std::string& path, SimParams* p = nullptr);

}  // namespace rbc
