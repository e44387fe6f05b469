#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rbc/interp_norm.hpp"
#include "rbc/spectral.hpp"

namespace rbc {

struct State;
struct SimParams;

// Time-integrated horizontal means on the vertical grid. Profiles are stored
// as integrals over the window; the accessors divide by the window length.
struct TimeAverages {
  Eigen::VectorXd z;            // vertical nodes
  Eigen::VectorXd quad_weights;
  Eigen::VectorXd sum_Tw;       // <T u^z>'
  Eigen::VectorXd sum_abs_w;    // <|u^z|>'
  Eigen::VectorXd sum_gradT2;   // <|grad T|^2>'
  Eigen::VectorXd sum_gradu2;   // <|grad u|^2>'
  Eigen::VectorXd sum_dzT;      // <dT/dz>'
  double weight = 0.0;          // accumulated time
  long count = 0;
  double t_begin = 0.0;
  double t_end = 0.0;

  TimeAverages() = default;
  explicit TimeAverages(const Grid& g);
  bool empty() const { return count == 0 || weight <= 0.0; }

  Eigen::VectorXd Tw() const;
  Eigen::VectorXd abs_w() const;
  Eigen::VectorXd gradT2() const;
  Eigen::VectorXd gradu2() const;
  Eigen::VectorXd dzT() const;
  Eigen::VectorXd nusselt_profile() const;  // <T u^z - dT/dz>'
};

// Instantaneous horizontal means for a single state (weight 1).
TimeAverages instantaneous_averages(const State& s);

struct NusseltReport {
  Eigen::VectorXd nu_plane_profile;
  double nu_plane_mean = 0.0;
  double nu_volume = 0.0;
  double nu_dissipation = 0.0;
  double spread = 0.0;          // max pairwise relative discrepancy of the three values
  double plane_flatness = 0.0;  // max |profile - mean| / mean
};

double nusselt_plane(const TimeAverages& avg, double z);
double nusselt_volume(const TimeAverages& avg);
double nusselt_dissipation(const TimeAverages& avg);
NusseltReport nusselt_report(const TimeAverages& avg);

double energy_balance_residual(const TimeAverages& avg, const SimParams& params);

struct BoundaryLayerBound {
  double delta = 0.0;
  double with_T = 0.0;    // (1/delta) int_0^delta <T u^z> dz + 1/delta
  double with_abs = 0.0;  // (1/delta) int_0^delta <|u^z|> dz + 1/delta
};
BoundaryLayerBound boundary_layer_bound(const TimeAverages& avg, double delta);

double delta_choice(double Ra, double Pr, double Nu);

enum class BoundBranch { high_pr, low_pr };
std::string to_string(BoundBranch b);
BoundBranch classify_branch(double Ra, double Pr);
// (Ra ln Ra)^(1/3) on the high-Pr branch, (Ra ln Ra / Pr)^(1/2) otherwise.
double bound_shape(double Ra, double Pr);

struct BoundPoint {
  double Ra = 0.0;
  double Pr = 0.0;
  double Nu = 0.0;
};

struct BoundCheckReport {
  double C = 0.0;
  std::size_t binding_index = 0;
  std::vector<BoundBranch> branches;
  std::vector<double> C_per_point;
};

BoundCheckReport bound_check(const std::vector<BoundPoint>& points);

double hardy_nonlinearity_ratio(const State& s);

// Integral of a nonnegative nodal profile against a singular weight, using the
// same panel-exact rule as the interpolation norm.
double weighted_integral(const Eigen::VectorXd& z, const Eigen::VectorXd& g, WeightKind w);

// Running-mean drift over the last half of a sampled series.
double plateau_drift(const std::vector<double>& values);

// JSON serialization with fixed field names.
std::string to_json(const NusseltReport& r);
std::string to_json(const NormReport& r);

}  // namespace rbc
