#pragma once

#include <string>

#include <Eigen/Dense>

namespace rbc {

// strip: 1/(z(1-z)) on [0,1]; upper: 1/z on [0, zmax]; lower: 1/(1-z) on [zmin, 1].
enum class WeightKind { strip, upper, lower };

std::string to_string(WeightKind w);

struct NormReport {
  double k_value = 0.0;
  double lambda_star = 0.0;
  double sup_part = 0.0;       // sup of min(g, lambda*)
  double weighted_part = 0.0;  // int (g - lambda*)_+ w dz
  double pure_sup = 0.0;       // sup g
  double pure_weighted = 0.0;  // int g w dz, possibly infinite
  WeightKind weight_kind = WeightKind::strip;
};

// K(lambda) = lambda + int max(g - lambda, 0) w dz for the piecewise-linear
// interpolant of g on the nodes z; singular factors integrated exactly per panel.
double interpolation_functional(const Eigen::VectorXd& z, const Eigen::VectorXd& g, WeightKind w,
                                double lambda);

// min over lambda >= 0 of K(lambda).
NormReport weighted_interpolation_norm(const Eigen::VectorXd& z, const Eigen::VectorXd& g, WeightKind w);

}  // namespace rbc
