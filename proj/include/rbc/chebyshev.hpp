#pragma once

#include <Eigen/Dense>

namespace rbc::cheb {

// Chebyshev-Gauss-Lobatto points on [a, b], increasing, n >= 2 points.
Eigen::VectorXd nodes(int n, double a = 0.0, double b = 1.0);

// First-derivative collocation matrix on the nodes above.
Eigen::MatrixXd diff_matrix(int n, double a = 0.0, double b = 1.0);

// Clenshaw-Curtis weights: sum_j w_j f(z_j) ~ int_a^b f dz.
Eigen::VectorXd cc_weights(int n, double a = 0.0, double b = 1.0);

// Barycentric interpolation from the CGL nodes of [a, b] to arbitrary points.
Eigen::MatrixXd interp_matrix(int n, double a, double b, const Eigen::VectorXd& targets);

double interpolate(const Eigen::VectorXd& values, double a, double b, double z);

}  // namespace rbc::cheb
