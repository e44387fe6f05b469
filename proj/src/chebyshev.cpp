#include "rbc/chebyshev.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rbc::cheb {

namespace {

constexpr double pi = std::numbers::pi;

void require_points(int n) {
  if (n < 2) throw std::invalid_argument("Chebyshev grid needs at least 2 points");
}

// Unit-interval position of node j out of N intervals, computed so that both
// ends are exact and near-wall spacing keeps full relative precision.
double unit_node(int j, int N) {
  if (2 * j <= N) {
    double s = std::sin(pi * j / (2.0 * N));
    return s * s;
  }
  double s = std::sin(pi * (N - j) / (2.0 * N));
  return 1.0 - s * s;
}

}  // namespace

Eigen::VectorXd nodes(int n, double a, double b) {
  require_points(n);
  const int N = n - 1;
  Eigen::VectorXd z(n);
  for (int j = 0; j <= N; ++j) z[j] = a + (b - a) * unit_node(j, N);
  z[0] = a;
  z[N] = b;
  return z;
}

Eigen::MatrixXd diff_matrix(int n, double a, double b) {
  require_points(n);
  const int N = n - 1;
  // x_j = cos(pi j / N) on [-1, 1], decreasing in j; z = a + (b-a)(1-x)/2.
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
  auto c = [N](int j) { return (j == 0 || j == N) ? 2.0 : 1.0; };
  for (int i = 0; i <= N; ++i) {
    double rowsum = 0.0;
    for (int j = 0; j <= N; ++j) {
      if (i == j) continue;
      // x_i - x_j written with sines to avoid cancellation
      double dx = 2.0 * std::sin(pi * (i + j) / (2.0 * N)) * std::sin(pi * (j - i) / (2.0 * N));
      double sgn = ((i + j) % 2 == 0) ? 1.0 : -1.0;
      D(i, j) = c(i) / c(j) * sgn / dx;
      rowsum += D(i, j);
    }
    D(i, i) = -rowsum;
  }
  return D * (-2.0 / (b - a));
}

Eigen::VectorXd cc_weights(int n, double a, double b) {
  require_points(n);
  const int N = n - 1;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
  if (N == 1) {
    w.setConstant(1.0);
  } else {
    for (int j = 0; j <= N; ++j) {
      double theta = pi * j / N;
      double v = 1.0;
      if (N % 2 == 0) {
        if (j == 0 || j == N) {
          w[j] = 1.0 / (double(N) * N - 1.0);
          continue;
        }
        for (int k = 1; k < N / 2; ++k) v -= 2.0 * std::cos(2.0 * k * theta) / (4.0 * k * k - 1.0);
        v -= std::cos(N * theta) / (double(N) * N - 1.0);
      } else {
        if (j == 0 || j == N) {
          w[j] = 1.0 / (double(N) * N);
          continue;
        }
        for (int k = 1; k <= (N - 1) / 2; ++k) v -= 2.0 * std::cos(2.0 * k * theta) / (4.0 * k * k - 1.0);
      }
      w[j] = 2.0 * v / N;
    }
  }
  return w * ((b - a) / 2.0);
}

Eigen::MatrixXd interp_matrix(int n, double a, double b, const Eigen::VectorXd& targets) {
  Eigen::VectorXd z = nodes(n, a, b);
  Eigen::VectorXd bw(n);
  for (int j = 0; j < n; ++j) {
    bw[j] = (j % 2 == 0) ? 1.0 : -1.0;
    if (j == 0 || j == n - 1) bw[j] *= 0.5;
  }
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(targets.size(), n);
  for (Eigen::Index t = 0; t < targets.size(); ++t) {
    double x = targets[t];
    int exact = -1;
    for (int j = 0; j < n; ++j)
      if (x == z[j]) exact = j;
    if (exact >= 0) {
      P(t, exact) = 1.0;
      continue;
    }
    double denom = 0.0;
    for (int j = 0; j < n; ++j) {
      double q = bw[j] / (x - z[j]);
      P(t, j) = q;
      denom += q;
    }
    P.row(t) /= denom;
  }
  return P;
}

double interpolate(const Eigen::VectorXd& values, double a, double b, double z) {
  Eigen::VectorXd t(1);
  t[0] = z;
  return (interp_matrix(static_cast<int>(values.size()), a, b, t) * values)(0);
}

}  // namespace rbc::cheb
