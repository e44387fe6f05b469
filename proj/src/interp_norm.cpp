#include "rbc/interp_norm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "rbc/errors.hpp"

namespace rbc {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

// int_a^b l(s)/s ds for l linear with l(a) = la, l(b) = lb, 0 <= a < b.
double panel_over_s(double a, double b, double la, double lb) {
  if ((la == 0.0 && lb == 0.0) || !(b > a)) return 0.0;  // crossings can land on a node
  double beta = (lb - la) / (b - a);
  if (a == 0.0) return la > 0.0 ? inf : beta * b;
  return (la - beta * a) * std::log(b / a) + beta * (b - a);
}

double weighted_panel(WeightKind w, double a, double b, double la, double lb) {
  double v = 0.0;
  if (w == WeightKind::strip || w == WeightKind::upper) v += panel_over_s(a, b, la, lb);
  if (w == WeightKind::strip || w == WeightKind::lower) v += panel_over_s(1.0 - b, 1.0 - a, lb, la);
  return v;
}

void validate(const Eigen::VectorXd& z, const Eigen::VectorXd& g, WeightKind w) {
  if (z.size() != g.size() || z.size() < 2) throw InputError("interpolation norm: profile and nodes mismatch");
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    if (!std::isfinite(g[i])) throw InputError("interpolation norm: non-finite profile entry");
    if (g[i] < 0.0) throw InputError("interpolation norm: negative profile entry at index " + std::to_string(i));
    if (i > 0 && !(z[i] > z[i - 1])) throw InputError("interpolation norm: nodes must increase");
  }
  bool lower_ok = w == WeightKind::lower || z[0] >= 0.0;
  bool upper_ok = w == WeightKind::upper || z[z.size() - 1] <= 1.0;
  if (!lower_ok || !upper_ok) throw InputError("interpolation norm: nodes outside the weight's domain");
}

// Values at singular endpoints force lambda >= g there.
double lambda_floor(const Eigen::VectorXd& z, const Eigen::VectorXd& g, WeightKind w) {
  double lo = 0.0;
  if ((w == WeightKind::strip || w == WeightKind::upper) && z[0] == 0.0) lo = std::max(lo, g[0]);
  if ((w == WeightKind::strip || w == WeightKind::lower) && z[z.size() - 1] == 1.0)
    lo = std::max(lo, g[g.size() - 1]);
  return lo;
}

double excess_integral(const Eigen::VectorXd& z, const Eigen::VectorXd& g, WeightKind w, double lambda) {
  double total = 0.0;
  for (Eigen::Index i = 0; i + 1 < z.size(); ++i) {
    double a = z[i], b = z[i + 1];
    double ga = g[i] - lambda, gb = g[i + 1] - lambda;
    if (ga <= 0.0 && gb <= 0.0) continue;
    if (ga >= 0.0 && gb >= 0.0) {
      total += weighted_panel(w, a, b, ga, gb);
    } else {
      double c = a + (b - a) * ga / (ga - gb);  // zero crossing
      if (ga > 0.0)
        total += weighted_panel(w, a, c, ga, 0.0);
      else
        total += weighted_panel(w, c, b, 0.0, gb);
    }
    if (total == inf) return inf;
  }
  return total;
}

}  // namespace

std::string to_string(WeightKind w) {
  switch (w) {
    case WeightKind::strip: return "strip";
    case WeightKind::upper: return "upper";
    case WeightKind::lower: return "lower";
  }
  return "?";
}

double interpolation_functional(const Eigen::VectorXd& z, const Eigen::VectorXd& g, WeightKind w, double lambda) {
  validate(z, g, w);
  return lambda + excess_integral(z, g, w, lambda);
}

NormReport weighted_interpolation_norm(const Eigen::VectorXd& z, const Eigen::VectorXd& g, WeightKind w) {
  validate(z, g, w);
  NormReport r;
  r.weight_kind = w;
  const double gmax = g.maxCoeff();
  r.pure_sup = gmax;
  r.pure_weighted = excess_integral(z, g, w, 0.0);
  if (gmax == 0.0) return r;

  const double lo = lambda_floor(z, g, w);
  auto K = [&](double lam) { return lam + excess_integral(z, g, w, lam); };

  // K is convex and piecewise smooth with breakpoints at node values: scan
  // those, then refine by golden section between the neighbours of the best.
  std::vector<double> cand{lo, gmax};
  for (Eigen::Index i = 0; i < g.size(); ++i)
    if (g[i] > lo && g[i] < gmax) cand.push_back(g[i]);
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
  std::size_t best = 0;
  double kbest = inf;
  for (std::size_t i = 0; i < cand.size(); ++i) {
    double k = K(cand[i]);
    if (k < kbest) {
      kbest = k;
      best = i;
    }
  }
  double a = cand[best > 0 ? best - 1 : 0];
  double b = cand[std::min(best + 1, cand.size() - 1)];
  double lam = cand[best];
  if (b > a) {
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - phi * (b - a), d = a + phi * (b - a);
    double kc = K(c), kd = K(d);
    for (int it = 0; it < 200 && (b - a) > 1e-15 * gmax; ++it) {
      if (kc <= kd) {
        b = d;
        d = c;
        kd = kc;
        c = b - phi * (b - a);
        kc = K(c);
      } else {
        a = c;
        c = d;
        kc = kd;
        d = a + phi * (b - a);
        kd = K(d);
      }
    }
    double mid = 0.5 * (a + b);
    double kmid = K(mid);
    if (kmid < kbest) {
      kbest = kmid;
      lam = mid;
    }
  }
  r.lambda_star = lam;
  r.k_value = kbest;
  r.sup_part = lam;
  r.weighted_part = kbest - lam;
  return r;
}

}  // namespace rbc
