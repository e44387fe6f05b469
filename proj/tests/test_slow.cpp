// Default-resolution runs; about a minute and a half on one core.
#include <doctest.h>

#include "rbc/boussinesq.hpp"

using namespace rbc;

TEST_CASE("two seeds at Ra = 1e5 reach the same Nusselt number") {
  SimParams p;
  p.Ra = 1e5;
  p.Pr = 1.0;
  const double a = nusselt_volume(run(p, 1, 0.01).averages);
  const double b = nusselt_volume(run(p, 2, 0.05).averages);
  CAPTURE(a);
  CAPTURE(b);
  CHECK(std::abs(a - b) / std::max(a, b) < 0.05);
  CHECK(a > 1.5);
}
