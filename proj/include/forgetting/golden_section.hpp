#pragma once

#include <cmath>
#include <utility>

namespace forgetting {

struct ScalarMinimum {
  double x;
  double fx;
};

// Golden-section search for a minimum of f on [a, b]. Stops once the bracket
// is narrower than tol and returns the best point evaluated in the final
// bracket (interior points or midpoint).
template <typename F>
ScalarMinimum golden_section_minimize(F&& f, double a, double b, double tol) {
  static const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  if (b < a) std::swap(a, b);
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a >= tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
    // Rounding can collapse the interior points once the bracket nears
    // machine precision.
    if (!(a < c && c < b) || !(a < d && d < b)) break;
  }
  const double mid = 0.5 * (a + b);
  ScalarMinimum best{mid, f(mid)};
  if (fc < best.fx) best = {c, fc};
  if (fd < best.fx) best = {d, fd};
  return best;
}

}  // namespace forgetting
