#pragma once

// Adaptive Simpson quadrature on finite and semi-infinite intervals.

#include <cmath>
#include <functional>
#include <stdexcept>

namespace picard {

namespace detail {

inline double simpson(double a, double fa, double b, double fb, double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adaptive_step(const std::function<double(double)>& f, double a,
                            double fa, double b, double fb, double m, double fm,
                            double whole, double tol, int depth) {
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = simpson(a, fa, m, fm, flm);
  double right = simpson(m, fm, b, fb, frm);
  double delta = left + right - whole;
  // overflowing integrands produce inf/NaN deltas; refining cannot help
  if (!std::isfinite(delta)) return left + right;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return adaptive_step(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1) +
         adaptive_step(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1);
}

}  // namespace detail

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double rel_tol = 1e-10, int max_depth = 40) {
  if (!(b > a)) return 0.0;
  double m = 0.5 * (a + b);
  double fa = f(a), fb = f(b), fm = f(m);
  double whole = detail::simpson(a, fa, b, fb, fm);
  if (!std::isfinite(whole)) return whole;
  double scale = std::abs(whole) > 0 ? std::abs(whole) : 1.0;
  return detail::adaptive_step(f, a, fa, b, fb, m, fm, whole, rel_tol * scale,
                               max_depth);
}

// Integral over [a, inf): sum over doubling windows until the increment is
// negligible relative to the accumulated total.  Throws when the windows
// fail to stabilise (divergent tail).
inline double integrate_to_infinity(const std::function<double(double)>& f,
                                    double a, double rel_tol = 1e-8,
                                    int max_windows = 60) {
  double total = 0.0;
  double lo = a;
  double width = 1.0;
  int quiet = 0;
  for (int w = 0; w < max_windows; ++w) {
    double hi = lo + width;
    double piece = integrate(f, lo, hi, rel_tol * 0.1);
    total += piece;
    if (!std::isfinite(total))
      throw std::runtime_error("integrate_to_infinity: divergent tail");
    if (std::abs(piece) <= rel_tol * std::max(std::abs(total), 1e-300)) {
      if (++quiet >= 2) return total;
    } else {
      quiet = 0;
    }
    lo = hi;
    width *= 2.0;
  }
  throw std::runtime_error("integrate_to_infinity: tail failed to stabilise");
}

}  // namespace picard
