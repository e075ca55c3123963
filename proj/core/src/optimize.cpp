#include "optimize.hpp"

#include <cmath>
#include <string>

#include "mumle/errors.hpp"

namespace mumle::detail {
namespace {

constexpr double kInvPhi = 0.6180339887498949;  // (sqrt(5) - 1) / 2
constexpr int kMaxExpansions = 60;

double checked(const std::function<double(double)>& f, double u) {
  const double v = f(std::exp(u));
  if (std::isnan(v) || v == INFINITY) {
    throw NumericError("objective is not finite at psi = " + std::to_string(std::exp(u)));
  }
  return v;
}

}  // namespace

ScalarMaximum maximize_positive(const std::function<double(double)>& f,
                                const std::function<double(double)>& derivative, double hint,
                                double log_width_tol, std::size_t max_iterations) {
  if (!(hint > 0.0) || !std::isfinite(hint)) {
    throw DomainError("optimizer hint must be a finite positive number");
  }
  ScalarMaximum out;

  // Bracket: a < b < c in log psi with f(b) >= f(a), f(c).
  double step = std::log(2.0);
  double b = std::log(hint);
  double a = b - step;
  double c = b + step;
  double fa = checked(f, a);
  double fb = checked(f, b);
  double fc = checked(f, c);
  int expansions = 0;
  while (!(fb >= fa && fb >= fc)) {
    if (++expansions > kMaxExpansions) {
      throw ConvergenceError("no interior maximum found within 2^" +
                             std::to_string(kMaxExpansions) + " of the hint " +
                             std::to_string(hint) + " (last bracket [" +
                             std::to_string(std::exp(a)) + ", " + std::to_string(std::exp(c)) +
                             "])");
    }
    step *= 2.0;
    if (fa > fc) {
      c = b, fc = fb;
      b = a, fb = fa;
      a = b - step, fa = checked(f, a);
    } else {
      a = b, fa = fb;
      b = c, fb = fc;
      c = b + step, fc = checked(f, c);
    }
    ++out.iterations;
  }

  // Golden section on [a, c].
  double x1 = c - kInvPhi * (c - a);
  double x2 = a + kInvPhi * (c - a);
  double f1 = checked(f, x1);
  double f2 = checked(f, x2);
  while (c - a > log_width_tol) {
    if (++out.iterations > max_iterations) {
      throw ConvergenceError("golden section did not reach width " +
                             std::to_string(log_width_tol) + " within " +
                             std::to_string(max_iterations) + " iterations");
    }
    if (f1 >= f2) {
      c = x2;
      x2 = x1, f2 = f1;
      x1 = c - kInvPhi * (c - a), f1 = checked(f, x1);
    } else {
      a = x1;
      x1 = x2, f1 = f2;
      x2 = a + kInvPhi * (c - a), f2 = checked(f, x2);
    }
    if (x1 >= x2) break;
  }
  double best = 0.5 * (a + c);
  out.argmax = std::exp(best);

  if (derivative) {
    // Widen the golden bracket until the derivative changes sign across it.
    double lo = std::exp(a);
    double hi = std::exp(c);
    double widen = 1e-10;
    bool bracketed = false;
    for (int k = 0; k < kMaxExpansions; ++k) {
      if (derivative(lo) > 0.0 && derivative(hi) < 0.0) {
        bracketed = true;
        break;
      }
      lo /= 1.0 + widen;
      hi *= 1.0 + widen;
      widen *= 2.0;
    }
    if (bracketed) {
      for (std::size_t it = 0; it < 256; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (!(mid > lo && mid < hi)) break;
        const double d = derivative(mid);
        if (std::isnan(d)) throw NumericError("objective derivative is NaN");
        ++out.iterations;
        if (d == 0.0) {
          lo = hi = mid;
          break;
        }
        (d > 0.0 ? lo : hi) = mid;
      }
      out.argmax = std::abs(derivative(lo)) <= std::abs(derivative(hi)) ? lo : hi;
    }
    out.gradient = derivative(out.argmax);
  } else {
    const double h = 1e-5 * (1.0 + out.argmax);
    const double lo = out.argmax > h ? out.argmax - h : 0.5 * out.argmax;
    out.gradient = (f(out.argmax + h) - f(lo)) / (out.argmax + h - lo);
  }
  out.value = f(out.argmax);
  return out;
}

}  // namespace mumle::detail
