#pragma once

// Independent reference computations used to freeze expected values. Nothing
// here calls into the library.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

namespace mumle::test {

// Composite Simpson rule with `intervals` (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b,
                      int intervals = 200'000) {
  const double h = (b - a) / intervals;
  double s = f(a) + f(b);
  for (int i = 1; i < intervals; ++i) s += f(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return s * h / 3.0;
}

inline double gamma_pdf(double y, double shape, double scale) {
  if (y <= 0.0) return 0.0;
  return std::exp((shape - 1.0) * std::log(y) - y / scale - std::lgamma(shape) -
                  shape * std::log(scale));
}

// E g(Y) for Y ~ Gamma(shape, scale), by quadrature on [lower, mean + 60 sd].
inline double gamma_expectation(const std::function<double(double)>& g, double shape,
                                double scale, double lower = 0.0) {
  const double upper = shape * scale + 60.0 * std::sqrt(shape) * scale;
  return simpson([&](double y) { return y <= 0.0 ? 0.0 : g(y) * gamma_pdf(y, shape, scale); },
                 lower, upper);
}

// chi2_k = Gamma(k/2, scale 2).
inline double chi_square_expectation(const std::function<double(double)>& g, double k) {
  return gamma_expectation(g, 0.5 * k, 2.0);
}

inline double normal_cdf(double x, double mean, double sd) {
  return 0.5 * std::erfc(-(x - mean) / (sd * std::numbers::sqrt2));
}

// Two-sided Kolmogorov-Smirnov statistic of a sample against a CDF.
inline double ks_statistic(std::vector<double> xs, const std::function<double(double)>& cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

// Asymptotic 0.001-level critical value.
inline double ks_critical_001(std::size_t n) { return 1.9495 / std::sqrt(static_cast<double>(n)); }

inline bool within_se(double observed, double expected, double se, double k = 4.0) {
  return std::abs(observed - expected) <= k * se;
}

}  // namespace mumle::test
