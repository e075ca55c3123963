#pragma once

#include <cstddef>
#include <functional>

namespace mumle::detail {

struct ScalarMaximum {
  double argmax = 0.0;
  double value = 0.0;
  double gradient = 0.0;
  std::size_t iterations = 0;
};

// Maximizes a unimodal f over (0, inf). Brackets the maximum in log space by
// expanding from `hint`, runs golden section until the log-width drops below
// `log_width_tol`, then, when `derivative` is set, bisects on its sign change
// to machine precision. Golden section alone stalls around sqrt(eps)
// relative accuracy because f is flat at the optimum.
ScalarMaximum maximize_positive(const std::function<double(double)>& f,
                                const std::function<double(double)>& derivative, double hint,
                                double log_width_tol, std::size_t max_iterations);

}  // namespace mumle::detail
