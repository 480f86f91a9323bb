#pragma once

#include <functional>
#include <stdexcept>
#include <string>

namespace latcorr {

/// Raised when an iterative method fails; what() carries the diagnostics.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MinimizeResult {
  double x = 0.0;
  double fx = 0.0;
  int iterations = 0;
  int evaluations = 0;
};

/// Brent's golden-section / parabolic-interpolation minimizer on [lo, hi].
/// Stops when the bracket around the minimizer is within 2 * (sqrt(eps) |x| + tol / 3),
/// the same stopping rule as R's optimize(). Throws NumericalError after `max_iter`.
MinimizeResult brent_minimize(const std::function<double(double)>& f, double lo, double hi,
                              double tol, int max_iter = 200);

}  // namespace latcorr
