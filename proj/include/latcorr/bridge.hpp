#pragma once

// Bridge functions F mapping a latent correlation r to E[tau-a] for each pair case,
// and their inversion by bounded scalar minimization (the "ORG" method).

#include <array>
#include <cmath>

#include "latcorr/types.hpp"

namespace latcorr {

/// Search interval and tolerance of the ORG inversion.
inline constexpr double kOrgLowerBound = -0.999;
inline constexpr double kOrgUpperBound = 0.999;
inline constexpr double kOrgTolerance = 1e-8;

/// Zero, one or two finite normal-scale thresholds, in the bridge function's role order.
class Thresholds {
 public:
  Thresholds() = default;
  explicit Thresholds(double first);
  Thresholds(double first, double second);

  int size() const noexcept { return size_; }
  double operator[](int i) const noexcept { return values_[static_cast<std::size_t>(i)]; }

 private:
  std::array<double, 2> values_{};
  int size_ = 0;
};

/// F(r; deltas) for the given case. F(0) = 0, strictly increasing in r, |F| <= 1.
/// Throws std::domain_error if |r| > 1 or the threshold count does not match the case.
double bridge_forward(CaseKind c, double r, const Thresholds& deltas);

struct OrgResult {
  double r = 0.0;
  /// tau_hat lies outside F's range on the search interval; r is that interval end.
  bool saturated = false;
  int evaluations = 0;
};

/// argmin over r in [-0.999, 0.999] of (F(r) - tau_hat)^2.
/// Throws NumericalError (with diagnostics) if the minimizer does not converge.
OrgResult bridge_inverse_org(CaseKind c, double tau_hat, const Thresholds& deltas);

/// sin(pi * tau / 2), the closed-form inverse for two continuous variables.
double cc_inverse_closed(double tau);

/// Phi^{-1}(pi0). Infinite (degenerate) at pi0 = 0 or 1.
double delta_from_zero_proportion(Probability pi0);

inline bool is_degenerate_threshold(double delta) noexcept { return !std::isfinite(delta); }

}  // namespace latcorr
