#include "latcorr/bridge.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "latcorr/mvn.hpp"
#include "latcorr/optimize.hpp"

namespace latcorr {

namespace {

constexpr double kS = 0.70710678118654752440;  // 1/sqrt(2)

SmallCorrMatrix sigma3(double r) {
  const double m[9] = {1.0, kS, r * kS,  //
                       kS, 1.0, r,       //
                       r * kS, r, 1.0};
  return SmallCorrMatrix(3, m);
}

SmallCorrMatrix sigma3a(double r) {
  const double m[9] = {1.0, -r, kS,        //
                       -r, 1.0, -r * kS,   //
                       kS, -r * kS, 1.0};
  return SmallCorrMatrix(3, m);
}

SmallCorrMatrix sigma3b(double r) {
  const double m[9] = {1.0, 0.0, -kS,       //
                       0.0, 1.0, -r * kS,   //
                       -kS, -r * kS, 1.0};
  return SmallCorrMatrix(3, m);
}

SmallCorrMatrix sigma4a(double r) {
  const double m[16] = {1.0, 0.0, kS, -r * kS,      //
                        0.0, 1.0, -r * kS, kS,      //
                        kS, -r * kS, 1.0, -r,       //
                        -r * kS, kS, -r, 1.0};
  return SmallCorrMatrix(4, m);
}

SmallCorrMatrix sigma4b(double r) {
  const double m[16] = {1.0, r, kS, r * kS,      //
                        r, 1.0, r * kS, kS,      //
                        kS, r * kS, 1.0, r,      //
                        r * kS, kS, r, 1.0};
  return SmallCorrMatrix(4, m);
}

double phi(double x) { return std_normal_cdf(x); }

void check_args(CaseKind c, double r, const Thresholds& d) {
  if (!(std::abs(r) <= 1.0)) throw std::domain_error("bridge_forward: |r| must be <= 1");
  if (d.size() != threshold_count(c)) {
    std::ostringstream msg;
    msg << "bridge_forward: case " << to_string(c) << " takes " << threshold_count(c)
        << " threshold(s), got " << d.size();
    throw std::domain_error(msg.str());
  }
}

}  // namespace

Thresholds::Thresholds(double first) : values_{first, 0.0}, size_(1) {
  if (!std::isfinite(first)) throw std::domain_error("Thresholds: non-finite threshold");
}

Thresholds::Thresholds(double first, double second) : values_{first, second}, size_(2) {
  if (!std::isfinite(first) || !std::isfinite(second)) {
    throw std::domain_error("Thresholds: non-finite threshold");
  }
}

double bridge_forward(CaseKind c, double r, const Thresholds& d) {
  check_args(c, r, d);
  switch (c) {
    case CaseKind::CC:
      return 2.0 / std::numbers::pi * std::asin(r);
    case CaseKind::BB:
      return 2.0 * (bvn_cdf(d[0], d[1], r) - phi(d[0]) * phi(d[1]));
    case CaseKind::BC:
      return 4.0 * bvn_cdf(d[0], 0.0, r * kS) - 2.0 * phi(d[0]);
    case CaseKind::TB: {
      const std::array<double, 3> upper{-d[0], d[1], 0.0};
      return 2.0 * (1.0 - phi(d[0])) * phi(d[1]) - 2.0 * tvn_cdf(upper, sigma3a(r)) -
             2.0 * tvn_cdf(upper, sigma3b(r));
    }
    case CaseKind::TC: {
      const std::array<double, 3> upper{-d[0], 0.0, 0.0};
      return -2.0 * bvn_cdf(-d[0], 0.0, kS) + 4.0 * tvn_cdf(upper, sigma3(r));
    }
    case CaseKind::TT: {
      const std::array<double, 4> upper{-d[0], -d[1], 0.0, 0.0};
      return -2.0 * qvn_cdf(upper, sigma4a(r)) + 2.0 * qvn_cdf(upper, sigma4b(r));
    }
  }
  throw std::domain_error("bridge_forward: unknown case");
}

OrgResult bridge_inverse_org(CaseKind c, double tau_hat, const Thresholds& deltas) {
  if (!(std::abs(tau_hat) <= 1.0)) {
    throw std::domain_error("bridge_inverse_org: |tau_hat| must be <= 1");
  }
  check_args(c, 0.0, deltas);
  auto objective = [&](double r) {
    const double diff = bridge_forward(c, r, deltas) - tau_hat;
    return diff * diff;
  };

  // F is increasing with F(0) = 0. A tau_hat beyond F at the interval end makes the
  // objective monotone on the whole interval, so the argmin is that end. Deciding this
  // before minimizing matters where F is flat to machine precision near the end.
  if (tau_hat > 0.0 && bridge_forward(c, kOrgUpperBound, deltas) <= tau_hat) {
    return {kOrgUpperBound, true, 1};
  }
  if (tau_hat < 0.0 && bridge_forward(c, kOrgLowerBound, deltas) >= tau_hat) {
    return {kOrgLowerBound, true, 1};
  }

  MinimizeResult m;
  try {
    m = brent_minimize(objective, kOrgLowerBound, kOrgUpperBound, kOrgTolerance);
  } catch (const NumericalError& e) {
    std::ostringstream msg;
    msg << e.what() << " (case " << to_string(c) << ", tau_hat " << tau_hat;
    for (int i = 0; i < deltas.size(); ++i) msg << ", delta" << i + 1 << " " << deltas[i];
    msg << ")";
    throw NumericalError(msg.str());
  }

  return {m.x, false, m.evaluations + (tau_hat != 0.0 ? 1 : 0)};
}

double cc_inverse_closed(double tau) {
  if (!(std::abs(tau) <= 1.0)) throw std::domain_error("cc_inverse_closed: |tau| must be <= 1");
  return std::sin(std::numbers::pi * tau / 2.0);
}

double delta_from_zero_proportion(Probability pi0) { return std_normal_quantile(pi0.value()); }

}  // namespace latcorr
