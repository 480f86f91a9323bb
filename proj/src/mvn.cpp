#include "latcorr/mvn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/erf.hpp>

namespace latcorr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Absolute error target and bisection depth of the Plackett integrals over [0, 1].
constexpr double kQuadTolerance = 1e-14;
constexpr unsigned kQuadMaxDepth = 12;

// Conditional variances below this are treated as a point mass.
constexpr double kDegenerateVariance = 1e-14;

constexpr double kInvSqrt2 = 0.70710678118654752440;

double phi(double x) noexcept { return 0.5 * std::erfc(-x * kInvSqrt2); }

double pdf2(double x, double y, double rho) noexcept {
  const double one_minus = (1.0 - rho) * (1.0 + rho);
  const double q = (x * x - 2.0 * rho * x * y + y * y) / one_minus;
  return std::exp(-0.5 * q) / (kTwoPi * std::sqrt(one_minus));
}

// Adaptive Gauss-Kronrod (7/15) on [a, b] with an absolute error target shared out in
// proportion to panel length. Boost's own adaptive driver only has a relative target,
// which cannot be met when the integral is near zero and then recurses to full depth.
template <class F>
double integrate_gk(const F& f, double a, double b, double tol, unsigned depth) {
  using gk = boost::math::quadrature::gauss_kronrod<double, 15>;
  double err = 0.0;
  const double est = gk::integrate(f, a, b, 0, 0.0, &err);
  if (depth == 0 || err <= tol) return est;
  const double mid = 0.5 * (a + b);
  return integrate_gk(f, a, mid, 0.5 * tol, depth - 1) +
         integrate_gk(f, mid, b, 0.5 * tol, depth - 1);
}

// Genz's BVND (Drezner-Wesolowsky with Gauss-Legendre refinements):
// upper orthant probability P(X > dh, Y > dk). Finite arguments, |r| <= 1.
template <int N>
double gl_sum_low_rho(double hk, double hs, double asr) {
  using rule = boost::math::quadrature::gauss<double, N>;
  const auto& x = rule::abscissa();
  const auto& w = rule::weights();
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double sn = std::sin(asr * (1.0 - x[i]) / 2.0);
    sum += w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
    sn = std::sin(asr * (1.0 + x[i]) / 2.0);
    sum += w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
  }
  // boost's rule integrates over [-1, 1]; the half-node sum above carries weights of
  // the full rule, matching Genz's tabulation.
  return sum;
}

double bvnd(double dh, double dk, double r) {
  using rule20 = boost::math::quadrature::gauss<double, 20>;
  double h = dh;
  double k = dk;
  double hk = h * k;
  double bvn = 0.0;

  if (std::abs(r) < 0.925) {
    const double hs = (h * h + k * k) / 2.0;
    const double asr = std::asin(r);
    double sum;
    if (std::abs(r) < 0.3) {
      sum = gl_sum_low_rho<6>(hk, hs, asr);
    } else if (std::abs(r) < 0.75) {
      sum = gl_sum_low_rho<12>(hk, hs, asr);
    } else {
      sum = gl_sum_low_rho<20>(hk, hs, asr);
    }
    return sum * asr / (2.0 * kTwoPi) + phi(-h) * phi(-k);
  }

  if (r < 0.0) {
    k = -k;
    hk = -hk;
  }
  if (std::abs(r) < 1.0) {
    const double as = (1.0 - r) * (1.0 + r);
    double a = std::sqrt(as);
    const double bs = (h - k) * (h - k);
    const double c = (4.0 - hk) / 8.0;
    const double d = (12.0 - hk) / 16.0;
    bvn = a * std::exp(-(bs / as + hk) / 2.0) *
          (1.0 - c * (bs - as) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as * as / 5.0);
    if (hk > -160.0) {
      const double b = std::sqrt(bs);
      bvn -= std::exp(-hk / 2.0) * std::sqrt(kTwoPi) * phi(-b / a) * b *
             (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
    }
    a /= 2.0;
    const auto& x = rule20::abscissa();
    const auto& w = rule20::weights();
    for (std::size_t i = 0; i < x.size(); ++i) {
      for (const double sgn : {1.0, -1.0}) {
        const double xs = (a * (sgn * x[i] + 1.0)) * (a * (sgn * x[i] + 1.0));
        const double rs = std::sqrt(1.0 - xs);
        const double asr = -(bs / xs + hk) / 2.0;
        if (asr > -100.0) {
          bvn += a * w[i] * std::exp(asr) *
                 (std::exp(-hk * (1.0 - rs) / (2.0 * (1.0 + rs))) / rs -
                  (1.0 + c * xs * (1.0 + d * xs)));
        }
      }
    }
    bvn = -bvn / kTwoPi;
  }
  if (r > 0.0) {
    bvn += phi(-std::max(h, k));
  } else {
    bvn = -bvn;
    if (k > h) {
      if (h < 0.0) {
        bvn += phi(k) - phi(h);
      } else {
        bvn += phi(-h) - phi(-k);
      }
    }
  }
  return bvn;
}

double clamp01(double p) noexcept { return std::clamp(p, 0.0, 1.0); }

double bvn_unchecked(double a, double b, double rho) {
  if (a == -kInf || b == -kInf) return 0.0;
  if (a == kInf) return phi(b);
  if (b == kInf) return phi(a);
  return clamp01(bvnd(-a, -b, std::clamp(rho, -1.0, 1.0)));
}

// Dense working copy of a correlation matrix; no validation.
struct Corr {
  std::size_t dim = 0;
  std::array<double, 16> a{};
  double operator()(std::size_t i, std::size_t j) const noexcept { return a[i * 4 + j]; }
  double& at(std::size_t i, std::size_t j) noexcept { return a[i * 4 + j]; }
};

double cdf_impl(std::array<double, 4> h, const Corr& r);

// Probability that a normal variable with the given mean and variance is <= upper.
double conditional_cdf1(double upper, double mean, double var) noexcept {
  if (var <= kDegenerateVariance) return upper >= mean ? 1.0 : 0.0;
  return phi((upper - mean) / std::sqrt(var));
}

// Phi_3 by Plackett's identity: interpolate the correlation of one variable with the
// other two from zero to its actual value and integrate the derivative in t.
double tvn_plackett(const std::array<double, 3>& h, const Corr& r) {
  // Keep the pair with the largest |correlation| fixed.
  std::size_t i = 0, j = 1, k = 2;
  {
    const double r01 = std::abs(r(0, 1)), r02 = std::abs(r(0, 2)), r12 = std::abs(r(1, 2));
    if (r01 >= r02 && r01 >= r12) {
      i = 2, j = 0, k = 1;
    } else if (r02 >= r01 && r02 >= r12) {
      i = 1, j = 0, k = 2;
    }
  }
  const double rij = r(i, j), rik = r(i, k), rjk = r(j, k);
  const double hi = h[i], hj = h[j], hk = h[k];

  const double base = phi(hi) * bvn_unchecked(hj, hk, rjk);
  if (rij == 0.0 && rik == 0.0) return base;

  auto integrand = [&](double t) {
    const double a = t * rij;
    const double b = t * rik;
    double value = 0.0;
    if (rij != 0.0) {
      // x_i = h_i, x_j = h_j; conditional law of x_k.
      const double det = (1.0 - a) * (1.0 + a);
      const double bi = (b - a * rjk) / det;
      const double bj = (rjk - a * b) / det;
      const double mean = bi * hi + bj * hj;
      const double var = 1.0 - b * bi - rjk * bj;
      value += rij * pdf2(hi, hj, a) * conditional_cdf1(hk, mean, var);
    }
    if (rik != 0.0) {
      const double det = (1.0 - b) * (1.0 + b);
      const double bi = (a - b * rjk) / det;
      const double bk = (rjk - b * a) / det;
      const double mean = bi * hi + bk * hk;
      const double var = 1.0 - a * bi - rjk * bk;
      value += rik * pdf2(hi, hk, b) * conditional_cdf1(hj, mean, var);
    }
    return value;
  };
  const double integral = integrate_gk(integrand, 0.0, 1.0, kQuadTolerance, kQuadMaxDepth);
  return clamp01(base + integral);
}

// P(X_k <= u_k, X_l <= u_l) given the 2x2 conditional mean/covariance; handles
// degenerate conditional variances.
double conditional_cdf2(double uk, double ul, double mk, double ml, double ckk, double cll,
                        double ckl) noexcept {
  const bool dk = ckk <= kDegenerateVariance;
  const bool dl = cll <= kDegenerateVariance;
  if (dk && dl) return (uk >= mk && ul >= ml) ? 1.0 : 0.0;
  if (dk) {
    if (uk < mk) return 0.0;
    return phi((ul - ml) / std::sqrt(cll));
  }
  if (dl) {
    if (ul < ml) return 0.0;
    return phi((uk - mk) / std::sqrt(ckk));
  }
  const double sk = std::sqrt(ckk), sl = std::sqrt(cll);
  return bvn_unchecked((uk - mk) / sk, (ul - ml) / sl, std::clamp(ckl / (sk * sl), -1.0, 1.0));
}

// Phi_4 by Plackett's identity: split the variables into two blocks, start from the
// block-diagonal matrix (a product of two Phi_2) and integrate the derivative along
// the straight path to the actual matrix. Each derivative term is phi_2 times a
// conditional Phi_2.
double qvn_plackett(const std::array<double, 4>& h, const Corr& r) {
  static constexpr std::array<std::array<std::size_t, 4>, 3> kPartitions{{
      {0, 1, 2, 3},
      {0, 2, 1, 3},
      {0, 3, 1, 2},
  }};
  std::size_t best = 0;
  double best_cross = kInf;
  for (std::size_t p = 0; p < kPartitions.size(); ++p) {
    const auto& q = kPartitions[p];
    const double cross = std::max({std::abs(r(q[0], q[2])), std::abs(r(q[0], q[3])),
                                   std::abs(r(q[1], q[2])), std::abs(r(q[1], q[3]))});
    if (cross < best_cross) {
      best_cross = cross;
      best = p;
    }
  }
  const auto& q = kPartitions[best];
  auto in_first_block = [&](std::size_t v) { return v == q[0] || v == q[1]; };

  const double base = bvn_unchecked(h[q[0]], h[q[1]], r(q[0], q[1])) *
                      bvn_unchecked(h[q[2]], h[q[3]], r(q[2], q[3]));
  if (best_cross == 0.0) return base;

  struct CrossPair {
    std::size_t i, j, k, l;
    double rho;
  };
  std::array<CrossPair, 4> pairs{};
  std::size_t n_pairs = 0;
  for (const std::size_t i : {q[0], q[1]}) {
    for (const std::size_t j : {q[2], q[3]}) {
      if (r(i, j) == 0.0) continue;
      std::size_t others[2];
      std::size_t m = 0;
      for (std::size_t v = 0; v < 4; ++v) {
        if (v != i && v != j) others[m++] = v;
      }
      pairs[n_pairs++] = CrossPair{i, j, others[0], others[1], r(i, j)};
    }
  }

  auto corr_at = [&](std::size_t u, std::size_t v, double t) {
    if (u == v) return 1.0;
    return in_first_block(u) == in_first_block(v) ? r(u, v) : t * r(u, v);
  };

  auto integrand = [&](double t) {
    double value = 0.0;
    for (std::size_t p = 0; p < n_pairs; ++p) {
      const auto& cp = pairs[p];
      const double a = t * cp.rho;
      const double det = (1.0 - a) * (1.0 + a);
      // Rows: k, l; columns: i, j.
      const double ski = corr_at(cp.k, cp.i, t), skj = corr_at(cp.k, cp.j, t);
      const double sli = corr_at(cp.l, cp.i, t), slj = corr_at(cp.l, cp.j, t);
      // B = S_cb * inv([[1, a], [a, 1]])
      const double bki = (ski - a * skj) / det, bkj = (skj - a * ski) / det;
      const double bli = (sli - a * slj) / det, blj = (slj - a * sli) / det;
      const double mk = bki * h[cp.i] + bkj * h[cp.j];
      const double ml = bli * h[cp.i] + blj * h[cp.j];
      const double ckk = 1.0 - (bki * ski + bkj * skj);
      const double cll = 1.0 - (bli * sli + blj * slj);
      const double ckl = corr_at(cp.k, cp.l, t) - (bki * sli + bkj * slj);
      value += cp.rho * pdf2(h[cp.i], h[cp.j], a) *
               conditional_cdf2(h[cp.k], h[cp.l], mk, ml, ckk, cll, ckl);
    }
    return value;
  };
  const double integral = integrate_gk(integrand, 0.0, 1.0, kQuadTolerance, kQuadMaxDepth);
  return clamp01(base + integral);
}

double cdf_impl(std::array<double, 4> h, const Corr& r) {
  // Drop +inf limits, short-circuit on -inf.
  std::array<std::size_t, 4> keep{};
  std::size_t m = 0;
  for (std::size_t i = 0; i < r.dim; ++i) {
    if (std::isnan(h[i])) throw std::domain_error("mvn_cdf: NaN upper limit");
    if (h[i] == -kInf) return 0.0;
    if (h[i] != kInf) keep[m++] = i;
  }
  if (m < r.dim) {
    Corr sub;
    sub.dim = m;
    std::array<double, 4> hs{};
    for (std::size_t u = 0; u < m; ++u) {
      hs[u] = h[keep[u]];
      for (std::size_t v = 0; v < m; ++v) sub.at(u, v) = r(keep[u], keep[v]);
    }
    h = hs;
    return cdf_impl(h, sub);
  }
  switch (r.dim) {
    case 0:
      return 1.0;
    case 1:
      return phi(h[0]);
    case 2:
      return bvn_unchecked(h[0], h[1], r(0, 1));
    case 3:
      return tvn_plackett({h[0], h[1], h[2]}, r);
    case 4:
      return qvn_plackett(h, r);
    default:
      throw std::domain_error("mvn_cdf: dimension must be at most 4");
  }
}

}  // namespace

SmallCorrMatrix::SmallCorrMatrix(std::size_t dim, std::span<const double> entries) : dim_(dim) {
  if (dim < 2 || dim > kMaxDim) {
    throw std::domain_error("SmallCorrMatrix: dimension must be 2, 3 or 4");
  }
  if (entries.size() != dim * dim) {
    throw std::domain_error("SmallCorrMatrix: expected " + std::to_string(dim * dim) + " entries");
  }
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      const double v = entries[i * dim + j];
      if (!std::isfinite(v)) throw std::domain_error("SmallCorrMatrix: non-finite entry");
      a_[i * kMaxDim + j] = v;
    }
  }
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  for (std::size_t i = 0; i < dim; ++i) {
    if (std::abs(a_[i * kMaxDim + i] - 1.0) > 1e-12) {
      throw std::domain_error("SmallCorrMatrix: diagonal must be 1");
    }
    a_[i * kMaxDim + i] = 1.0;
    for (std::size_t j = 0; j < dim; ++j) {
      const double v = a_[i * kMaxDim + j];
      if (std::abs(v - a_[j * kMaxDim + i]) > 1e-12) {
        throw std::domain_error("SmallCorrMatrix: matrix is not symmetric");
      }
      if (std::abs(v) > 1.0) throw std::domain_error("SmallCorrMatrix: |entry| > 1");
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    }
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(m, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-10) {
    throw std::domain_error("SmallCorrMatrix: matrix is not positive semi-definite");
  }
}

SmallCorrMatrix SmallCorrMatrix::sub(std::span<const std::size_t> idx) const {
  SmallCorrMatrix out(Unchecked{}, idx.size());
  for (std::size_t u = 0; u < idx.size(); ++u) {
    for (std::size_t v = 0; v < idx.size(); ++v) {
      out.a_[u * kMaxDim + v] = (*this)(idx[u], idx[v]);
    }
  }
  return out;
}

double std_normal_cdf(double x) {
  if (!std::isfinite(x)) throw std::domain_error("std_normal_cdf: non-finite argument");
  return phi(x);
}

double std_normal_pdf(double x) noexcept {
  return std::exp(-0.5 * x * x) * (std::numbers::inv_sqrtpi / std::numbers::sqrt2);
}

double std_normal_quantile(double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::domain_error("std_normal_quantile: probability outside [0, 1]");
  }
  if (p == 0.0) return -kInf;
  if (p == 1.0) return kInf;
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double bvn_cdf(double a, double b, double rho) {
  if (std::isnan(a) || std::isnan(b) || std::isnan(rho)) {
    throw std::domain_error("bvn_cdf: NaN argument");
  }
  if (std::abs(rho) > 1.0) throw std::domain_error("bvn_cdf: |rho| > 1");
  return bvn_unchecked(a, b, rho);
}

double mvn_cdf(std::span<const double> upper, const SmallCorrMatrix& corr) {
  if (upper.size() != corr.dim()) {
    throw std::domain_error("mvn_cdf: limit count does not match matrix dimension");
  }
  Corr r;
  r.dim = corr.dim();
  std::array<double, 4> h{};
  for (std::size_t i = 0; i < r.dim; ++i) {
    h[i] = upper[i];
    for (std::size_t j = 0; j < r.dim; ++j) r.at(i, j) = corr(i, j);
  }
  return cdf_impl(h, r);
}

double tvn_cdf(const std::array<double, 3>& upper, const SmallCorrMatrix& corr) {
  if (corr.dim() != 3) throw std::domain_error("tvn_cdf: correlation matrix must be 3x3");
  return mvn_cdf(upper, corr);
}

double qvn_cdf(const std::array<double, 4>& upper, const SmallCorrMatrix& corr) {
  if (corr.dim() != 4) throw std::domain_error("qvn_cdf: correlation matrix must be 4x4");
  return mvn_cdf(upper, corr);
}

}  // namespace latcorr
