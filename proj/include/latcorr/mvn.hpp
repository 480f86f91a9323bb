#pragma once

// Standard normal and low-dimensional (d <= 4) multivariate normal CDFs.
//
// Infinite upper limits are passed as +/- std::numeric_limits<double>::infinity()
// and short-circuit to lower-dimensional CDFs. Every routine is deterministic
// (fixed Gauss-Legendre nodes, deterministic adaptive Gauss-Kronrod) and free of
// shared mutable state.

#include <array>
#include <cstddef>
#include <span>

namespace latcorr {

/// Absolute accuracy targets of the CDF routines. Downstream tests use these as slack.
inline constexpr double kBvnTolerance = 1e-12;
inline constexpr double kTvnTolerance = 1e-7;
inline constexpr double kQvnTolerance = 1e-6;

/// Validated correlation matrix of dimension 2, 3 or 4.
///
/// Construction checks symmetry, unit diagonal, |entries| <= 1 and positive
/// semi-definiteness up to 1e-10 (smallest eigenvalue >= -1e-10). Throws
/// std::domain_error otherwise.
class SmallCorrMatrix {
 public:
  static constexpr std::size_t kMaxDim = 4;

  /// `entries` is a row-major dim x dim matrix.
  SmallCorrMatrix(std::size_t dim, std::span<const double> entries);

  std::size_t dim() const noexcept { return dim_; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return a_[i * kMaxDim + j]; }

  /// Principal submatrix on the given index set (already validated, so unchecked).
  SmallCorrMatrix sub(std::span<const std::size_t> idx) const;

 private:
  struct Unchecked {};
  SmallCorrMatrix(Unchecked, std::size_t dim) noexcept : dim_(dim) {}

  std::size_t dim_ = 0;
  std::array<double, kMaxDim * kMaxDim> a_{};
};

/// Phi(x). Throws std::domain_error for non-finite x.
double std_normal_cdf(double x);

/// Standard normal density.
double std_normal_pdf(double x) noexcept;

/// Phi^{-1}(p). Returns -inf for p == 0 and +inf for p == 1 (the infinite-threshold
/// condition the caller must handle); throws std::domain_error outside [0, 1].
double std_normal_quantile(double p);

/// P(X <= a, Y <= b) for a standard bivariate normal with correlation rho.
/// a, b may be infinite. Throws std::domain_error when |rho| > 1 or an argument is NaN.
double bvn_cdf(double a, double b, double rho);

/// Trivariate normal CDF with unit variances. Accuracy kTvnTolerance (observed ~1e-12).
double tvn_cdf(const std::array<double, 3>& upper, const SmallCorrMatrix& corr);

/// Quadrivariate normal CDF with unit variances. Accuracy kQvnTolerance (observed ~1e-10).
double qvn_cdf(const std::array<double, 4>& upper, const SmallCorrMatrix& corr);

/// Dimension-generic entry point (d in 1..4) used by the fixed-size wrappers.
double mvn_cdf(std::span<const double> upper, const SmallCorrMatrix& corr);

}  // namespace latcorr
