#pragma once

#include <span>

#include "latcorr/types.hpp"

namespace latcorr {

/// Sample Kendall's tau-a: the sum over i < i' of sign(x_i - x_i') sign(y_i - y_i'),
/// divided by n(n-1)/2. Tied pairs contribute zero and the denominator is not
/// tie-corrected. O(n log n) merge-count of discordant pairs.
///
/// Throws std::domain_error on a length mismatch or n < 2.
double kendall_tau_a(std::span<const double> x, std::span<const double> y);

/// Literal O(n^2) double loop; the reference the fast path is tested against.
double kendall_tau_a_bruteforce(std::span<const double> x, std::span<const double> y);

/// Fraction of entries exactly equal to 0.0.
Probability zero_proportion(std::span<const double> x);

}  // namespace latcorr
