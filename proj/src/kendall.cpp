#include "latcorr/kendall.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <stdexcept>
#include <vector>

namespace latcorr {

namespace {

void check_pair(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::domain_error("kendall_tau_a: length mismatch");
  if (x.size() < 2) throw std::domain_error("kendall_tau_a: need at least two observations");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw std::domain_error("kendall_tau_a: non-finite observation");
    }
  }
}

// Number of pairs within runs of equal adjacent values.
template <typename Eq>
std::int64_t tied_pairs(std::size_t n, Eq equal) {
  std::int64_t pairs = 0;
  std::int64_t run = 1;
  for (std::size_t i = 1; i < n; ++i) {
    if (equal(i - 1, i)) {
      ++run;
    } else {
      pairs += run * (run - 1) / 2;
      run = 1;
    }
  }
  pairs += run * (run - 1) / 2;
  return pairs;
}

// Sorts `v` ascending; returns the number of strict inversions (i < j, v[i] > v[j]).
std::int64_t merge_count(std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<double> buf(n);
  std::int64_t inversions = 0;
  for (std::size_t width = 1; width < n; width *= 2) {
    for (std::size_t lo = 0; lo < n; lo += 2 * width) {
      const std::size_t mid = std::min(lo + width, n);
      const std::size_t hi = std::min(lo + 2 * width, n);
      std::size_t i = lo, j = mid, out = lo;
      while (i < mid && j < hi) {
        if (v[j] < v[i]) {
          inversions += static_cast<std::int64_t>(mid - i);
          buf[out++] = v[j++];
        } else {
          buf[out++] = v[i++];
        }
      }
      while (i < mid) buf[out++] = v[i++];
      while (j < hi) buf[out++] = v[j++];
    }
    v.swap(buf);
  }
  return inversions;
}

double normalize(std::int64_t s, std::size_t n) {
  const auto n64 = static_cast<std::int64_t>(n);
  return static_cast<double>(s) / static_cast<double>(n64 * (n64 - 1) / 2);
}

}  // namespace

double kendall_tau_a(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  const std::size_t n = x.size();

  // Sorting by x, then y, puts every tie block in y order.
  std::vector<std::pair<double, double>> xy(n);
  for (std::size_t i = 0; i < n; ++i) xy[i] = {x[i], y[i]};
  std::sort(xy.begin(), xy.end());

  std::vector<double> ys(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = xy[i].second;

  const std::int64_t x_ties = tied_pairs(n, [&](std::size_t a, std::size_t b) { return xy[a].first == xy[b].first; });
  const std::int64_t joint_ties = tied_pairs(n, [&](std::size_t a, std::size_t b) { return xy[a] == xy[b]; });
  // Within an x-tie the order is by y, so every inversion is a discordant pair.
  const std::int64_t discordant = merge_count(ys);
  const std::int64_t y_ties = tied_pairs(n, [&](std::size_t a, std::size_t b) { return ys[a] == ys[b]; });

  const auto n64 = static_cast<std::int64_t>(n);
  const std::int64_t total = n64 * (n64 - 1) / 2;
  const std::int64_t concordant = total - x_ties - y_ties + joint_ties - discordant;
  return normalize(concordant - discordant, n);
}

double kendall_tau_a_bruteforce(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  auto sign = [](double d) { return (d > 0.0) - (d < 0.0); };
  std::int64_t s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      s += sign(x[i] - x[j]) * sign(y[i] - y[j]);
    }
  }
  return normalize(s, x.size());
}

Probability zero_proportion(std::span<const double> x) {
  if (x.empty()) return Probability(0.0);
  const auto zeros = std::count(x.begin(), x.end(), 0.0);
  return Probability(static_cast<double>(zeros) / static_cast<double>(x.size()));
}

}  // namespace latcorr
