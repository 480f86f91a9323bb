#pragma once

// Shared helpers for the unit suites: grid access and small independent oracles.

#include <cmath>
#include <filesystem>
#include <map>
#include <mutex>
#include <random>
#include <vector>

#include "latcorr/estimator.hpp"
#include "latcorr/interp.hpp"

namespace testing {

// Grids from the ctest fixture directory. The cheap two-axis grids are built in
// process when the fixture has not run; the others must come from the fixture.
inline const latcorr::InterpolationGrid* fixture_grid(latcorr::CaseKind c) {
  static std::mutex mu;
  static std::map<latcorr::CaseKind, latcorr::InterpolationGrid> cache;
  std::lock_guard lock(mu);
  if (auto it = cache.find(c); it != cache.end()) return &it->second;
  const auto path = std::filesystem::path(LATCORR_TEST_GRID_DIR) / (latcorr::to_string(c) + ".lcg");
  if (std::filesystem::exists(path)) {
    return &cache.emplace(c, latcorr::load_grid(path.string())).first->second;
  }
  if (c == latcorr::CaseKind::TC || c == latcorr::CaseKind::BC || c == latcorr::CaseKind::BB) {
    return &cache.emplace(c, latcorr::precompute_grid(c)).first->second;
  }
  return nullptr;
}

inline latcorr::GridSet grid_set(std::initializer_list<latcorr::CaseKind> cases) {
  latcorr::GridSet set;
  for (auto c : cases) {
    if (const auto* g = fixture_grid(c)) set.insert(*g);
  }
  return set;
}

// Literal double loop of signs; the tau-a definition.
inline double tau_a_literal(const std::vector<double>& x, const std::vector<double>& y) {
  auto sgn = [](double v) { return (v > 0) - (v < 0); };
  long long s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) s += sgn(x[i] - x[j]) * sgn(y[i] - y[j]);
  }
  const double pairs = 0.5 * static_cast<double>(x.size()) * static_cast<double>(x.size() - 1);
  return static_cast<double>(s) / pairs;
}

// Phi(x) from the Maclaurin series of erf, summed in long double. Accurate for |x| <= 3.
inline double phi_series(double x) {
  const long double z = static_cast<long double>(x) / std::sqrt(2.0L);
  long double term = z, sum = z;
  for (int n = 1; n < 200; ++n) {
    term *= -z * z / n;
    sum += term / (2 * n + 1);
  }
  const long double erf = 2.0L / std::sqrt(3.14159265358979323846264338327950288L) * sum;
  return static_cast<double>(0.5L * (1.0L + erf));
}

// Correlation matrices of the bridge functions, written out independently of the library.
inline std::vector<double> sigma3(double r) {
  const double s = std::sqrt(0.5);
  return {1, s, r * s, s, 1, r, r * s, r, 1};
}
inline std::vector<double> sigma4a(double r) {
  const double s = std::sqrt(0.5);
  return {1, 0, s, -r * s, 0, 1, -r * s, s, s, -r * s, 1, -r, -r * s, s, -r, 1};
}
inline std::vector<double> sigma4b(double r) {
  const double s = std::sqrt(0.5);
  return {1, r, s, r * s, r, 1, r * s, s, s, r * s, 1, r, r * s, s, r, 1};
}

// Plain Monte Carlo P(X <= upper) for X ~ N(0, corr); returns (estimate, standard error).
inline std::pair<double, double> mc_orthant(const std::vector<double>& corr,
                                            const std::vector<double>& upper, long samples,
                                            unsigned seed) {
  const std::size_t d = upper.size();
  // Cholesky factor.
  std::vector<double> L(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = corr[i * d + j];
      for (std::size_t k = 0; k < j; ++k) s -= L[i * d + k] * L[j * d + k];
      L[i * d + j] = i == j ? std::sqrt(s) : s / L[j * d + j];
    }
  }
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  long hits = 0;
  std::vector<double> z(d);
  for (long s = 0; s < samples; ++s) {
    for (auto& v : z) v = nd(gen);
    bool in = true;
    for (std::size_t i = 0; i < d && in; ++i) {
      double xi = 0.0;
      for (std::size_t k = 0; k <= i; ++k) xi += L[i * d + k] * z[k];
      in = xi <= upper[i];
    }
    hits += in;
  }
  const double p = static_cast<double>(hits) / static_cast<double>(samples);
  return {p, std::sqrt(p * (1 - p) / static_cast<double>(samples))};
}

}  // namespace testing
