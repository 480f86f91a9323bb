#pragma once

// Synthetic latent-model data and the accuracy / timing experiments built on it.
//
// Random numbers come from Philox4x32-10 (Salmon et al., "Parallel random numbers:
// as easy as 1, 2, 3"). The 64-bit seed is the key (low word first); the counter is
// (block low, block high, stream low, stream high), so each replication reads its own
// stream. Each block yields two doubles u = (hi:lo >> 11) * 2^-53 from words (0,1)
// and (2,3), the first word of each pair being the high half. Standard normals come
// in pairs from Box-Muller on (1 - u1, u2): sqrt(-2 log(1 - u1)) * cos(2 pi u2),
// then the matching sin.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "latcorr/estimator.hpp"

namespace latcorr {

/// One Philox4x32-10 block.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key) noexcept;

/// Standard normal variates from one (seed, stream) Philox substream.
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint64_t stream) noexcept;
  double next() noexcept;

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::optional<double> spare_;
};

/// n draws of a standard bivariate normal with correlation r. Draws alternate
/// (z1, z2) per row; x = z1, y = r z1 + sqrt(1 - r^2) z2. Throws std::domain_error if |r| >= 1.
std::pair<std::vector<double>, std::vector<double>> generate_latent_pair(std::size_t n, double r,
                                                                         std::uint64_t seed,
                                                                         std::uint64_t stream = 0);

/// Shifts x by minus its k-th order statistic, k = round(n * pi0), and zeroes what is
/// not positive, leaving exactly k zeros (for distinct inputs). k = 0 shifts the minimum to 1.
std::vector<double> apply_truncation(std::span<const double> x, Probability pi0);

/// 1 where x exceeds its k-th order statistic (k = round(n * pi0)), else 0.
std::vector<double> apply_dichotomization(std::span<const double> x, Probability pi0);

struct ScenarioSpec {
  CaseKind kind = CaseKind::TC;
  double r_true = 0.5;
  /// Zero proportion of the first (canonical role) variable.
  double pi0 = 0.5;
  /// Zero proportion of the second variable for BB/TT/TB; defaults to pi0.
  std::optional<double> pi0_second;
  std::size_t n = 100;
  std::size_t replications = 100;
  std::uint64_t seed = 1;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

/// Observed pair for one replication, in canonical role order (x takes the first role).
struct SyntheticPair {
  std::vector<double> x, y;
  VariableType tx, ty;
};
SyntheticPair generate_scenario_pair(const ScenarioSpec& spec, std::uint64_t replication);

struct AccuracyCell {
  CaseKind kind;
  double r;
  double pi0;
  double pi0_second;
  double max_err_ml = 0.0, mean_err_ml = 0.0;
  double max_err_mlbd = 0.0, mean_err_mlbd = 0.0;
  /// Replications in which MLBD's boundary test sent the pair to ORG.
  std::size_t boundary_active = 0;
};

/// |ML - ORG| and |MLBD - ORG| over the replications of one scenario. Replications may
/// run on several threads; the reduction is sequential, so results are bit-identical.
AccuracyCell run_accuracy_experiment(const ScenarioSpec& spec, const GridSet& grids,
                                     unsigned threads = 1,
                                     const BoundaryConfig& boundary = {});

/// Every (r, pi0) combination of a sweep, r-major.
std::vector<AccuracyCell> run_accuracy_sweep(CaseKind kind, std::span<const double> r_values,
                                             std::span<const double> pi0_values, std::size_t n,
                                             std::size_t replications, std::uint64_t seed,
                                             const GridSet& grids, unsigned threads = 1);

/// Nine latent correlations 0.05..0.91 and eleven zero proportions 0.03..0.95.
std::vector<double> default_sweep_r();
std::vector<double> default_sweep_pi0();

/// "case,r,pi0,method,max_abs_err,mean_abs_err" with leading '#' lines recording the
/// generator, seed, n and replications.
void write_accuracy_csv(std::ostream& out, std::span<const AccuracyCell> cells, std::uint64_t seed,
                        std::size_t n, std::size_t replications);

struct TimingRow {
  CaseKind kind;
  std::size_t n;
  std::size_t replications;
  double org_us, ml_us, mlbd_us;  // median wall time per pair
  double org_over_ml() const noexcept { return org_us / ml_us; }
  double mlbd_over_ml() const noexcept { return mlbd_us / ml_us; }
};

/// Median per-pair runtime of the three methods on data with r = 0.5 and zero
/// proportions 0.5 (inside the MLBD boundary for every case). Each replication draws
/// fresh data; the methods run in rotating order on it.
std::vector<TimingRow> run_timing_benchmark(std::span<const CaseKind> cases, std::size_t n,
                                            std::size_t replications, const GridSet& grids,
                                            std::uint64_t seed = 1);

void write_timing_csv(std::ostream& out, std::span<const TimingRow> rows);

}  // namespace latcorr
