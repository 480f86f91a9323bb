#pragma once

// Precomputed inverse-bridge tables and multilinear interpolation on them.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "latcorr/bridge.hpp"
#include "latcorr/types.hpp"

namespace latcorr {

/// Strictly increasing grid coordinates along one axis.
class GridAxis {
 public:
  /// Throws std::domain_error unless `points` has >= 2 finite, strictly increasing entries.
  explicit GridAxis(std::vector<double> points);

  std::span<const double> points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }
  double front() const noexcept { return points_.front(); }
  double back() const noexcept { return points_.back(); }
  /// Largest spacing between adjacent points.
  double h_max() const noexcept { return h_max_; }

  struct Cell {
    std::size_t lower = 0;
    double alpha = 0.0;  // (x - x0) / (x1 - x0)
  };
  /// Cell containing x and its local coordinate, or nullopt outside [front, back].
  std::optional<Cell> locate(double x) const;

  friend bool operator==(const GridAxis& a, const GridAxis& b) { return a.points_ == b.points_; }

 private:
  std::vector<double> points_;
  double h_max_ = 0.0;
};

/// tau axis: 199 points -0.99..0.99 step 0.01 for TC/TT; for BC/BB/TB the mirrored
/// sequence c(-rev(t1), 0, t1), t1 = (0.001, 0.006, .., 0.091, 0.101, 0.108, .., 0.5).
/// Throws std::invalid_argument for CC.
GridAxis build_tau_axis(CaseKind c);

/// Threshold axis (Delta = Phi^{-1}(pi0)), 50 points.
/// binary: pi0 = 0.01..0.99 evenly spaced.
/// truncated: pi0 = log10 of 50 evenly spaced points in [1, 10^0.99]; the first pi0 is 0
/// (Delta = -inf), so it is replaced by half the second pi0.
/// Throws std::invalid_argument for continuous.
GridAxis build_delta_axis(VariableType t);

/// Threshold-axis types of a case, in bridge role order.
std::vector<VariableType> delta_axis_types(CaseKind c);

/// Inverse bridge values F^{-1}(tau, delta...) tabulated on a tensor grid.
/// Values are row-major over (tau, delta1[, delta2]).
class InterpolationGrid {
 public:
  static constexpr std::uint8_t kFormatVersion = 1;

  /// Validates shape, value range [-0.999, 0.999] and monotonicity along tau.
  InterpolationGrid(CaseKind c, GridAxis tau, std::vector<GridAxis> deltas,
                    std::vector<double> values);

  CaseKind kind() const noexcept { return kind_; }
  const GridAxis& tau_axis() const noexcept { return tau_; }
  std::span<const GridAxis> delta_axes() const noexcept { return deltas_; }
  std::span<const double> values() const noexcept { return values_; }
  std::size_t dimension() const noexcept { return 1 + deltas_.size(); }

  /// Format version and optimizer tolerance the values were produced with.
  std::uint8_t version() const noexcept { return kFormatVersion; }
  double creation_tolerance() const noexcept { return kOrgTolerance; }

  /// Max spacing over all axes (the h of the interpolation error bounds).
  double h_max() const noexcept;

  double at(std::size_t tau_index, std::size_t d1 = 0, std::size_t d2 = 0) const noexcept;

  friend bool operator==(const InterpolationGrid& a, const InterpolationGrid& b) = default;

 private:
  CaseKind kind_;
  GridAxis tau_;
  std::vector<GridAxis> deltas_;
  std::vector<double> values_;
};

struct PrecomputeOptions {
  unsigned threads = 1;
  /// Called with (completed columns, total columns); calls are serialized.
  std::function<void(std::size_t, std::size_t)> progress;
};

/// Fills the default grid for `c` with bridge_inverse_org. Deterministic for any thread
/// count. Throws std::invalid_argument for CC; NumericalError with grid coordinates.
InterpolationGrid precompute_grid(CaseKind c, const PrecomputeOptions& options = {});

/// Multilinear (bi-/trilinear) interpolation at (tau, deltas...), clamped to [-1, 1].
/// nullopt when the query lies outside the grid hull.
std::optional<double> multilinear_interpolate(const InterpolationGrid& grid, double tau,
                                              const Thresholds& deltas);

/// Interpolation error bounds for the inverse bridge function.
/// BC: 2 h^2 |r| (2M^2 + 1) exp(M^2), for |Delta| <= M.
/// TC: 4 h^2 / Phi(-sqrt2 M)^2 * max(|r| / Phi(-sqrt2 M), sqrt(1 - r^2)), for Delta <= M.
/// Throws std::invalid_argument for any other case.
double interpolation_error_bound(CaseKind c, double h, double M, double r);

/// Malformed grid file; offset() is the byte position where parsing failed.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t offset);
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// "LCG1" grid file, little-endian:
///   "LCG1" | u8 case tag | u8 axis count | per axis: u32 length, length x f64 |
///   row-major f64 values | u32 CRC-32 of all preceding bytes.
void serialize_grid(const InterpolationGrid& grid, std::ostream& out);
InterpolationGrid deserialize_grid(std::istream& in);

void save_grid(const InterpolationGrid& grid, const std::string& path);
InterpolationGrid load_grid(const std::string& path);

}  // namespace latcorr
