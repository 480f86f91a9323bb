#pragma once

// Pairwise latent correlation estimation and matrix assembly.

#include <array>
#include <exception>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "latcorr/interp.hpp"
#include "latcorr/types.hpp"

namespace latcorr {

enum class EstimationMethod : unsigned char { org, ml, mlbd };

/// How a particular r_hat was obtained.
enum class MethodUsed : unsigned char { closed_form, org, ml };

/// Why an ML/MLBD request ended up on ORG.
enum class Fallback : unsigned char { none, boundary, out_of_hull };

std::string to_string(EstimationMethod m);
std::string to_string(MethodUsed m);
std::string to_string(Fallback f);
EstimationMethod parse_estimation_method(const std::string& s);

/// A column that admits no correlation (constant binary, all-zero truncated).
class DegenerateVariableError : public std::runtime_error {
 public:
  explicit DegenerateVariableError(std::string column, const std::string& why);
  const std::string& column() const noexcept { return column_; }

 private:
  std::string column_;
};

/// ML/MLBD requested for a case whose grid was not supplied.
class MissingGridError : public std::runtime_error {
 public:
  explicit MissingGridError(CaseKind c);
  CaseKind kind() const noexcept { return kind_; }

 private:
  CaseKind kind_;
};

/// Data that violates its declared type (e.g. a 2 in a binary column).
class InvalidColumnError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A pair failure inside estimate_matrix, carrying the pair coordinates and the
/// original exception.
class PairError : public std::runtime_error {
 public:
  PairError(std::size_t i, std::size_t j, const std::string& name_i, const std::string& name_j,
            const std::string& what, std::exception_ptr cause);
  std::size_t first() const noexcept { return i_; }
  std::size_t second() const noexcept { return j_; }
  const std::exception_ptr& cause() const noexcept { return cause_; }

 private:
  std::size_t i_, j_;
  std::exception_ptr cause_;
};

struct PairClass {
  CaseKind kind;
  /// The second variable plays the first bridge role (e.g. (continuous, truncated) -> TC).
  bool swap;
};

PairClass classify_pair(VariableType a, VariableType b) noexcept;

/// Approximate attainable bound on |tau_hat|. Proportions in canonical role order
/// (truncated first for TC/TB; for TB the second is binary). CC returns 1.
double abd(CaseKind c, Probability pi0_first, Probability pi0_second = Probability{});

/// Boundary constant c of the MLBD rule |tau_hat| <= c * ABD, with per-case overrides.
struct BoundaryConfig {
  double constant = 0.9;
  std::array<std::optional<double>, 6> overrides{};

  double for_case(CaseKind c) const noexcept {
    const auto& o = overrides[static_cast<std::size_t>(c)];
    return o ? *o : constant;
  }
};

/// Grids by case; any subset may be present.
class GridSet {
 public:
  void insert(InterpolationGrid grid);
  const InterpolationGrid* find(CaseKind c) const noexcept;

  /// Loads "<case>.lcg" for every requested case found in `dir`. Missing files are
  /// skipped (estimation reports them); malformed files throw FormatError.
  static GridSet load_directory(const std::string& dir, std::span<const CaseKind> cases);

 private:
  std::array<std::optional<InterpolationGrid>, 6> grids_;
};

struct PairStatistics {
  double tau_hat = 0.0;
  Probability pi0_x;
  Probability pi0_y;
  /// Phi^{-1}(pi0) for binary/truncated variables (possibly infinite); nullopt for continuous.
  std::optional<double> delta_x;
  std::optional<double> delta_y;
};

struct PairEstimate {
  double r_hat = 0.0;
  CaseKind kind = CaseKind::CC;
  MethodUsed method_used = MethodUsed::closed_form;
  Fallback fallback = Fallback::none;
  bool saturated = false;
  PairStatistics stats;
};

struct EstimateOptions {
  EstimationMethod method = EstimationMethod::mlbd;
  BoundaryConfig boundary;
};

/// Estimates the latent correlation of one pair. Throws DegenerateVariableError,
/// MissingGridError (ML/MLBD without the pair's grid), InvalidColumnError.
PairEstimate estimate_pair(std::span<const double> x, std::span<const double> y, VariableType tx,
                           VariableType ty, const EstimateOptions& options, const GridSet& grids,
                           std::string_view name_x = "x", std::string_view name_y = "y");

/// n x p observations, stored column by column.
class DataMatrix {
 public:
  DataMatrix(std::vector<std::string> names, std::size_t rows, std::vector<double> column_major);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return names_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  std::span<const double> column(std::size_t j) const noexcept {
    return {data_.data() + j * rows_, rows_};
  }

 private:
  std::vector<std::string> names_;
  std::size_t rows_;
  std::vector<double> data_;
};

/// binary: values within {0, 1} and both present. truncated: all >= 0, at least one
/// zero and at least two distinct nonzero values. Otherwise continuous.
/// Throws std::invalid_argument on an empty column.
VariableType infer_type(std::span<const double> column);
std::vector<VariableType> infer_types(const DataMatrix& data);

enum class ErrorPolicy : unsigned char { abort, skip };

struct EntryProvenance {
  CaseKind kind = CaseKind::CC;
  MethodUsed method_used = MethodUsed::closed_form;
  Fallback fallback = Fallback::none;
  bool saturated = false;
  /// Set when the pair failed under ErrorPolicy::skip; the entry is NaN.
  std::optional<std::string> error;
};

struct LatentCorrelationMatrix {
  std::vector<std::string> names;
  std::vector<double> values;  // p x p row-major, symmetric, unit diagonal
  std::vector<EntryProvenance> provenance;

  std::size_t dim() const noexcept { return names.size(); }
  double operator()(std::size_t i, std::size_t j) const noexcept { return values[i * dim() + j]; }
};

struct MatrixOptions {
  EstimateOptions estimate;
  unsigned threads = 1;
  ErrorPolicy on_error = ErrorPolicy::abort;
};

/// Estimates every pair independently; output does not depend on the thread count.
/// Under ErrorPolicy::abort the first failing pair in (i, j) order raises PairError.
LatentCorrelationMatrix estimate_matrix(const DataMatrix& data, std::span<const VariableType> types,
                                        const MatrixOptions& options, const GridSet& grids);

}  // namespace latcorr
