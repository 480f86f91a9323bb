#pragma once

// CSV ingestion of datasets and type declarations, and CSV output of estimated matrices.

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "latcorr/estimator.hpp"

namespace latcorr {

/// Malformed dataset or type-spec input; the message names the line.
class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Header row of column names, then one row per sample. Cells are decimal reals;
/// empty cells, ragged rows, fewer than 2 rows or 2 columns are rejected.
DataMatrix read_dataset_csv(std::istream& in);
DataMatrix read_dataset_file(const std::string& path);

/// Lines "<name>,<continuous|binary|truncated>" covering every column exactly once.
/// Returns the types in dataset column order.
std::vector<VariableType> read_type_spec(std::istream& in, const std::vector<std::string>& names);
std::vector<VariableType> read_type_spec_file(const std::string& path,
                                              const std::vector<std::string>& names);

/// p x p matrix with the variable names as header; %.17g numbers, NaN for skipped pairs.
void write_matrix_csv(std::ostream& out, const LatentCorrelationMatrix& m);

/// One row per pair i < j: "var_i,var_j,case,method,fallback,saturated,error".
void write_provenance_csv(std::ostream& out, const LatentCorrelationMatrix& m);

}  // namespace latcorr
